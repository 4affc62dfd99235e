"""Reference imputers: global mean, kNN mean, global linear regression and
local (unweighted) linear regression over the imputation neighbours."""

from __future__ import annotations

import numpy as np

from .estimator import BaseImputer
from .exceptions import ImputationError
from .impute import ImputationResult
from .neighbors import build_index
from .regression import DEFAULT_ALPHA, predict, ridge_fit

BASELINES = ("mean", "knn", "glr", "loess")


def impute_mean(r, target) -> float:
    return float(np.mean(np.asarray(r, dtype=np.float64)[:, target]))


def impute_knn(t_f, r, features, target, k, index=None) -> float:
    """Mean target value of the ``k`` nearest complete tuples."""
    r = np.asarray(r, dtype=np.float64)
    if index is None:
        index = build_index(r[:, list(features)], features)
    nb = index.query(t_f, k)
    return float(np.mean(r[nb, target]))


def impute_glr(t_f, r, features, target, alpha=DEFAULT_ALPHA) -> float:
    """Prediction of one ridge model fitted on all complete tuples."""
    r = np.asarray(r, dtype=np.float64)
    model = ridge_fit(r[:, list(features)], r[:, target], alpha)
    return predict(model.phi, t_f)


def impute_loess(t_f, r, features, target, k, alpha=DEFAULT_ALPHA, index=None) -> float:
    """Prediction of one ridge model fitted on the ``k`` nearest complete
    tuples of ``t_f`` (no distance weighting)."""
    if k < 2:
        raise ValueError("loess needs k >= 2")
    r = np.asarray(r, dtype=np.float64)
    if index is None:
        index = build_index(r[:, list(features)], features)
    nb = index.query(t_f, k)
    if nb.shape[0] < 2:
        raise ImputationError("loess needs at least 2 complete tuples")
    model = ridge_fit(r[nb][:, list(features)], r[nb, target], alpha)
    return predict(model.phi, t_f)


def _result(row, attribute, value, nb=()):
    nb = np.asarray(nb, dtype=np.intp)
    return ImputationResult(row, attribute, float(value), nb, np.array([value]),
                            np.zeros(1), np.ones(1))


class MeanImputer(BaseImputer):
    """Column mean over the complete tuples."""

    def __init__(self, n_jobs=None):
        self.n_jobs = n_jobs

    def _impute_pattern(self, X, missing, features, rows):
        means = {a: impute_mean(self.complete_, a) for a in missing}
        return [_result(i, a, means[a]) for i in rows for a in missing]


class KNNMeanImputer(BaseImputer):
    """Arithmetic mean over the ``k`` nearest complete tuples."""

    def __init__(self, k=10, normalize=False, n_jobs=None):
        self.k = k
        self.normalize = normalize
        self.n_jobs = n_jobs

    def _impute_pattern(self, X, missing, features, rows):
        index = self._index_for(features)
        r = self.complete_

        def one(i):
            nb = index.query(X[i, list(features)], int(self.k))
            return [_result(i, a, float(np.mean(r[nb, a])), nb) for a in missing]

        return [x for res in self._map(one, rows) for x in res]


class GLRImputer(BaseImputer):
    """One global ridge regression per (features, target)."""

    def __init__(self, alpha=DEFAULT_ALPHA, n_jobs=None):
        self.alpha = alpha
        self.n_jobs = n_jobs

    def _impute_pattern(self, X, missing, features, rows):
        r = self.complete_
        if r.shape[0] < 2:
            raise ImputationError("glr needs at least 2 complete tuples")
        f = list(features)
        models = {a: ridge_fit(r[:, f], r[:, a], self.alpha) for a in missing}
        return [_result(i, a, predict(models[a].phi, X[i, f])) for i in rows for a in missing]


class LoessImputer(BaseImputer):
    """Unweighted local ridge regression over the ``k`` nearest complete tuples."""

    def __init__(self, k=10, alpha=DEFAULT_ALPHA, normalize=False, n_jobs=None):
        self.k = k
        self.alpha = alpha
        self.normalize = normalize
        self.n_jobs = n_jobs

    def _impute_pattern(self, X, missing, features, rows):
        if int(self.k) < 2:
            raise ValueError("loess needs k >= 2")
        index = self._index_for(features)
        r = self.complete_
        f = list(features)

        def one(i):
            t_f = X[i, f]
            nb = index.query(t_f, int(self.k))
            if nb.shape[0] < 2:
                raise ImputationError("loess needs at least 2 complete tuples")
            out = []
            for a in missing:
                model = ridge_fit(r[nb][:, f], r[nb, a], self.alpha)
                out.append(_result(i, a, predict(model.phi, t_f), nb))
            return out

        return [x for res in self._map(one, rows) for x in res]
