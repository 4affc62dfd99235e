"""scikit-learn compatible imputers.

All imputers take a 2-D float array with ``NaN`` marking missing cells.
``fit`` remembers the complete rows; ``transform`` fills every ``NaN`` using
only observed values and those complete rows, never earlier imputations.
"""

from __future__ import annotations

import math
import threading
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .exceptions import ImputationError, NoCompleteTuplesError
from .impute import WEIGHT_MODES, ImputationResult, impute_tuple
from .learner import ModelFileError, ModelSet, learn_adaptive, learn_fixed
from .neighbors import NeighborIndex, build_index
from .regression import DEFAULT_ALPHA


def default_step(n: int) -> int:
    """Grid stride used when none is given: exhaustive up to 1000 tuples."""
    return 1 if n <= 1000 else math.ceil(n / 200)


def missing_patterns(X: np.ndarray) -> dict[tuple[int, ...], list[int]]:
    """Rows with missing cells keyed by the tuple of missing columns."""
    groups: dict[tuple[int, ...], list[int]] = {}
    mask = np.isnan(X)
    for i in np.flatnonzero(mask.any(axis=1)):
        groups.setdefault(tuple(np.flatnonzero(mask[i]).tolist()), []).append(int(i))
    return groups


class BaseImputer(TransformerMixin, BaseEstimator):
    """Shared fit/transform plumbing; subclasses implement ``_impute_pattern``."""

    n_jobs = None

    def _validate(self, X, reset=False):
        X = check_array(X, dtype=np.float64, ensure_all_finite="allow-nan", copy=True)
        if reset:
            if X.shape[1] < 2:
                raise ValueError("need at least 2 attributes")
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} "
                f"was fitted with {self.n_features_in_}"
            )
        return X

    def fit(self, X, y=None):
        X = self._validate(X, reset=True)
        complete = ~np.isnan(X).any(axis=1)
        if not complete.any():
            raise NoCompleteTuplesError()
        self.complete_rows_ = np.flatnonzero(complete)
        self.complete_ = X[complete]
        self._lock = threading.RLock()
        self._indexes: dict[tuple[int, ...], NeighborIndex] = {}
        self._prepare(missing_patterns(X))
        return self

    def _prepare(self, patterns):
        pass

    def _index_for(self, features) -> NeighborIndex:
        features = tuple(features)
        with self._lock:
            if features not in self._indexes:
                self._indexes[features] = build_index(
                    self.complete_[:, list(features)], features, getattr(self, "normalize", False)
                )
            return self._indexes[features]

    def transform(self, X):
        return self.transform_explain(X)[0]

    def transform_explain(self, X):
        """Like ``transform`` but also returns one :class:`ImputationResult`
        per filled cell, ordered by row then attribute."""
        check_is_fitted(self, "complete_")
        X = self._validate(X)
        out = X.copy()
        jobs = []
        for missing, rows in missing_patterns(X).items():
            features = tuple(a for a in range(X.shape[1]) if a not in missing)
            if not features:
                raise ImputationError(f"rows {rows[:5]} have no observed attribute")
            jobs.append((missing, features, rows))
        results: list[ImputationResult] = []
        for missing, features, rows in jobs:
            for res in self._impute_pattern(X, missing, features, rows):
                out[res.row, res.attribute] = res.value
                results.append(res)
        results.sort(key=lambda r: (r.row, r.attribute))
        return out, results

    def _map(self, fn, items):
        n_jobs = self.n_jobs or 1
        if n_jobs == 1 or len(items) < 2:
            return [fn(x) for x in items]
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            return list(ex.map(fn, items))

    def _impute_pattern(self, X, missing, features, rows):
        raise NotImplementedError


class IIMImputer(BaseImputer):
    """Imputation via individual models.

    Every complete tuple owns a ridge regression fitted on its ``ell`` nearest
    complete tuples. A missing value is predicted by the models of the ``k``
    nearest complete tuples and the predictions are combined by voting.

    Parameters
    ----------
    k : int
        Imputation neighbours (also the validation neighbourhood size when
        ``ell="adaptive"``).
    ell : int or "adaptive"
        Learning neighbours per model, or per-tuple selection by validation.
    step : int or None
        Stride of the adaptive grid; ``None`` picks :func:`default_step`.
    alpha : float
        Ridge penalty.
    weight_mode : {"vote", "uniform"}
    normalize : bool
        z-score attributes for distance computations only.
    n_jobs : int or None
        Worker threads; results do not depend on it.
    """

    def __init__(self, k=10, ell="adaptive", step=None, alpha=DEFAULT_ALPHA,
                 weight_mode="vote", normalize=False, n_jobs=None):
        self.k = k
        self.ell = ell
        self.step = step
        self.alpha = alpha
        self.weight_mode = weight_mode
        self.normalize = normalize
        self.n_jobs = n_jobs

    def _check_params(self):
        if int(self.k) < 1:
            raise ValueError("k must be >= 1")
        if self.alpha < 0:
            raise ValueError("alpha must be >= 0")
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(f"weight_mode must be one of {WEIGHT_MODES}")
        if self.ell != "adaptive" and int(self.ell) < 1:
            raise ValueError("ell must be >= 1 or 'adaptive'")
        if self.step is not None and int(self.step) < 1:
            raise ValueError("step must be >= 1")

    def fit(self, X, y=None, models=None):
        """Remember the complete rows and learn models for every missing
        pattern in ``X``. ``models`` (from :func:`iim.learner.load_models`)
        are installed first and not relearned."""
        self._check_params()
        self.model_sets_: dict[tuple[tuple[int, ...], int], ModelSet] = {}
        self._preloaded = list(models or ())
        return super().fit(X, y)

    @property
    def step_(self) -> int:
        return int(self.step) if self.step is not None else default_step(self.complete_.shape[0])

    def _prepare(self, patterns):
        if self._preloaded:
            self.set_models(self._preloaded)
        m = self.n_features_in_
        pairs = []
        for missing in patterns:
            features = tuple(a for a in range(m) if a not in missing)
            if features:
                pairs.extend((features, a) for a in missing)
        self._map(lambda p: self.models_for(*p), pairs)

    def models_for(self, features, target) -> ModelSet:
        """The model set for predicting ``target`` from ``features``,
        learned on first use."""
        key = (tuple(features), int(target))
        with self._lock:
            if key in self.model_sets_:
                return self.model_sets_[key]
        index = self._index_for(key[0])
        if self.ell == "adaptive":
            ms = learn_adaptive(self.complete_, key[0], key[1], int(self.k), self.alpha, self.step_, index)
        else:
            ms = learn_fixed(self.complete_, key[0], key[1], int(self.ell), self.alpha, index)
        ms.rows = self.complete_rows_
        with self._lock:
            return self.model_sets_.setdefault(key, ms)

    def set_models(self, model_sets):
        """Install previously learned model sets (see ``iim.learner.load_models``)."""
        check_is_fitted(self, "complete_")
        n = self.complete_.shape[0]
        for ms in model_sets:
            if ms.n != n:
                raise ModelFileError(f"model set has {ms.n} models, relation has {n} complete tuples")
            if ms.rows is not None and not np.array_equal(ms.rows, self.complete_rows_):
                raise ModelFileError("model set was learned on different complete tuples")
            with self._lock:
                self.model_sets_[(tuple(ms.features), int(ms.target))] = ms
        return self

    def _impute_pattern(self, X, missing, features, rows):
        index = self._index_for(features)
        sets = {a: self.models_for(features, a) for a in missing}
        k = int(self.k)

        def one(i):
            return impute_tuple(X[i], missing, features, sets, index, k, self.weight_mode, row=i)

        return [r for res in self._map(one, rows) for r in res]
