"""Imputation from individual models: candidates from each imputation
neighbour's model, combined by mutual voting."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import ImputationError
from .learner import ModelSet
from .neighbors import NeighborIndex

WEIGHT_MODES = ("vote", "uniform")


@dataclass(frozen=True, eq=False)
class ImputationResult:
    row: int
    attribute: int
    value: float
    neighbor_ids: np.ndarray
    candidates: np.ndarray
    spreads: np.ndarray
    weights: np.ndarray


def candidates(t_f, neighbors, models: ModelSet) -> np.ndarray:
    """Value each neighbour's model predicts at ``t_f``."""
    return models.predict(neighbors, t_f)


def combine(cands, weight_mode: str = "vote"):
    """Aggregate candidates into one value.

    ``vote`` weighs candidate ``i`` by the inverse of its summed absolute
    distance to all candidates, so agreeing candidates dominate and outliers
    fade. ``uniform`` takes the plain mean. Returns ``(value, spreads, weights)``.
    """
    c = np.asarray(cands, dtype=np.float64)
    if c.ndim != 1 or c.shape[0] < 1:
        raise ValueError("need at least one candidate")
    k = c.shape[0]
    spreads = np.abs(c[:, None] - c[None, :]).sum(axis=1)
    if weight_mode == "uniform":
        return float(np.mean(c)), spreads, np.full(k, 1.0 / k)
    if weight_mode != "vote":
        raise ValueError(f"unknown weight mode {weight_mode!r}")
    if not np.any(spreads > 0):
        return float(c[0]), spreads, np.full(k, 1.0 / k)
    # scaled by the smallest spread so tiny spreads cannot overflow 1/c
    inv = spreads.min() / spreads
    w = inv / inv.sum()
    value = float(np.dot(w, c))
    return float(np.clip(value, c.min(), c.max())), spreads, w


def impute_tuple(t, missing, features, model_sets, index: NeighborIndex, k: int,
                 weight_mode: str = "vote", row: int = -1) -> list[ImputationResult]:
    """Impute every attribute in ``missing`` for one tuple.

    ``t`` is the full tuple (missing entries ignored); ``model_sets`` maps each
    missing attribute to its :class:`ModelSet` learned over ``features``.
    Only the tuple's observed values are used as model inputs.
    """
    if index.n < 1:
        raise ImputationError("no complete tuples to impute from")
    t = np.asarray(t, dtype=np.float64)
    t_f = t[list(features)]
    nb = index.query(t_f, k)
    out = []
    for a in missing:
        cand = candidates(t_f, nb, model_sets[a])
        value, spreads, weights = combine(cand, weight_mode)
        out.append(ImputationResult(row, int(a), value, nb, cand, spreads, weights))
    return out


def impute_relation(rel, config=None, imputer=None):
    """Fill every masked cell of a :class:`~iim.dataset.Relation`.

    Returns ``(imputed_relation, results)`` with one result per filled cell.
    ``imputer`` may be a fitted imputer (e.g. with preloaded models);
    otherwise one is built from ``config`` and fitted on ``rel``.
    """
    from .config import RunConfig, make_imputer

    if not rel.mask.any():
        return rel, []
    if imputer is None:
        imputer = make_imputer((config or RunConfig()).validate())
        imputer.fit(rel.values)
    filled, results = imputer.transform_explain(rel.values)
    return rel.with_values(filled, np.zeros_like(rel.mask)), results
