"""Ridge regression for individual models, including the incremental
normal-equation state used by adaptive learning.

A parameter vector ``phi`` is ordered ``[constant, coef_1, ..., coef_f]``.
The ridge penalty ``alpha * I`` applies to every entry, the constant included.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import NumericError
from .linalg import gauss_solve

DEFAULT_ALPHA = 1e-6
FALLBACK_ALPHA = 1e-8


@dataclass(frozen=True, eq=False)
class RegressionModel:
    phi: np.ndarray
    fallback: bool = False

    @property
    def n_features(self) -> int:
        return self.phi.shape[0] - 1

    def predict(self, f_values) -> float:
        return predict(self.phi, f_values)


@dataclass(frozen=True, eq=False)
class RidgeState:
    """Running ``U = X^T X`` and ``V = X^T Y`` for the tuples absorbed so far.

    Leading batch dimensions are allowed: ``U`` of shape ``(..., d, d)`` holds
    one state per batch entry. ``ops`` counts scalar multiply-adds spent on
    updates, which stays proportional to the batch size absorbed.
    """

    U: np.ndarray
    V: np.ndarray
    count: int
    ops: int = 0

    @classmethod
    def empty(cls, n_features: int, batch_shape=()) -> "RidgeState":
        d = n_features + 1
        return cls(np.zeros(tuple(batch_shape) + (d, d)), np.zeros(tuple(batch_shape) + (d,)), 0)


def design(f_values) -> np.ndarray:
    """Prepend the constant column: ``(..., l, f) -> (..., l, f + 1)``."""
    f_values = np.asarray(f_values, dtype=np.float64)
    ones = np.ones(f_values.shape[:-1] + (1,))
    return np.concatenate([ones, f_values], axis=-1)


def solve_normal(U, V, alpha: float = DEFAULT_ALPHA):
    """``(U + alpha I)^-1 V`` for a stack of systems.

    Singular systems are retried with ``alpha + 1e-8``; returns
    ``(phi, fallback_flags)``. Raises :class:`NumericError` if a system is
    still singular after that.
    """
    U = np.asarray(U, dtype=np.float64)
    V = np.asarray(V, dtype=np.float64)
    eye = np.eye(U.shape[-1])
    phi, singular = gauss_solve(U + alpha * eye, V)
    if np.any(singular):
        retry, still = gauss_solve(U[singular] + (alpha + FALLBACK_ALPHA) * eye, V[singular])
        if np.any(still):
            raise NumericError("singular normal equations even with fallback ridge")
        phi[singular] = retry
    return phi, singular


def ridge_fit(f_values, targets, alpha: float = DEFAULT_ALPHA) -> RegressionModel:
    """Fit one ridge model on ``l >= 2`` tuples given as ``(l, f)`` inputs
    and ``(l,)`` targets."""
    f_values = np.asarray(f_values, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.float64)
    if f_values.ndim == 1:
        f_values = f_values[:, None]
    if f_values.shape[0] < 2:
        raise ValueError("ridge_fit needs at least 2 tuples; use single_neighbor_model")
    X = design(f_values)
    phi, fb = solve_normal(X.T @ X, X.T @ targets, alpha)
    return RegressionModel(phi, bool(fb))


def single_neighbor_model(f_values, target: float) -> RegressionModel:
    """Constant model returning the tuple's own target value."""
    f = np.atleast_1d(np.asarray(f_values, dtype=np.float64)).shape[-1]
    phi = np.zeros(f + 1)
    phi[0] = target
    return RegressionModel(phi)


def absorb(state: RidgeState, f_batch, y_batch) -> RidgeState:
    """Add ``h`` tuples to the running normal equations.

    ``f_batch`` has shape ``(..., h, f)`` and ``y_batch`` ``(..., h)``,
    matching the state's batch shape.
    """
    f_batch = np.asarray(f_batch, dtype=np.float64)
    y_batch = np.asarray(y_batch, dtype=np.float64)
    h = y_batch.shape[-1]
    if h == 0:
        return state
    X = design(f_batch)
    d = X.shape[-1]
    U = state.U + np.einsum("...hi,...hj->...ij", X, X)
    V = state.V + np.einsum("...hi,...h->...i", X, y_batch)
    return RidgeState(U, V, state.count + h, state.ops + h * (d * d + d))


def solve(state: RidgeState, alpha: float = DEFAULT_ALPHA):
    """Parameters from a ridge state. Single states give a
    :class:`RegressionModel`; batched states give ``(phi, fallback)`` arrays."""
    if state.count < 1:
        raise ValueError("cannot solve an empty ridge state")
    phi, fb = solve_normal(state.U, state.V, alpha)
    if state.U.ndim == 2:
        return RegressionModel(phi, bool(fb))
    return phi, fb


def predict(phi, f_values):
    """``(1, f_values) . phi``; broadcasts over leading dimensions."""
    phi = np.asarray(phi, dtype=np.float64)
    f_values = np.asarray(f_values, dtype=np.float64)
    out = phi[..., 0] + np.sum(f_values * phi[..., 1:], axis=-1)
    if np.ndim(out) == 0:
        return float(out)
    return out
