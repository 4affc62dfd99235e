"""Learning individual models: fixed neighbourhood size, and adaptive per-tuple
selection of the neighbourhood size by validation on the complete tuples."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DataError
from .neighbors import NeighborIndex, build_index
from .regression import DEFAULT_ALPHA, RidgeState, absorb, design, solve_normal

logger = logging.getLogger(__name__)

# Relative margin a later grid point must win by to replace an earlier one.
TIE_RTOL = 1e-9
_GATHER_BUDGET = 1 << 20


@dataclass(frozen=True, eq=False)
class CostMatrix:
    """``cost[i, g]``: summed squared validation error of tuple ``i``'s model
    learned with ``grid[g]`` neighbours."""

    cost: np.ndarray
    grid: np.ndarray


@dataclass(eq=False)
class ModelSet:
    """One individual model per complete tuple for a (features, target) pair.

    ``phi[i]`` is the parameter vector of complete tuple ``i`` (row ``i`` of
    the complete relation) and ``chosen_ell[i]`` the neighbourhood size it was
    learned with.
    """

    features: tuple[int, ...]
    target: int
    phi: np.ndarray
    chosen_ell: np.ndarray
    fallback: np.ndarray
    alpha: float = DEFAULT_ALPHA
    k: int | None = None
    step_h: int | None = None
    adaptive: bool = False
    costs: CostMatrix | None = field(default=None, repr=False)
    # rows whose cost stayed all-zero because nobody validated them
    unvalidated: np.ndarray | None = field(default=None, repr=False)
    # original row ids of the complete tuples the models belong to
    rows: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.phi.shape[0]

    def predict(self, ids, f_values) -> np.ndarray:
        """Predictions of the models ``ids`` at one point ``f_values``."""
        phi = self.phi[np.asarray(ids)]
        f = np.asarray(f_values, dtype=np.float64)
        return phi[:, 0] + np.sum(f * phi[:, 1:], axis=-1)


def ell_grid(n: int, step_h: int) -> np.ndarray:
    """Neighbourhood sizes ``1, 1+h, 1+2h, ...`` not exceeding ``n``."""
    if step_h < 1:
        raise ValueError("step_h must be >= 1")
    return np.arange(1, n + 1, step_h)


def _split(r, features, target):
    r = np.asarray(r, dtype=np.float64)
    return r[:, list(features)], r[:, target]


def _constant_models(y: np.ndarray, f: int) -> np.ndarray:
    phi = np.zeros((y.shape[0], f + 1))
    phi[:, 0] = y
    return phi


def _fit_prefix(rf, y, order, ell, alpha):
    """Fit every tuple's model on the first ``ell`` entries of its list,
    building the normal equations from scratch."""
    n, f = rf.shape
    if ell == 1:
        return _constant_models(y, f), np.zeros(n, dtype=bool)
    d = f + 1
    U = np.empty((n, d, d))
    V = np.empty((n, d))
    chunk = max(1, _GATHER_BUDGET // (ell * d))
    for s in range(0, n, chunk):
        nb = order[s : s + chunk, :ell]
        X = design(rf[nb])
        Xt = X.transpose(0, 2, 1)
        U[s : s + chunk] = Xt @ X
        V[s : s + chunk] = (Xt @ y[nb][:, :, None])[:, :, 0]
    return solve_normal(U, V, alpha)


def learn_fixed(r, features, target, ell, alpha=DEFAULT_ALPHA, index: NeighborIndex | None = None) -> ModelSet:
    """Learn each complete tuple's model over its ``ell`` nearest complete
    tuples (itself included). ``ell == 1`` gives constant models."""
    rf, y = _split(r, features, target)
    n = rf.shape[0]
    if not 1 <= ell <= n:
        raise ValueError(f"ell must be in [1, {n}], got {ell}")
    if index is None:
        index = build_index(rf, features)
    phi, fb = _fit_prefix(rf, y, index.order, int(ell), alpha)
    return ModelSet(
        tuple(features), int(target), phi, np.full(n, int(ell)), fb, alpha=alpha
    )


def _validation_pairs(order, k):
    """``(I, J)``: model owner ``i`` is among the ``k`` nearest other tuples of
    validation tuple ``j``. Sorted by ``j`` so per-row sums run in ascending
    validation-tuple order."""
    n = order.shape[0]
    kk = min(k, n - 1)
    if kk < 1:
        return np.empty(0, dtype=np.intp), np.empty(0, dtype=np.intp)
    I = order[:, 1 : kk + 1].reshape(-1)
    J = np.repeat(np.arange(n), kk)
    return I, J


def _select(rf, y, index, k, alpha, step_h, models_at):
    n, f = rf.shape
    grid = ell_grid(n, step_h)
    I, J = _validation_pairs(index.order, k)
    yJ, fJ = y[J], rf[J]
    cost = np.zeros((n, grid.shape[0]))
    ref = np.bincount(I, weights=yJ**2, minlength=n) + np.finfo(float).tiny
    validated = np.bincount(I, minlength=n) > 0
    median_g = (grid.shape[0] - 1) // 2

    best_cost = np.full(n, np.inf)
    best_phi = np.zeros((n, f + 1))
    best_ell = np.zeros(n, dtype=np.intp)
    best_fb = np.zeros(n, dtype=bool)
    for g, (ell, phi, fb) in enumerate(models_at(grid)):
        pi = phi[I]
        err = (yJ - (pi[:, 0] + np.sum(fJ * pi[:, 1:], axis=1))) ** 2
        c = np.bincount(I, weights=err, minlength=n)
        cost[:, g] = c
        if g == 0:
            better = np.ones(n, dtype=bool)
        else:
            better = c < best_cost - (TIE_RTOL * best_cost + 1e-12 * ref)
        if g == median_g:
            better |= ~validated
        elif g > median_g:
            better &= validated
        best_cost[better] = c[better]
        best_phi[better] = phi[better]
        best_ell[better] = ell
        best_fb[better] = fb[better]
    if not validated.all():
        logger.info("%d tuples never validated; using median grid size", (~validated).sum())
    return best_phi, best_ell, best_fb, CostMatrix(cost, grid), ~validated


def learn_adaptive(r, features, target, k, alpha=DEFAULT_ALPHA, step_h=1, index: NeighborIndex | None = None) -> ModelSet:
    """Per-tuple neighbourhood size chosen from the grid ``1, 1+h, ...`` by
    validation cost, with models grown incrementally between grid points."""
    rf, y = _split(r, features, target)
    if k < 1:
        raise ValueError("k must be >= 1")
    if index is None:
        index = build_index(rf, features)
    n, f = rf.shape
    order = index.order

    def models_at(grid):
        state = RidgeState.empty(f, (n,))
        absorbed = 0
        for ell in grid:
            nb = order[:, absorbed:ell]
            state = absorb(state, rf[nb], y[nb])
            absorbed = ell
            if ell == 1:
                yield ell, _constant_models(y, f), np.zeros(n, dtype=bool)
            else:
                phi, fb = solve_normal(state.U, state.V, alpha)
                yield ell, phi, fb

    phi, ell, fb, costs, unval = _select(rf, y, index, k, alpha, step_h, models_at)
    return ModelSet(tuple(features), int(target), phi, ell, fb, alpha, k, step_h, True, costs, unval)


def learn_adaptive_scratch(r, features, target, k, alpha=DEFAULT_ALPHA, step_h=1, index: NeighborIndex | None = None) -> ModelSet:
    """Reference for :func:`learn_adaptive` that refits every grid point from
    scratch. Same result, quadratic cost in the neighbourhood size."""
    rf, y = _split(r, features, target)
    if k < 1:
        raise ValueError("k must be >= 1")
    if index is None:
        index = build_index(rf, features)

    n, f = rf.shape
    d = f + 1
    # rows [1, x, y] of every tuple's neighbours in list order: (n, d + 1, n)
    W = np.concatenate([np.ones((n, 1)), rf, y[:, None]], axis=1)
    Z = np.ascontiguousarray(W[index.order].transpose(0, 2, 1))

    def models_at(grid):
        for ell in grid:
            if ell == 1:
                yield ell, _constant_models(y, f), np.zeros(n, dtype=bool)
                continue
            A = Z[:, :, :ell]
            G = A @ A.transpose(0, 2, 1)
            phi, fb = solve_normal(G[:, :d, :d], G[:, :d, d], alpha)
            yield ell, phi, fb

    phi, ell, fb, costs, unval = _select(rf, y, index, k, alpha, step_h, models_at)
    return ModelSet(tuple(features), int(target), phi, ell, fb, alpha, k, step_h, True, costs, unval)


_MAGIC = "# iim models v1"


def _fmt(x) -> str:
    return repr(float(x))


def save_models(model_sets, sink) -> None:
    """Write model sets in a line-oriented text format.

    Each set starts with a ``models`` line of ``key=value`` settings, then one
    line per complete tuple (``row ell phi_0 ... phi_f``), then ``end``.
    Floats use shortest round-trip text, so loading restores them exactly.
    """
    sink.write(_MAGIC + "\n")
    for ms in model_sets:
        head = {
            "features": ",".join(str(a) for a in ms.features),
            "target": ms.target,
            "alpha": _fmt(ms.alpha),
            "k": "" if ms.k is None else ms.k,
            "step": "" if ms.step_h is None else ms.step_h,
            "adaptive": int(ms.adaptive),
            "n": ms.n,
        }
        sink.write("models " + " ".join(f"{k}={v}" for k, v in head.items()) + "\n")
        rows = ms.rows if ms.rows is not None else np.arange(ms.n)
        for i in range(ms.n):
            fields = [str(int(rows[i])), str(int(ms.chosen_ell[i]))]
            fields += [_fmt(v) for v in ms.phi[i]]
            if ms.fallback[i]:
                fields.append("fallback")
            sink.write(" ".join(fields) + "\n")
        sink.write("end\n")


class ModelFileError(DataError):
    pass


def load_models(source) -> list[ModelSet]:
    """Read model sets written by :func:`save_models`."""
    try:
        return _load_models(source)
    except (ValueError, KeyError, StopIteration) as e:
        raise ModelFileError(f"bad model file: {e}") from None


def _load_models(source) -> list[ModelSet]:
    lines = iter(enumerate(source, start=1))
    first = next(lines, (1, ""))[1].strip()
    if first != _MAGIC:
        raise ValueError(f"not a model file (first line {first!r})")
    out = []
    for lineno, line in lines:
        line = line.strip()
        if not line:
            continue
        if not line.startswith("models "):
            raise ValueError(f"line {lineno}: expected a 'models' header")
        head = dict(kv.split("=", 1) for kv in line.split()[1:])
        features = tuple(int(a) for a in head["features"].split(","))
        n = int(head["n"])
        rows = np.empty(n, dtype=np.intp)
        ell = np.empty(n, dtype=np.intp)
        phi = np.empty((n, len(features) + 1))
        fb = np.zeros(n, dtype=bool)
        for i in range(n):
            lineno, body = next(lines)
            parts = body.split()
            if len(parts) < phi.shape[1] + 2:
                raise ValueError(f"line {lineno}: truncated model line")
            rows[i], ell[i] = int(parts[0]), int(parts[1])
            phi[i] = [float(v) for v in parts[2 : 2 + phi.shape[1]]]
            fb[i] = parts[-1] == "fallback"
            if not np.all(np.isfinite(phi[i])):
                raise ValueError(f"line {lineno}: non-finite parameters")
        lineno, end = next(lines, (None, ""))
        if end.strip() != "end":
            raise ValueError(f"line {lineno}: expected 'end'")
        out.append(ModelSet(
            features, int(head["target"]), phi, ell, fb,
            alpha=float(head["alpha"]),
            k=int(head["k"]) if head.get("k") else None,
            step_h=int(head["step"]) if head.get("step") else None,
            adaptive=bool(int(head.get("adaptive", 0))),
            rows=rows,
        ))
    return out
