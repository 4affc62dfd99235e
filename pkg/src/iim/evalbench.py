"""Benchmark harness: reproducible masking, accuracy metrics and
method comparison.

Random masks come from NumPy's ``PCG64`` bit generator (permuted congruential
generator, 128-bit state, XSL-RR output) seeded with the plan's integer seed.
Its output stream is fixed across platforms and NumPy versions, so a seed
identifies a mask exactly.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .config import RunConfig, make_imputer
from .dataset import Relation
from .exceptions import PlanError

Truth = dict  # (row, attribute) -> original value


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class MaskPlan:
    seed: int = 0
    tuple_fraction: float = 0.05
    attribute: int | None = None
    cluster_size: int = 1

    def __post_init__(self):
        if not 0 < self.tuple_fraction <= 1:
            raise PlanError("tuple_fraction must be in (0, 1]")
        if self.cluster_size < 1:
            raise PlanError("cluster_size must be >= 1")


def _pick_rows(values, count, cluster_size, rng):
    n = values.shape[0]
    if cluster_size == 1:
        return np.sort(rng.choice(n, size=count, replace=False))
    chosen = np.zeros(n, dtype=bool)
    f = values.shape[1]
    while chosen.sum() < count:
        free = np.flatnonzero(~chosen)
        seed_row = free[rng.integers(free.shape[0])]
        d = np.sqrt(np.sum((values[free] - values[seed_row]) ** 2, axis=1) / f)
        order = free[np.argsort(d, kind="stable")]
        take = order[: min(cluster_size, count - chosen.sum())]
        chosen[take] = True
    return np.flatnonzero(chosen)


def mask(rel: Relation, plan: MaskPlan) -> tuple[Relation, Truth]:
    """Remove one value from each of ``ceil(fraction * n)`` random tuples.

    With ``cluster_size = c > 1`` tuples are taken in groups: a random seed
    tuple plus its ``c - 1`` nearest not-yet-chosen tuples.
    """
    if rel.mask.any():
        raise PlanError("masking needs a fully complete relation")
    n, m = rel.shape
    count = math.ceil(round(plan.tuple_fraction * n, 9))
    if plan.attribute is not None and not 0 <= plan.attribute < m:
        raise PlanError(f"attribute {plan.attribute} out of range")
    rng = make_rng(plan.seed)
    rows = _pick_rows(rel.values, count, plan.cluster_size, rng)
    if plan.attribute is None:
        attrs = rng.integers(m, size=rows.shape[0])
    else:
        attrs = np.full(rows.shape[0], plan.attribute)
    if rows.shape[0] >= n:
        raise PlanError("plan masks every tuple; no complete tuples would remain")
    new_mask = np.zeros((n, m), dtype=bool)
    new_mask[rows, attrs] = True
    truth = {(int(i), int(a)): float(rel.values[i, a]) for i, a in zip(rows, attrs)}
    values = rel.values.copy()
    values[new_mask] = np.nan
    return Relation(rel.column_names, values, new_mask, rel.tokens), truth


def unmask(masked: Relation, truth: Truth) -> Relation:
    values = masked.values.copy()
    m = masked.mask.copy()
    for (i, a), v in truth.items():
        values[i, a] = v
        m[i, a] = False
    return Relation(masked.column_names, values, m, masked.tokens)


def _aligned(truth, predictions):
    if not truth:
        raise ValueError("empty truth map")
    keys = sorted(truth)
    missing = [k for k in keys if k not in predictions]
    if missing:
        raise ValueError(f"no prediction for cells {missing[:3]}")
    t = np.array([truth[k] for k in keys])
    p = np.array([predictions[k] for k in keys])
    return keys, t, p


def rms(truth: Truth, imputations: dict) -> float:
    _, t, p = _aligned(truth, imputations)
    return float(np.sqrt(np.mean((t - p) ** 2)))


def r2(truth: Truth, predictions: dict, r, attribute: int | None = None) -> float:
    """Coefficient of determination of ``predictions`` against the truth,
    relative to the complete-tuple mean of each cell's attribute.

    ``attribute`` restricts the sum to cells of that attribute. Returns NaN
    when the denominator is zero.
    """
    r = np.asarray(r, dtype=np.float64)
    if attribute is not None:
        truth = {k: v for k, v in truth.items() if k[1] == attribute}
    keys, t, p = _aligned(truth, predictions)
    means = r.mean(axis=0)
    base = np.array([means[a] for _, a in keys])
    den = np.sum((t - base) ** 2)
    if den == 0:
        return math.nan
    return float(1.0 - np.sum((t - p) ** 2) / den)


def r2_sparsity(truth, knn_suggestions, r, attribute=None) -> float:
    """R^2 of kNN suggestions; low values mean neighbours rarely share values."""
    return r2(truth, knn_suggestions, r, attribute)


def r2_heterogeneity(truth, glr_predictions, r, attribute=None) -> float:
    """R^2 of global-regression predictions; low values mean no single model fits."""
    return r2(truth, glr_predictions, r, attribute)


@dataclass
class MethodResult:
    method: str
    rms: float
    learn_seconds: float
    impute_seconds: float


@dataclass
class BenchReport:
    results: list[MethodResult]
    r2_sparsity: float
    r2_heterogeneity: float
    n_masked: int
    plan: dict
    config: dict
    imputations: dict = field(default_factory=dict, repr=False)

    def rms_of(self, method: str) -> float:
        for res in self.results:
            if res.method == method:
                return res.rms
        raise KeyError(method)

    def to_dict(self) -> dict:
        return {
            "results": [asdict(r) for r in self.results],
            "r2_sparsity": self.r2_sparsity,
            "r2_heterogeneity": self.r2_heterogeneity,
            "n_masked": self.n_masked,
            "plan": self.plan,
            "config": self.config,
        }

    def write_csv(self, sink) -> None:
        w = csv.writer(sink, lineterminator="\n")
        w.writerow(["method", "rms", "r2_sparsity", "r2_heterogeneity", "n_masked",
                    "learn_seconds", "impute_seconds"])
        for r in self.results:
            w.writerow([r.method, repr(r.rms), repr(self.r2_sparsity), repr(self.r2_heterogeneity),
                        self.n_masked, f"{r.learn_seconds:.6f}", f"{r.impute_seconds:.6f}"])

    def write_json(self, sink) -> None:
        json.dump(self.to_dict(), sink, indent=2, default=_jsonable)
        sink.write("\n")


def _jsonable(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, (tuple, set)):
        return list(x)
    raise TypeError(f"cannot serialize {type(x).__name__}")


def _run_method(method, masked, config):
    imp = make_imputer(config, method)
    t0 = time.perf_counter()
    imp.fit(masked.values)
    t1 = time.perf_counter()
    _, results = imp.transform_explain(masked.values)
    t2 = time.perf_counter()
    return {(r.row, r.attribute): r.value for r in results}, t1 - t0, t2 - t1


def run_bench(rel: Relation, plan: MaskPlan, methods=None, config: RunConfig | None = None) -> BenchReport:
    """Mask ``rel`` once, run every method on the same masked relation and
    report RMS per method plus the sparsity/heterogeneity diagnostics."""
    config = (config or RunConfig()).validate()
    methods = tuple(methods or config.methods)
    masked, truth = mask(rel, plan)
    r = rel.values[~masked.mask.any(axis=1)]
    results, imputations = [], {}
    for method in methods:
        imp, t_learn, t_imp = _run_method(method, masked, config)
        imputations[method] = imp
        results.append(MethodResult(method, rms(truth, imp), t_learn, t_imp))
    knn = imputations.get("knn") or _run_method("knn", masked, config)[0]
    glr = imputations.get("glr") or _run_method("glr", masked, config)[0]
    return BenchReport(
        results,
        r2_sparsity(truth, knn, r),
        r2_heterogeneity(truth, glr, r),
        len(truth),
        asdict(plan),
        config.to_dict(),
        imputations,
    )


def two_segments(n=400, seed=0, noise=0.1, x_ranges=((0.0, 10.0), (15.0, 25.0)),
                 slopes=(-2.0, 2.5), intercepts=(20.0, -7.5), names=("A1", "A2")) -> Relation:
    """Two noisy linear segments, half the tuples on each.

    Each segment is locally linear but no single line fits both. The default
    segments occupy disjoint ranges of both attributes (A2 spans [0, 20] on
    the first and [30, 55] on the second), so a tuple missing either value
    can still be placed on its segment.
    """
    rng = make_rng(seed)
    sizes = (n // 2, n - n // 2)
    xs, ys = [], []
    for size, (lo, hi), a, b in zip(sizes, x_ranges, slopes, intercepts):
        x = rng.uniform(lo, hi, size)
        xs.append(x)
        ys.append(b + a * x + rng.normal(0.0, noise, size))
    X = np.column_stack([np.concatenate(xs), np.concatenate(ys)])
    return Relation(tuple(names), X, np.zeros(X.shape, dtype=bool))
