"""Acceptance criteria, one test per check.

Every test prints a single ``PASS``/``FAIL`` line (visible with ``pytest -s``
or when running this file directly) and then asserts at the stated tolerance.
"""

import functools
import time

import numpy as np
import pytest

from iim.baselines import GLRImputer, KNNMeanImputer
from iim.config import RunConfig
from iim.dataset import Relation
from iim.estimator import IIMImputer
from iim.evalbench import MaskPlan, mask, rms, run_bench, two_segments, unmask
from iim.impute import combine
from iim.learner import learn_adaptive, learn_adaptive_scratch, learn_fixed

from conftest import FIG1_A1, FIG1_A2

FIG1 = np.column_stack([FIG1_A1, FIG1_A2])
FIG1_X = np.vstack([FIG1, [5.0, np.nan]])


def check(label, ok, detail):
    print(f"{'PASS' if ok else 'FAIL'} criterion {label}: {detail}")
    assert ok, detail


# -- 1: worked example, l=4, k=3, alpha=0 ---------------------------------

def _fig1_result(alpha):
    _, (res,) = IIMImputer(k=3, ell=4, alpha=alpha).fit(FIG1_X).transform_explain(FIG1_X)
    return res


def test_c1a_phi1():
    phi = learn_fixed(FIG1, (0,), 1, 4, alpha=0).phi[0]
    ok = np.all(np.abs(phi - [5.56, -0.87]) <= 0.05)
    check("1a", ok, f"phi_1 = ({phi[0]:.4f}, {phi[1]:.4f}) vs (5.56, -0.87) +-0.05")


def test_c1b_candidates():
    # Unattainable at alpha=0: the exact fit for t5/t6 gives 1.133, the
    # published 1.19 corresponds to a small ridge penalty. See test_c1b_small_ridge.
    res = _fig1_result(0.0)
    dev = np.abs(res.candidates - [1.19, 1.21, 1.19])
    check("1b", dev.max() <= 0.03,
          f"candidates {np.round(res.candidates, 4).tolist()} vs [1.19, 1.21, 1.19], max dev {dev.max():.4f} (tol 0.03)")


def test_c1b_small_ridge():
    res = _fig1_result(1e-3)
    dev = np.abs(res.candidates - [1.19, 1.21, 1.19])
    check("1b'", dev.max() <= 0.03,
          f"alpha=1e-3 candidates {np.round(res.candidates, 4).tolist()}, max dev {dev.max():.4f} (tol 0.03)")


def test_c1c_combine_published_candidates():
    value = combine([1.19, 1.21, 1.19])[0]
    check("1c", abs(value - 1.194) <= 0.01, f"combined {value:.6f} vs 1.194 +-0.01")


def test_c1d_end_to_end():
    t0 = time.perf_counter()
    value = _fig1_result(0.0).value
    ms = (time.perf_counter() - t0) * 1e3
    check("1d", abs(value - 1.194) <= 0.05, f"end-to-end {value:.4f} vs 1.194 +-0.05 in {ms:.1f} ms")


# -- 2: adaptive example ----------------------------------------------------

def test_c2_adaptive_example():
    ms = learn_adaptive(FIG1, (0,), 1, k=3, alpha=0, step_h=1)
    c = ms.costs.cost[1]
    # t2 validates on its validation neighbours' truths; oracle by hand
    own = FIG1_A2[1]
    oracle = sum((FIG1_A2[j] - own) ** 2 for j in range(8) if 1 in _validators(j, 3))
    ok = ms.chosen_ell[1] == 4 and abs(c[3] - 0.09) <= 0.05 and abs(c[0] - oracle) <= 1e-12
    check("2", ok, f"l*_2={ms.chosen_ell[1]}, cost[2][4]={c[3]:.4f} (0.09 +-0.05), "
                   f"cost[2][1]={c[0]:.4f} oracle {oracle:.4f}")


def _validators(j, k):
    d = [abs(FIG1_A1[j] - FIG1_A1[t]) for t in range(8)]
    return sorted((t for t in range(8) if t != j), key=lambda t: (d[t], t))[:k]


# -- 3-5: random suites -----------------------------------------------------

def _random_relation(rng):
    n = int(rng.integers(2, 101))
    m = int(rng.integers(2, 7))
    if rng.random() < 0.3:
        X = rng.integers(0, 4, size=(n, m)).astype(float)  # many distance ties
    else:
        X = rng.normal(size=(n, m)) * rng.uniform(0.1, 10, size=m)
    n_complete = int(rng.integers(max(1, min(n - 1, m + 2)), n + 1))
    for i in rng.permutation(n)[n_complete:]:
        miss = rng.choice(m, size=int(rng.integers(1, m)), replace=False)
        X[i, miss] = np.nan
    return X


def test_c3_knn_subsumption():
    rng = np.random.default_rng(3)
    bad = 0
    for _ in range(200):
        X = _random_relation(rng)
        for k in (1, 3, 5):
            a = IIMImputer(k=k, ell=1, weight_mode="uniform").fit_transform(X)
            b = KNNMeanImputer(k=k).fit_transform(X)
            bad += not np.array_equal(a, b)
    check("3", bad == 0, f"l=1 + uniform vs kNN: {bad} mismatches in 600 runs (exact equality)")


def test_c4_glr_subsumption():
    rng = np.random.default_rng(4)
    worst = 0.0
    for _ in range(200):
        X = _random_relation(rng)
        n = int((~np.isnan(X).any(axis=1)).sum())
        if n < 2:
            continue
        a = IIMImputer(k=3, ell=n).fit_transform(X)
        b = GLRImputer().fit_transform(X)
        worst = max(worst, float(np.max(np.abs(a - b))))
    check("4", worst <= 1e-9, f"l=n vs GLR max abs difference {worst:.2e} (tol 1e-9)")


def test_c5_incremental_equals_scratch():
    rng = np.random.default_rng(5)
    worst, worst_posed, diff_ell = 0.0, 0.0, 0
    for _ in range(100):
        n = int(rng.integers(2, 101))
        m = int(rng.integers(2, 7))
        r = rng.normal(size=(n, m))
        features, target = tuple(range(m - 1)), m - 1
        for h in (1, 3, 7):
            k = int(rng.integers(1, 6))
            a = learn_adaptive(r, features, target, k, step_h=h)
            b = learn_adaptive_scratch(r, features, target, k, step_h=h)
            scale = max(1.0, float(np.abs(b.costs.cost).max()))
            dev = np.abs(a.costs.cost - b.costs.cost) / scale
            worst = max(worst, float(dev.max()))
            # grid points with at least |F|+1 neighbours (no reliance on alpha alone)
            posed = a.costs.grid >= m
            if posed.any():
                worst_posed = max(worst_posed, float(dev[:, posed].max()))
            diff_ell += int(np.sum(a.chosen_ell != b.chosen_ell))
    check("5", worst <= 1e-9 and diff_ell == 0,
          f"max relative cost difference {worst:.2e} (tol 1e-9; {worst_posed:.1e} where l >= |F|+1), "
          f"differing l* = {diff_ell}")


# -- 6: incremental speed-up ------------------------------------------------

def test_c6_incremental_speedup():
    rng = np.random.default_rng(6)
    r = rng.normal(size=(2000, 4))
    start = time.perf_counter()
    t0 = time.perf_counter()
    a = learn_adaptive(r, (0, 1, 2), 3, k=10, step_h=1)
    t_inc = time.perf_counter() - t0
    t0 = time.perf_counter()
    b = learn_adaptive_scratch(r, (0, 1, 2), 3, k=10, step_h=1)
    t_scr = time.perf_counter() - t0
    total = time.perf_counter() - start
    same = np.array_equal(a.chosen_ell, b.chosen_ell)
    ok = t_scr >= 5 * t_inc and total < 120 and same
    check("6", ok, f"incremental {t_inc:.1f}s, scratch {t_scr:.1f}s, speed-up {t_scr / t_inc:.1f}x "
                   f"(>= 5x), total {total:.1f}s (< 120s), same l*: {same}")


# -- 7-8: synthetic two-segment suite ---------------------------------------

SEEDS = range(20)
FIXED = (1, 2, 4, 8, 16, "n")


@functools.lru_cache(maxsize=None)
def _suite():
    """Per seed: RMS of IIM (adaptive), kNN, GLR and IIM with each fixed l."""
    out = {key: [] for key in ("iim", "knn", "glr", *FIXED)}
    for s in SEEDS:
        rel = two_segments(400, seed=s)
        masked, truth = mask(rel, MaskPlan(seed=s, tuple_fraction=0.05))
        X = masked.values
        n = int((~masked.mask.any(axis=1)).sum())
        imputers = {"iim": IIMImputer(k=10), "knn": KNNMeanImputer(k=10), "glr": GLRImputer()}
        imputers.update({ell: IIMImputer(k=10, ell=n if ell == "n" else ell) for ell in FIXED})
        for key, imp in imputers.items():
            _, res = imp.fit(X).transform_explain(X)
            out[key].append(rms(truth, {(r.row, r.attribute): r.value for r in res}))
    return {key: np.array(v) for key, v in out.items()}


def test_c7_iim_beats_knn_and_glr():
    s = _suite()
    med = {key: float(np.median(s[key])) for key in ("iim", "knn", "glr")}
    ok = med["iim"] < med["knn"] and med["iim"] < med["glr"]
    check("7", ok, f"median RMS iim {med['iim']:.4f}, knn {med['knn']:.4f}, glr {med['glr']:.4f} over 20 seeds")


def test_c8_adaptive_vs_best_fixed():
    s = _suite()
    med = {key: float(np.median(s[key])) for key in ("iim", *FIXED)}
    best = min(FIXED, key=lambda e: med[e])
    ratio = med["iim"] / med[best]
    fixed = ", ".join(f"l={e}: {med[e]:.4f}" for e in FIXED)
    check("8", ratio <= 1.05, f"adaptive median RMS {med['iim']:.4f} = {ratio:.4f}x best fixed "
                              f"(l={best}) (tol 1.05); {fixed}")


# -- 9: invariants ----------------------------------------------------------

def test_c9_invariants():
    rng = np.random.default_rng(9)
    worst_w, outside = 0.0, 0
    for _ in range(50):
        X = _random_relation(rng)
        _, results = IIMImputer(k=int(rng.integers(1, 6))).fit(X).transform_explain(X)
        for r in results:
            worst_w = max(worst_w, abs(r.weights.sum() - 1.0))
            outside += not (r.candidates.min() <= r.value <= r.candidates.max())

    round_trip = True
    for s in range(20):
        rel = Relation.from_array(rng.normal(size=(int(rng.integers(5, 60)), int(rng.integers(2, 6)))))
        masked, truth = mask(rel, MaskPlan(seed=s, tuple_fraction=0.3, cluster_size=1 + s % 3))
        back = unmask(masked, truth)
        round_trip &= np.array_equal(back.values, rel.values) and not back.mask.any()

    rel = two_segments(300, seed=1)
    plan = MaskPlan(seed=7, tuple_fraction=0.1)
    reports = [run_bench(rel, plan, ("iim", "knn", "glr", "loess"), RunConfig(k=5, threads=t))
               for t in (1, 2, 4, 1)]
    key = lambda rep: ([r.rms for r in rep.results], rep.r2_sparsity, rep.r2_heterogeneity, rep.imputations)
    deterministic = all(key(r) == key(reports[0]) for r in reports)

    ok = worst_w <= 1e-9 and outside == 0 and round_trip and deterministic
    check("9", ok, f"max |sum w - 1| {worst_w:.1e}, values outside candidate range {outside}, "
                   f"mask round-trip {round_trip}, identical across threads 1/2/4 {deterministic}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-s", "-p", "no:cacheprovider"]))
