"""Acceptance suite: one test per criterion, each printing a single PASS/FAIL line."""
from __future__ import annotations

import math
import time

import numpy as np
import pytest

from conftest import random_kernel, random_law, random_measure
from graphlim.experiment import ExperimentSpec, run_experiment, sample_pvariable, upper_values
from graphlim.generators import indicator
from graphlim.graphon_ops import quotient_set_distance
from graphlim.measures import DiscreteMeasure, lp_distance, lp_distance_oracle, lp_general, marginal, scale_mix, tau
from graphlim.partition import FunctionPartition
from graphlim.profiles import TestVector, dm_estimate, partition_defect, round_to_partition, rounding_constant
from graphlim.pvariable import constant_cell, contraction, quantile_from_kernel, relabel, sample_matrix
from graphlim.realgraphon import avq_set, avq_set_distance, cut_norm, real_cut_distance

D = DiscreteMeasure
HALF = constant_cell(D.dirac([0.5]))
COIN = constant_cell(D([0.0, 1.0], [0.5, 0.5]))
ER_SEED = 1


@pytest.fixture
def verdict(capsys):
    """Print ``criterion N (name): PASS|FAIL detail`` to the terminal, then assert."""

    def report(number: int, name: str, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\ncriterion {number} ({name}): {'PASS' if ok else 'FAIL'} {detail}")
        assert ok, f"criterion {number} failed: {detail}"

    return report


# -- shared instances (also reused by criterion 10) ---------------------------------


def criterion4_instances():
    rng = np.random.default_rng(404)
    out = []
    for _ in range(50):
        n = int(rng.integers(1, 7))
        w = random_kernel(rng, n)
        out.append((w, relabel(w, rng.permutation(n))))
    return out


def criterion7_spec(sizes, metrics, cut_mode="auto"):
    return ExperimentSpec(
        "er(0.5)", "indicator(0.5)", sizes, seed=ER_SEED, metrics=metrics, k_max=2, cut_mode=cut_mode, timing=False
    )


# -- criteria -----------------------------------------------------------------------


def test_criterion_01_lp_oracle_equivalence(verdict):
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(500):
        dim = int(rng.integers(1, 4))
        mu, nu = random_measure(rng, dim), random_measure(rng, dim)
        worst = max(worst, abs(lp_distance(mu, nu) - lp_distance_oracle(mu, nu)))
    secs = time.perf_counter() - start
    verdict(1, "LP oracle equivalence", worst <= 1e-9 and secs < 10, f"max|diff|={worst:.3g} in {secs:.2f}s")


def test_criterion_02_inequality_suite(verdict):
    rng = np.random.default_rng(202)
    start = time.perf_counter()
    slack = {"scaling": 0.0, "quasi-convexity": 0.0, "marginal": 0.0, "coupling tau": 0.0, "coupling L1": 0.0}
    for _ in range(200):
        dim = int(rng.integers(1, 4))
        mu, nu = random_measure(rng, dim), random_measure(rng, dim)
        base = lp_distance(mu, nu)
        alpha = float(rng.uniform(1.0, 4.0))
        scaled = lp_general(scale_mix([mu], [alpha]), scale_mix([nu], [alpha]))
        slack["scaling"] = max(slack["scaling"], base - scaled, scaled - alpha * base)

        m1, n1, m2, n2 = (random_measure(rng, dim) for _ in range(4))
        a = float(rng.choice([0.0, 0.25, 0.5, 1.0]))
        mix = lp_distance(scale_mix([m1, m2], [a, 1 - a]), scale_mix([n1, n2], [a, 1 - a]))
        slack["quasi-convexity"] = max(slack["quasi-convexity"], mix - max(lp_distance(m1, n1), lp_distance(m2, n2)))

        for mask in range(1, 1 << dim):
            c = [i for i in range(dim) if mask >> i & 1]
            slack["marginal"] = max(slack["marginal"], lp_distance(marginal(mu, c), marginal(nu, c)) - base)

        k = int(rng.integers(1, 4))
        p = rng.random(5) + 0.1
        p /= p.sum()
        x = rng.normal(size=(5, k))
        y = x + rng.normal(scale=float(rng.choice([0.01, 0.1, 1.0])), size=(5, k))
        d = lp_distance(D(x, p), D(y, p))
        slack["coupling tau"] = max(slack["coupling tau"], d - math.sqrt(tau(D(x - y, p))) * k**0.75)
        m = max(math.fsum(p * np.abs(x[:, i] - y[:, i])) for i in range(k))
        slack["coupling L1"] = max(slack["coupling L1"], d - math.sqrt(m) * k**0.75)
    secs = time.perf_counter() - start
    worst = max(slack.values())
    detail = ", ".join(f"{k}={v:.3g}" for k, v in slack.items())
    verdict(2, "inequality suite", worst <= 1e-9 and secs < 30, f"worst violation {detail} in {secs:.2f}s")


def test_criterion_03_rounding_bound(verdict):
    rng = np.random.default_rng(303)
    start = time.perf_counter()
    worst_ratio, checked = 0.0, 0
    while checked < 100:
        k, n = int(rng.integers(1, 5)), int(rng.integers(2, 65))
        p = FunctionPartition(rng.integers(0, k, size=n), k)
        eta = float(rng.uniform(0.005, 0.08))
        f = p.indicators() + rng.uniform(-eta, eta, size=(k, n))
        outliers = rng.random(n) < eta / 2
        f[:, outliers] = rng.uniform(0, 1, size=(k, int(outliers.sum())))
        t = TestVector(f)
        delta = partition_defect(t)
        if not 0 < delta < 0.4:
            continue
        q = round_to_partition(t, delta)
        err = np.abs(t.funcs - q.indicators()).mean(axis=1).max()
        worst_ratio = max(worst_ratio, err / (rounding_constant(k) * delta))
        checked += 1
    secs = time.perf_counter() - start
    verdict(
        3, "rounding bound", worst_ratio <= 1.0 and secs < 10,
        f"max L1 error / (C_k delta) = {worst_ratio:.3g} over {checked} cases in {secs:.2f}s",
    )


def test_criterion_04_weak_isomorphism_invariance(verdict):
    start = time.perf_counter()
    worst = 0.0
    for w, v in criterion4_instances():
        est = dm_estimate(w, v, 2)
        worst = max(worst, est.lower, est.upper)
        for k in (1, 2):
            worst = max(worst, *quotient_set_distance(w, v, k))
    secs = time.perf_counter() - start
    verdict(4, "weak-isomorphism invariance", worst <= 1e-9 and secs < 120, f"max value {worst:.3g} in {secs:.1f}s")


def test_criterion_05_cut_norm_oracle(verdict):
    rng = np.random.default_rng(505)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        n = int(rng.integers(1, 11))
        m = rng.normal(size=(n, n)) * float(rng.choice([0.1, 1.0, 10.0]))
        worst = max(worst, abs(cut_norm(m, "exhaustive_rows") - cut_norm(m, "bruteforce")))
    secs = time.perf_counter() - start
    verdict(5, "cut-norm oracle", worst <= 1e-12 and secs < 60, f"max|diff|={worst:.3g} in {secs:.2f}s")


def test_criterion_06_constant_versus_coin(verdict):
    start = time.perf_counter()
    dm = dm_estimate(HALF, COIN, 4)
    rc = real_cut_distance(contraction(HALF), contraction(COIN))
    avq = [tuple(avq_set_distance(HALF, COIN, k)) for k in (1, 2, 3)]
    secs = time.perf_counter() - start
    ok = dm.lower >= 0.25 and rc <= 1e-9 and all(a == (0.0, 0.0) for a in avq) and secs < 10
    verdict(6, "constant-1/2 versus fair coin", ok, f"dm lower={dm.lower:.4g}, real cut={rc:.3g}, avq={avq} in {secs:.2f}s")


def test_criterion_07_er_convergence_trend(verdict):
    start = time.perf_counter()
    dm = run_experiment(criterion7_spec([4, 6, 8], ["dm"]))
    cut = run_experiment(criterion7_spec([8, 16, 32], ["cut"], cut_mode="heuristic"))
    secs = time.perf_counter() - start
    dm_up, cut_up = upper_values(dm, "dm"), upper_values(cut, "cut")
    ok = (
        dm.trends["dm"][0] == "holds"
        and dm_up[-1] <= 0.35
        and cut.trends["cut"][0] == "holds"
        and secs < 300
    )
    verdict(
        7, "ER convergence trend", ok,
        f"dm upper {np.round(dm_up, 4).tolist()} at n=4,6,8; cut upper {np.round(cut_up, 4).tolist()} "
        f"at n=8,16,32 (seed {ER_SEED}) in {secs:.1f}s",
    )


def test_criterion_08_sampler_law(verdict):
    start = time.perf_counter()
    n = 200
    off = ~np.eye(n, dtype=bool)
    parts, ok = [], True
    for p, seed in ((0.2, 8), (0.5, 88), (0.8, 888)):
        mean = float(sample_matrix(indicator(p), n, seed)[off].mean())
        tol = 3 * math.sqrt(p * (1 - p)) / math.sqrt(n * n - n)
        ok &= abs(mean - p) <= tol
        parts.append(f"p={p}: |mean-p|={abs(mean - p):.2e} (tol {tol:.2e})")
    secs = time.perf_counter() - start
    verdict(8, "sampler law", ok and secs < 5, "; ".join(parts) + f" in {secs:.2f}s")


def test_criterion_09_quantile_round_trip(verdict):
    rng = np.random.default_rng(909)
    start = time.perf_counter()
    bad = 0
    for _ in range(500):
        n = int(rng.integers(1, 5))
        kernel = [[random_law(rng, 4, 5) for _ in range(n)] for _ in range(n)]
        w = quantile_from_kernel(kernel)
        bad += any(w.cell(i, j) != kernel[i][j] for i in range(n) for j in range(n))
    secs = time.perf_counter() - start
    verdict(9, "quantile round trip", bad == 0 and secs < 5, f"{bad} mismatches in 500 kernels in {secs:.2f}s")


def test_criterion_10_entry_sum_identity(verdict):
    objects = [x for pair in criterion4_instances() for x in pair]
    objects += [HALF, COIN]
    spec = criterion7_spec([4, 6, 8], ["dm"])
    objects += [sample_pvariable(spec, n) for n in spec.sizes] + [indicator(0.5)]
    worst, count = 0.0, 0
    for w in objects:
        mean = float(contraction(w).values.mean())
        for k in (1, 2, 3):
            mats = avq_set(w, k)
            count += len(mats)
            worst = max(worst, float(np.abs(mats.sum(axis=(1, 2)) - mean).max()))
    verdict(10, "averaged-quotient entry sum", worst <= 1e-12, f"max|sum - E[W]|={worst:.3g} over {count} matrices")


def test_criterion_11_onoff_non_convergence(verdict):
    start = time.perf_counter()
    rows = []
    for seed in range(5):
        spec = ExperimentSpec(
            "onoff(0.5)", "indicator(1)", [8, 9, 10], seed=seed, k_max=2, expect="none", timing=False
        )
        rows += run_experiment(spec).rows
    secs = time.perf_counter() - start
    near = min(r.upper for r in rows)
    far = max(r.lower for r in rows)
    verdict(
        11, "on/off non-convergence", near <= 0.1 and far >= 0.4 and secs < 60,
        f"closest row upper={near:.4g}, farthest row lower={far:.4g} over {len(rows)} rows in {secs:.1f}s",
    )
