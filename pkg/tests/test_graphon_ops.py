from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_kernel
from graphlim.errors import GraphLimError
from graphlim.generators import er, indicator
from graphlim.graphon_ops import (
    DecoratedGraph,
    Decoration,
    QuotientGraph,
    block_measure,
    block_sizes,
    cut_semidistance,
    d1_distance,
    heuristic,
    hom_density,
    overlay,
    quotient,
    quotient_set_distance,
    unlabeled_cut_distance,
)
from graphlim.measures import DiscreteMeasure, lp_distance, lp_distance_oracle
from graphlim.partition import FunctionPartition, all_assignments
from graphlim.profiles import EXHAUSTIVE, Strategy, partition_profile
from graphlim.pvariable import blowup, constant_cell, from_matrix, global_law, quantile_from_kernel, relabel

D = DiscreteMeasure
coin = D([0.0, 1.0], [0.5, 0.5])
K2 = [[0.0, 1.0], [1.0, 0.0]]


def brute_cut(u, w):
    """Subset-pair enumeration with the independent subset oracle for each block pair."""
    n = u.n
    best = 0.0
    subsets = [s for r in range(1, n + 1) for s in itertools.combinations(range(n), r)]
    for s in subsets:
        for t in subsets:
            best = max(best, lp_distance_oracle(block_measure(u, s, t), block_measure(w, s, t)))
    return best


# -- block measures ------------------------------------------------------------


def test_block_measure_examples(rng):
    assert block_measure(from_matrix([[1.0]]), [0], [0]) == D.dirac([1.0])
    assert block_measure(from_matrix(K2), [0], [1]) == D([1.0], [0.25])
    assert block_measure(random_kernel(rng, 3), [], [0, 1]).mass == 0.0


def test_block_measure_mass(rng):
    w = random_kernel(rng, 5)
    assert block_measure(w, [0, 2], [1, 3, 4]).mass == pytest.approx(6 / 25, abs=1e-15)


# -- cut semidistance ------------------------------------------------------------


def test_cut_examples(rng):
    w = random_kernel(rng, 3)
    assert cut_semidistance(w, w) == 0.0
    assert cut_semidistance(from_matrix([[0.0]]), from_matrix([[1.0]])) == 1.0
    u, v = random_kernel(rng, 3), random_kernel(rng, 3)
    assert cut_semidistance(u, v) >= lp_distance(global_law(u), global_law(v)) - 1e-12


def test_cut_requires_shared_ground(rng):
    with pytest.raises(GraphLimError):
        cut_semidistance(random_kernel(rng, 2), random_kernel(rng, 3))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_cut_matches_brute_force_oracle(n):
    rng = np.random.default_rng(100 + n)
    for _ in range(6):
        u, w = random_kernel(rng, n), random_kernel(rng, n)
        assert cut_semidistance(u, w) == pytest.approx(brute_cut(u, w), abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_cut_is_pseudometric(seed, n):
    rng = np.random.default_rng(seed)
    a, b, c = (random_kernel(rng, n, grid=2) for _ in range(3))
    ab, bc, ac = cut_semidistance(a, b), cut_semidistance(b, c), cut_semidistance(a, c)
    assert ab == cut_semidistance(b, a)
    assert ac <= ab + bc + 1e-9


def test_cut_heuristic_interval_brackets_exact(rng):
    for _ in range(10):
        u, w = random_kernel(rng, 5), random_kernel(rng, 5)
        exact = cut_semidistance(u, w)
        lo, hi = cut_semidistance(u, w, heuristic(4, 1))
        assert lo <= exact + 1e-12 and exact <= hi + 1e-12 and hi <= 1.0


def test_zero_cut_distance_forces_equal_profiles(rng):
    # d_cut = 0 on a shared ground must give identical profile measures
    for _ in range(20):
        u = random_kernel(rng, 3)
        w = u if rng.random() < 0.5 else random_kernel(rng, 3)
        if cut_semidistance(u, w) > 1e-9:
            continue
        for a in all_assignments(3, 2):
            p = FunctionPartition(a, 2)
            assert lp_distance(partition_profile(u, p), partition_profile(w, p)) <= 1e-6


# -- unlabeled cut distance -----------------------------------------------------


def test_unlabeled_examples(rng):
    w = random_kernel(rng, 4)
    assert unlabeled_cut_distance(w, relabel(w, [3, 0, 2, 1])) == 0.0
    assert unlabeled_cut_distance(w, w) == 0.0
    assert tuple(unlabeled_cut_distance(w, w, heuristic(2, 0)))[1] == 0.0


def test_unlabeled_k2_against_identity_regression():
    # brute force over both relabelings and all 16 subset pairs
    u, w = from_matrix(K2), from_matrix([[1.0, 0.0], [0.0, 1.0]])
    oracle = min(brute_cut(u, relabel(w, p)) for p in ([0, 1], [1, 0]))
    assert oracle == pytest.approx(0.25, abs=1e-12)
    assert unlabeled_cut_distance(u, w) == pytest.approx(0.25, abs=1e-12)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_unlabeled_below_labeled_and_bracketed(seed, n):
    rng = np.random.default_rng(seed)
    u, w = random_kernel(rng, n, grid=2), random_kernel(rng, n, grid=2)
    exact = unlabeled_cut_distance(u, w)
    assert exact <= cut_semidistance(u, w) + 1e-12
    lo, hi = unlabeled_cut_distance(u, w, heuristic(3, seed))
    assert lo <= exact + 1e-9 and exact <= hi + 1e-9


def test_unlabeled_matches_permutation_brute_force(rng):
    for _ in range(5):
        u, w = random_kernel(rng, 3), random_kernel(rng, 3)
        brute = min(cut_semidistance(u, relabel(w, list(p))) for p in itertools.permutations(range(3)))
        assert unlabeled_cut_distance(u, w) == pytest.approx(brute, abs=1e-12)


def test_unlabeled_handles_different_sizes(rng):
    w = random_kernel(rng, 2)
    assert unlabeled_cut_distance(blowup(w, 3), w) == 0.0


def test_bad_mode_rejected(rng):
    with pytest.raises(GraphLimError):
        cut_semidistance(random_kernel(rng, 2), random_kernel(rng, 2), "sometimes")


# -- homomorphism densities -------------------------------------------------------


def edge(beta: Decoration) -> DecoratedGraph:
    return DecoratedGraph(2, ((0, 1),), (beta,))


def test_hom_density_examples(rng):
    w = random_kernel(rng, 3)
    assert hom_density(edge(Decoration.const(1.0)), w) == pytest.approx(1.0, abs=1e-15)
    k3 = from_matrix(np.ones((3, 3)) - np.eye(3))
    assert hom_density(edge(Decoration.identity()), k3) == pytest.approx(6 / 9, abs=1e-15)


def test_hom_density_brute_force(rng):
    w = random_kernel(rng, 3)
    beta = Decoration.poly([0.5, -1.0, 0.25], (0.0, 2.0))
    g = DecoratedGraph(3, ((0, 1), (1, 2), (2, 0)), (beta, Decoration.identity(), Decoration.indicator(1.0)))
    vals = [[[b.pair(w.cell(i, j)) for j in range(3)] for i in range(3)] for b in g.beta]
    total = 0.0
    for x in itertools.product(range(3), repeat=3):
        prod = 1.0
        for (a, b), v in zip(g.edges, vals):
            prod *= v[x[a]][x[b]]
        total += prod
    assert hom_density(g, w) == pytest.approx(total / 27, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4))
def test_hom_density_multiplicative_and_relabel_invariant(seed, n):
    rng = np.random.default_rng(seed)
    w = random_kernel(rng, n)
    b1 = Decoration.identity((0.0, 2.0))
    b2 = Decoration.bounded_lipschitz([(0.0, 1.0), (2.0, -1.0)])
    e1 = DecoratedGraph(2, ((0, 1),), (b1,))
    e2 = DecoratedGraph(2, ((0, 1),), (b2,))
    both = DecoratedGraph(4, ((0, 1), (2, 3)), (b1, b2))
    assert hom_density(both, w) == pytest.approx(hom_density(e1, w) * hom_density(e2, w), abs=1e-12)
    v = relabel(w, rng.permutation(n))
    assert hom_density(both, v) == pytest.approx(hom_density(both, w), abs=1e-12)


def test_decorations():
    assert Decoration.identity((0.0, 1.0))(np.array([-1.0, 0.5, 3.0])).tolist() == [0.0, 0.5, 1.0]
    assert Decoration.indicator(1.0)(np.array([1.0, 2.0])).tolist() == [1.0, 0.0]
    with pytest.raises(GraphLimError):
        Decoration.poly([1.0], (0.0, 1.0))(np.array([2.0]))
    with pytest.raises(GraphLimError):
        Decoration("spline")
    g = DecoratedGraph(2, ((0, 1),), (Decoration.poly([1.0, 2.0], (0.0, 1.0)),), (0.5, 0.5))
    assert DecoratedGraph.from_json(g.to_json()) == g


# -- overlay --------------------------------------------------------------------------


def test_overlay_examples(rng):
    w = random_kernel(rng, 3)
    one = DecoratedGraph(1, ((0, 0),), (Decoration.const(1.0),), (1.0,))
    assert overlay(w, one).lower == pytest.approx(1.0, abs=1e-15)
    zero, ident = Decoration.const(0.0), Decoration.identity()
    g = DecoratedGraph(2, ((0, 0), (0, 1), (1, 0), (1, 1)), (zero, ident, ident, zero), (0.5, 0.5))
    assert tuple(overlay(from_matrix(K2), g)) == pytest.approx((0.5, 0.5))
    g0 = DecoratedGraph(2, ((0, 1),), (zero,), (0.5, 0.5))
    assert tuple(overlay(w, g0)) == (0.0, 0.0)


def test_overlay_local_brackets_exhaustive(rng):
    w = random_kernel(rng, 6)
    g = DecoratedGraph(2, ((0, 1), (1, 1)), (Decoration.identity(), Decoration.const(0.5)), (0.5, 0.5))
    exact = overlay(w, g).lower
    lo, hi = overlay(w, g, Strategy("local", 3, 0))
    assert lo <= exact + 1e-12 <= hi + 2e-12


def test_block_sizes():
    assert block_sizes([0.5, 0.5], 5) in ((3, 2), (2, 3))
    assert sum(block_sizes([0.2, 0.3, 0.5], 7)) == 7


# -- quotients ------------------------------------------------------------------------


def test_quotient_examples(rng):
    w = random_kernel(rng, 3)
    q = quotient(w, FunctionPartition.one_class(3))
    assert q.alpha.tolist() == [1.0] and q.beta[0][0] == global_law(w)
    q = quotient(from_matrix(K2), FunctionPartition.singletons(2))
    assert q.alpha.tolist() == [0.5, 0.5]
    assert q.beta[0][1] == D.dirac([1.0]) and q.beta[0][0] == D.dirac([0.0])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6), st.integers(1, 3))
def test_quotient_mass_identity(seed, n, k):
    rng = np.random.default_rng(seed)
    w = random_kernel(rng, n)
    q = quotient(w, FunctionPartition(rng.integers(0, k, size=n), k))
    a, b = q.mixture(), global_law(w)
    assert np.array_equal(a.atoms, b.atoms)
    np.testing.assert_allclose(a.weights, b.weights, rtol=0, atol=1e-12)


def test_d1_examples(rng):
    q = quotient(random_kernel(rng, 3), FunctionPartition.from_labels([0, 1, 1]))
    assert d1_distance(q, q) == 0.0
    a = QuotientGraph([1.0], [[D.dirac([0.0])]])
    b = QuotientGraph([1.0], [[D.dirac([1.0])]])
    assert d1_distance(a, b) == 1.0
    half = QuotientGraph([0.5, 0.5], [[coin, coin], [coin, coin]])
    lop = QuotientGraph([1.0, 0.0], [[coin, coin], [coin, coin]])
    assert d1_distance(half, lop) >= 1.0
    assert np.abs(half.alpha - lop.alpha).sum() == 1.0
    with pytest.raises(GraphLimError):
        d1_distance(a, half)


def test_quotient_set_examples(rng):
    w = random_kernel(rng, 4)
    assert tuple(quotient_set_distance(w, w, 2)) == (0.0, 0.0)
    assert tuple(quotient_set_distance(w, relabel(w, [1, 3, 0, 2]), 2)) == (0.0, 0.0)
    d = quotient_set_distance(constant_cell(D.dirac([0.5])), constant_cell(coin), 1)
    assert tuple(d) == (0.5, 0.5)


def test_quotient_set_label_invariant_is_smaller(rng):
    u, w = random_kernel(rng, 3), random_kernel(rng, 3)
    plain = quotient_set_distance(u, w, 2).upper
    inv = quotient_set_distance(u, w, 2, label_invariant=True).upper
    assert inv <= plain + 1e-12


def test_quotient_set_sampled_brackets_exhaustive(rng):
    for seed in range(5):
        u, w = random_kernel(rng, 4), random_kernel(rng, 4)
        exact = quotient_set_distance(u, w, 2).upper
        lo, hi = quotient_set_distance(u, w, 2, Strategy("random", 4, seed))
        assert lo <= exact + 1e-12 <= hi + 2e-12


def test_quotient_set_large_ground_is_interval():
    u = from_matrix(er(0.5, 14, 1))
    lo, hi = quotient_set_distance(u, indicator(0.5), 2, Strategy("random", 6, 0))
    assert 0.0 <= lo <= hi


def test_cut_distance_between_kernels_with_ties():
    u = quantile_from_kernel([[coin, D.dirac([0.0])], [D.dirac([1.0]), coin]])
    assert cut_semidistance(u, u, EXHAUSTIVE) == 0.0
