from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_measure
from graphlim.errors import GraphLimError
from graphlim.measures import (
    DiscreteMeasure,
    MeasureSet,
    hausdorff_distance,
    lp_distance,
    lp_distance_oracle,
    lp_general,
    marginal,
    restrict,
    scale_mix,
    tau,
)

D = DiscreteMeasure
d0, d1 = D.dirac([0.0]), D.dirac([1.0])
coin = D([0.0, 1.0], [0.5, 0.5])


# -- canonical form ----------------------------------------------------------


def test_duplicates_merge_and_order_is_canonical():
    a = D([[1.0], [0.0], [1.0]], [0.25, 0.5, 0.25])
    assert a.atoms.ravel().tolist() == [0.0, 1.0]
    assert a.weights.tolist() == [0.5, 0.5]
    assert a == D([0.0, 1.0], [0.5, 0.5])


def test_near_atoms_merge_and_zero_weights_drop():
    a = D([0.0, 1e-13, 2.0], [0.5, 0.5, 0.0])
    assert len(a) == 1 and a.weights[0] == 1.0


def test_equality_ignores_input_order(rng):
    atoms = rng.integers(0, 3, size=(8, 2)).astype(float)
    w = rng.random(8)
    p = rng.permutation(8)
    assert D(atoms, w) == D(atoms[p], w[p])
    assert hash(D(atoms, w)) == hash(D(atoms[p], w[p]))


def test_json_round_trip(rng):
    mu = random_measure(rng, 3)
    assert D.from_json(mu.to_json()) == mu


def test_invalid_measures_rejected():
    with pytest.raises(GraphLimError):
        D([0.0], [-1.0])
    with pytest.raises(GraphLimError):
        D([0.0, 1.0], [1.0])
    with pytest.raises(GraphLimError):
        MeasureSet(())
    with pytest.raises(GraphLimError):
        MeasureSet((d0, D.dirac([0.0, 0.0])))


# -- LP distance examples ----------------------------------------------------


@pytest.mark.parametrize(
    "mu, nu, expected",
    [
        (d0, d0, 0.0),
        (d0, coin, 0.5),
        (d0, d1, 1.0),
        (D([0.0, 2.0], [0.5, 0.5]), d0, 0.5),
        (coin, coin, 0.0),
    ],
)
def test_lp_examples(mu, nu, expected):
    assert lp_distance(mu, nu) == pytest.approx(expected, abs=1e-12)
    assert lp_distance_oracle(mu, nu) == pytest.approx(expected, abs=1e-12)


def test_lp_of_close_diracs_is_their_distance():
    assert lp_distance(D.dirac([0.0]), D.dirac([0.3])) == pytest.approx(0.3)
    assert lp_distance(D.dirac([0.0, 0.0]), D.dirac([0.3, 0.4])) == pytest.approx(0.5)


def test_lp_errors():
    with pytest.raises(GraphLimError):
        lp_distance(d0, D.dirac([0.0, 0.0]))
    with pytest.raises(GraphLimError):
        lp_distance(d0, D.dirac([0.0], mass=2.0))
    with pytest.raises(GraphLimError):
        lp_distance(D.zero(), d0)
    with pytest.raises(GraphLimError):
        lp_distance_oracle(D(np.arange(7.0), np.full(7, 1 / 7)), D(np.arange(6.0), np.full(6, 1 / 6)))


def test_lp_matches_oracle_in_one_dimension(rng):
    # the line-flow path is used for dim 1
    for _ in range(300):
        mu, nu = random_measure(rng, 1, 6, grid=6), random_measure(rng, 1, 6, grid=6)
        assert abs(lp_distance(mu, nu) - lp_distance_oracle(mu, nu)) <= 1e-9


def test_lp_general_matches_oracle_for_equal_masses(rng):
    for _ in range(150):
        m = float(rng.uniform(0.2, 3.0))
        dim = int(rng.integers(1, 3))
        mu, nu = random_measure(rng, dim, mass=m), random_measure(rng, dim, mass=m)
        assert abs(lp_general(mu, nu) - lp_distance_oracle(mu, nu)) <= 1e-9


# -- metric properties ---------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_lp_symmetric_bit_exact(seed, dim):
    rng = np.random.default_rng(seed)
    mu, nu = random_measure(rng, dim), random_measure(rng, dim)
    assert lp_distance(mu, nu) == lp_distance(nu, mu)
    assert lp_distance(mu, mu) == 0.0


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_lp_triangle_inequality(seed, dim):
    rng = np.random.default_rng(seed)
    a, b, c = (random_measure(rng, dim) for _ in range(3))
    assert lp_distance(a, c) <= lp_distance(a, b) + lp_distance(b, c) + 1e-9
    assert 0.0 <= lp_distance(a, c) <= 1.0


# -- Hausdorff ---------------------------------------------------------------


def test_hausdorff_examples():
    assert hausdorff_distance(MeasureSet((d0,)), MeasureSet((d0,))) == 0.0
    assert hausdorff_distance(MeasureSet((d0,)), MeasureSet((d0, d1))) == 1.0
    assert hausdorff_distance(MeasureSet((d0, d1)), MeasureSet((d1, d0))) == 0.0


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_hausdorff_pseudometric(seed):
    rng = np.random.default_rng(seed)
    sets = [MeasureSet(tuple(random_measure(rng, 1) for _ in range(int(rng.integers(1, 4))))) for _ in range(3)]
    a, b, c = sets
    assert hausdorff_distance(a, b) == hausdorff_distance(b, a)
    assert hausdorff_distance(a, a) == 0.0
    assert hausdorff_distance(a, c) <= hausdorff_distance(a, b) + hausdorff_distance(b, c) + 1e-9


# -- measure calculus ----------------------------------------------------------


def test_marginal_examples():
    assert marginal(D.dirac([0.0, 1.0]), [0]) == d0
    assert marginal(D([[0.0, 0.0], [1.0, 0.0]], [0.5, 0.5]), [1]) == d0
    assert marginal(D([[0.0, 3.0], [1.0, 4.0]], [0.5, 0.5]), [1]) == D([3.0, 4.0], [0.5, 0.5])
    with pytest.raises(GraphLimError):
        marginal(d0, [1])


def test_restrict_examples():
    two = D([0.0, 2.0], [0.5, 0.5])
    assert restrict(two, [(-1.0, 1.0)]) == D([0.0], [0.5])
    assert restrict(D.dirac([5.0]), [(0.0, 10.0)]) == D.dirac([5.0])
    r = restrict(two, [(3.0, 4.0)])
    assert len(r) == 0 and r.mass == 0.0
    assert restrict(two, [(2.0, 2.0)]) == D([2.0], [0.5])  # closed box


def test_scale_mix_examples():
    assert scale_mix([d0], [2.0]) == D([0.0], [2.0])
    assert scale_mix([d0, d1], [0.5, 0.5]) == coin
    assert scale_mix([d0], [0.0]).mass == 0.0
    with pytest.raises(GraphLimError):
        scale_mix([d0], [1.0, 2.0])


def test_tau_examples():
    assert tau(D.dirac([0.0, 0.0])) == 0.0
    assert tau(D.dirac([3.0, -4.0])) == 4.0
    assert tau(D([[2.0, 0.0], [0.0, 2.0]], [0.5, 0.5])) == 1.0


# -- inequality suite --------------------------------------------------------


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1.0, 5.0))
def test_scaling_inequality(seed, alpha):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 4))
    mu, nu = random_measure(rng, dim), random_measure(rng, dim)
    base = lp_distance(mu, nu)
    scaled = lp_general(scale_mix([mu], [alpha]), scale_mix([nu], [alpha]))
    assert base - 1e-9 <= scaled <= alpha * base + 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.0, 0.25, 0.5, 1.0]))
def test_quasi_convexity(seed, alpha):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(1, 4))
    m1, n1, m2, n2 = (random_measure(rng, dim) for _ in range(4))
    mix = lp_distance(scale_mix([m1, m2], [alpha, 1 - alpha]), scale_mix([n1, n2], [alpha, 1 - alpha]))
    assert mix <= max(lp_distance(m1, n1), lp_distance(m2, n2)) + 1e-9


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_marginal_bound(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 4))
    mu, nu = random_measure(rng, dim), random_measure(rng, dim)
    full = lp_distance(mu, nu)
    for mask in range(1, 1 << dim):
        c = [i for i in range(dim) if mask >> i & 1]
        assert lp_distance(marginal(mu, c), marginal(nu, c)) <= full + 1e-9


def coupled_laws(rng, k: int, size: int):
    """Laws of two jointly distributed k-vectors on a finite probability space, and of their difference."""
    p = rng.random(size) + 0.1
    p /= p.sum()
    x = rng.normal(size=(size, k))
    y = x + rng.normal(scale=float(rng.choice([0.01, 0.1, 1.0])), size=(size, k))
    return D(x, p), D(y, p), D(x - y, p), p, x, y


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 3))
def test_coupling_bounds(seed, k):
    rng = np.random.default_rng(seed)
    lx, ly, diff, p, x, y = coupled_laws(rng, k, 5)
    d = lp_distance(lx, ly)
    assert d <= math.sqrt(tau(diff)) * k**0.75 + 1e-9
    m = max(math.fsum(p * np.abs(x[:, i] - y[:, i])) for i in range(k))
    assert d <= math.sqrt(m) * k**0.75 + 1e-9
