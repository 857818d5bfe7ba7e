"""Profile measures, k-profiles over partitions, and the truncated d_M metric.

For test functions ``f_1..f_k`` on the ground set, the profile measure of a
step P-variable ``W`` is the law of
``(f_1(x), f_1(y), ..., f_k(x), f_k(y), W(x, y, .))`` with ``x, y`` uniform.
Restricting the test functions to indicator vectors of labeled partitions
gives a finite family whose Hausdorff distances define ``d_M`` up to an
explicit truncation error.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import GraphLimError, budget, check_budget
from .measures import DiscreteMeasure, MeasureSet, hausdorff, lp_distance
from .partition import FunctionPartition, all_assignments
from .pvariable import StepPVariable, common_refinement, global_law, seed_for

DEFAULT_K_MAX = 4
DEFAULT_RESTARTS = 8
MOVES_PER_POINT = 200
# sampled d_M estimates compare against the full profile set when it is this small
CERTIFY_LIMIT = 4096
IMPROVE_TOL = 1e-12

__all__ = [
    "TestVector",
    "ProfileSet",
    "Strategy",
    "DMEstimate",
    "profile_measure",
    "partition_profile",
    "kprofile",
    "dm_estimate",
    "round_to_partition",
    "rounding_constant",
    "quantize_function",
    "symmetry_defect",
    "swap_coordinates",
]


@dataclass(frozen=True, eq=False)
class TestVector:
    """``k`` test functions on ``n`` ground points, clamped to ``[-1, 1]``."""

    __test__ = False  # keep pytest from collecting this class

    funcs: np.ndarray

    def __post_init__(self):
        f = np.array(self.funcs, dtype=np.float64)
        if f.ndim == 1:
            f = f[None, :]
        if f.ndim != 2 or f.shape[0] == 0 or f.shape[1] == 0:
            raise GraphLimError("test functions must form a non-empty k x n array")
        if not np.all(np.isfinite(f)):
            raise GraphLimError("test function values must be finite")
        f = np.clip(f, -1.0, 1.0)
        f.setflags(write=False)
        object.__setattr__(self, "funcs", f)

    @property
    def k(self) -> int:
        return self.funcs.shape[0]

    @property
    def n(self) -> int:
        return self.funcs.shape[1]

    @classmethod
    def from_partition(cls, p: FunctionPartition) -> "TestVector":
        return cls(p.indicators())


@dataclass(frozen=True)
class ProfileSet:
    """Distinct profile measures of one order with the partitions that produced them."""

    k: int
    measures: MeasureSet
    provenance: tuple[FunctionPartition, ...]

    def __len__(self) -> int:
        return len(self.measures)


@dataclass(frozen=True)
class Strategy:
    """How a partition family is explored.

    ``exhaustive`` enumerates every labeled partition, ``random`` draws
    ``samples`` uniform labelings, ``local`` runs ``samples`` hill-climbing
    restarts against an objective.
    """

    kind: str = "exhaustive"
    samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("exhaustive", "random", "local"):
            raise GraphLimError(f"unknown strategy {self.kind!r}")
        if self.kind != "exhaustive" and self.samples < 1:
            raise GraphLimError(f"{self.kind} strategy needs a positive sample count")

    @classmethod
    def parse(cls, text: str, seed: int = 0) -> "Strategy":
        """Parse ``exhaustive``, ``random:M`` or ``local:M``."""
        name, _, count = text.partition(":")
        name = {"local_search": "local"}.get(name, name)
        if name == "exhaustive":
            if count:
                raise GraphLimError("exhaustive strategy takes no count")
            return cls("exhaustive", 0, seed)
        try:
            samples = int(count) if count else DEFAULT_RESTARTS
        except ValueError as exc:
            raise GraphLimError(f"bad strategy count in {text!r}") from exc
        return cls(name, samples, seed)

    def __str__(self) -> str:
        return self.kind if self.kind == "exhaustive" else f"{self.kind}:{self.samples}"


EXHAUSTIVE = Strategy()


# ---------------------------------------------------------------------------
# profile measures


def _grouped_profile(w: StepPVariable, groups: np.ndarray, coords: np.ndarray) -> DiscreteMeasure:
    """Profile measure when point ``x`` carries test-function values ``coords[groups[x]]``.

    Cell masses are accumulated as integer counts per (group pair, law) and
    then expanded over law atoms, so the result depends only on those
    counts and not on how the ground set is ordered.
    """
    n, L = w.n, len(w.laws)
    g = coords.shape[0]
    key = (groups[:, None] * g + groups[None, :]) * L + w.ids
    counts = np.bincount(key.ravel(), minlength=g * g * L)
    nz = np.flatnonzero(counts)
    pair, law = np.divmod(nz, L)
    z, table = w.grid()
    rows_pair, rows_z, rows_w = [], [], []
    for t in np.unique(law).tolist():
        sel = law == t
        cols = np.flatnonzero(table[t])
        rows_pair.append(np.repeat(pair[sel], cols.size))
        rows_z.append(np.tile(cols, int(sel.sum())))
        rows_w.append(np.outer(counts[nz[sel]].astype(np.float64), table[t, cols]).ravel())
    pair = np.concatenate(rows_pair)
    zi = np.concatenate(rows_z)
    mass = np.concatenate(rows_w)
    # accumulate equal (pair, z) keys in a fixed order
    k2 = pair * z.size + zi
    order = np.lexsort((mass, k2))
    k2, mass = k2[order], mass[order]
    starts = np.flatnonzero(np.concatenate(([True], k2[1:] != k2[:-1])))
    sums = np.add.reduceat(mass, starts) / (float(n) * float(n))
    keys = k2[starts]
    pair, zi = np.divmod(keys, z.size)
    a, b = np.divmod(pair, g)
    d = coords.shape[1]
    atoms = np.empty((keys.size, 2 * d + 1))
    atoms[:, 0 : 2 * d : 2] = coords[a]
    atoms[:, 1 : 2 * d : 2] = coords[b]
    atoms[:, -1] = z[zi]
    return DiscreteMeasure(atoms, sums)


def profile_measure(w: StepPVariable, t: TestVector) -> DiscreteMeasure:
    """Law of ``(f_1(x), f_1(y), ..., f_k(x), f_k(y), W(x, y, .))`` on R^(2k+1)."""
    if t.n != w.n:
        raise GraphLimError(f"test vector has {t.n} points, P-variable has {w.n}")
    coords, groups = np.unique(t.funcs.T, axis=0, return_inverse=True)
    return _grouped_profile(w, groups.reshape(-1), coords)


def partition_profile(w: StepPVariable, p: FunctionPartition) -> DiscreteMeasure:
    """Profile measure of the indicator functions of a partition."""
    if p.n != w.n:
        raise GraphLimError(f"partition has {p.n} points, P-variable has {w.n}")
    return _grouped_profile(w, p.assign, np.eye(p.k))


def _profile_of(w: StepPVariable, assign: np.ndarray, k: int) -> DiscreteMeasure:
    return _grouped_profile(w, assign, np.eye(k))


def swap_coordinates(mu: DiscreteMeasure) -> DiscreteMeasure:
    """Exchange each ``(f_i(x), f_i(y))`` coordinate pair of a profile measure."""
    d = mu.dim
    if d % 2 != 1:
        raise GraphLimError("profile measures have odd dimension")
    perm = np.arange(d)
    perm[0 : d - 1 : 2] += 1
    perm[1 : d - 1 : 2] -= 1
    return DiscreteMeasure(mu.atoms[:, perm], mu.weights, dim=d)


# ---------------------------------------------------------------------------
# partition families


def _exhaustive_assignments(n: int, k: int) -> np.ndarray:
    check_budget(k**n, f"{k}^{n} labeled partitions")
    return all_assignments(n, k)


def _collect(w: StepPVariable, k: int, assigns: Sequence[np.ndarray]) -> ProfileSet:
    seen: dict[DiscreteMeasure, FunctionPartition] = {}
    for a in assigns:
        mu = _profile_of(w, np.asarray(a, dtype=np.int64), k)
        if mu not in seen:
            seen[mu] = FunctionPartition(np.array(a, dtype=np.int64), k)
    return ProfileSet(k, MeasureSet(tuple(seen)), tuple(seen.values()))


def _hill_climb(
    n: int,
    k: int,
    start: np.ndarray,
    score: Callable[[np.ndarray, float], float],
    rng: np.random.Generator,
    max_moves: int,
) -> tuple[np.ndarray, float]:
    """First-improvement single-point relabeling ascent.

    ``score(assign, bar)`` may return any value ``<= bar`` as soon as it can
    tell the candidate does not beat ``bar``.
    """
    x = start.copy()
    best = score(x, -math.inf)
    moves = 0
    improved = True
    while improved and moves < max_moves and k > 1:
        improved = False
        for i in rng.permutation(n).tolist():
            old = x[i]
            for c in rng.permutation(k).tolist():
                if c == old:
                    continue
                x[i] = c
                moves += 1
                val = score(x, best)
                if val > best + IMPROVE_TOL:
                    best = val
                    improved = True
                    break
                x[i] = old
                if moves >= max_moves:
                    break
            if improved or moves >= max_moves:
                break
    return x, best


def kprofile(
    w: StepPVariable,
    k: int,
    strategy: Strategy = EXHAUSTIVE,
    objective: Callable[[DiscreteMeasure], float] | None = None,
) -> ProfileSet:
    """Deduplicated set of profile measures of ``k``-cell labeled partitions.

    ``local`` needs ``objective`` (maximized) and keeps the final partition
    of each restart.
    """
    if k < 1:
        raise GraphLimError("profile order must be positive")
    n = w.n
    if strategy.kind == "exhaustive":
        return _collect(w, k, _exhaustive_assignments(n, k))
    rng = np.random.default_rng(seed_for(strategy.seed, k))
    if strategy.kind == "random":
        return _collect(w, k, rng.integers(0, k, size=(strategy.samples, n)))
    if objective is None:
        raise GraphLimError("local strategy needs an objective to maximize")
    finals = []
    for _ in range(strategy.samples):
        start = rng.integers(0, k, size=n)
        x, _ = _hill_climb(n, k, start, lambda a, bar: objective(_profile_of(w, a, k)), rng, MOVES_PER_POINT * n)
        finals.append(x)
    return _collect(w, k, finals)


# ---------------------------------------------------------------------------
# d_M


@dataclass
class DMEstimate:
    """Interval for the truncated d_M sum; iterates as ``(lower, upper)``."""

    lower: float
    upper: float
    truncation_bound: float
    terms: list[tuple[float, float]] = field(default_factory=list)

    def __iter__(self):
        return iter((self.lower, self.upper))

    def to_json(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "truncation_bound": self.truncation_bound}


def _directed_min(mu: DiscreteMeasure, members: Sequence[DiscreteMeasure], bar: float) -> float:
    best = math.inf
    for b in members:
        best = min(best, lp_distance(mu, b))
        if best <= bar:
            break
    return best


def _sampled_term(u: StepPVariable, w: StepPVariable, k: int, strategy: Strategy, floor: float) -> tuple[float, float]:
    n = u.n
    full = k**n <= min(CERTIFY_LIMIT, budget())
    refs = {}
    for side, x in (("u", u), ("w", w)):
        if full:
            refs[side] = kprofile(x, k, EXHAUSTIVE)
        else:
            count = max(strategy.samples, DEFAULT_RESTARTS)
            refs[side] = kprofile(x, k, Strategy("random", count, _side_seed(strategy.seed, k, side)))

    lower, upper = floor, floor
    if full:
        # both sets are enumerated, so the exact term is a certified upper end
        upper = hausdorff(refs["u"].measures.members, refs["w"].measures.members, lp_distance, key=lambda m: m)
    for side, x, other, y in (("u", u, "w", w), ("w", w, "u", u)):
        ref = refs[other].measures.members
        rng = np.random.default_rng(seed_for(strategy.seed, k, 1 if side == "u" else 2))
        if strategy.kind == "random":
            cands = [_profile_of(x, a, k) for a in rng.integers(0, k, size=(strategy.samples, n))]
        else:
            def score(a, bar, x=x, ref=ref):
                return _directed_min(_profile_of(x, a, k), ref, bar)

            cands = []
            for _ in range(strategy.samples):
                a, _ = _hill_climb(n, k, rng.integers(0, k, size=n), score, rng, MOVES_PER_POINT * n)
                cands.append(_profile_of(x, a, k))
        for mu in dict.fromkeys(cands):
            d = _directed_min(mu, ref, -1.0)
            if full:
                lower = max(lower, d)
            else:
                upper = max(upper, _best_response(mu, y, k, refs[other], d, rng))
    return lower, max(upper, lower)


def _side_seed(seed: int, k: int, side: str) -> int:
    return int(seed_for(seed, k, 3 if side == "u" else 4).generate_state(1, np.uint64)[0])


def _best_response(mu, y: StepPVariable, k: int, ref: ProfileSet, current: float, rng) -> float:
    """Lower ``inf_b lp(mu, b)`` by descending over partitions of ``y``."""
    members = ref.measures.members
    idx = min(range(len(members)), key=lambda i: lp_distance(mu, members[i]))
    start = ref.provenance[idx].assign
    _, neg = _hill_climb(
        y.n, k, np.array(start), lambda a, bar: -lp_distance(mu, _profile_of(y, a, k)), rng, MOVES_PER_POINT * y.n
    )
    return min(current, -neg)


def dm_estimate(
    u: StepPVariable,
    w: StepPVariable,
    k_max: int = DEFAULT_K_MAX,
    strategy: Strategy = EXHAUSTIVE,
) -> DMEstimate:
    """Interval for ``sum_{k <= k_max} 2^-k d_H(S'_k(u), S'_k(w))``.

    Both arguments are first blown up to a common ground size.  Exhaustive
    strategy computes every Hausdorff term exactly.  Sampled strategies give
    a certified lower bound (the last-coordinate marginals, plus exact
    directed distances of sampled members when the profile sets are small
    enough to enumerate).  In that small case the upper end is the exact
    term; otherwise it is a heuristic value from best-response search.  The tail beyond
    ``k_max`` is at most ``2^-k_max`` and is reported separately.
    """
    if k_max < 1:
        raise GraphLimError("k_max must be at least 1")
    u, w = common_refinement(u, w)
    floor = lp_distance(global_law(u), global_law(w))
    terms = []
    for k in range(1, k_max + 1):
        if strategy.kind == "exhaustive":
            su = kprofile(u, k, EXHAUSTIVE).measures
            sw = kprofile(w, k, EXHAUSTIVE).measures
            d = hausdorff(su.members, sw.members, lp_distance, key=lambda m: m)
            terms.append((d, d))
        else:
            terms.append(_sampled_term(u, w, k, strategy, floor))
    lower = math.fsum(t[0] * 2.0**-k for k, t in enumerate(terms, 1))
    upper = math.fsum(t[1] * 2.0**-k for k, t in enumerate(terms, 1))
    return DMEstimate(lower, upper, 2.0**-k_max, terms)


def symmetry_defect(w: StepPVariable, k: int, strategy: Strategy = EXHAUSTIVE) -> float:
    """Largest LP distance between an explored profile and its coordinate swap.

    The explored test vectors are the ``{0, 1}``-valued ones: point ``x``
    carries a label in ``[2^k]`` whose bits are ``f_1(x), ..., f_k(x)``.
    """
    if k < 1:
        raise GraphLimError("profile order must be positive")
    n, m = w.n, 2**k
    coords = ((np.arange(m)[:, None] >> np.arange(k)[None, :]) & 1).astype(np.float64)

    def defect(a, bar=-math.inf) -> float:
        mu = _grouped_profile(w, np.asarray(a, dtype=np.int64), coords)
        return lp_distance(mu, swap_coordinates(mu))

    if strategy.kind == "exhaustive":
        check_budget(m**n, f"{m}^{n} indicator test vectors")
        assigns = all_assignments(n, m)
    else:
        rng = np.random.default_rng(seed_for(strategy.seed, k))
        starts = rng.integers(0, m, size=(strategy.samples, n))
        if strategy.kind == "random":
            assigns = starts
        else:
            assigns = [_hill_climb(n, m, a, defect, rng, MOVES_PER_POINT * n)[0] for a in starts]
    return max(defect(a) for a in assigns)


# ---------------------------------------------------------------------------
# rounding utilities


def rounding_constant(k: int) -> int:
    """Constant ``C_k`` in ``||f_i - 1_{P_i}||_p <= C_k * delta``."""
    return k**3 + 3 * k**2 + 5 * k + 1


def _vector_law(funcs: np.ndarray) -> DiscreteMeasure:
    n = funcs.shape[1]
    return DiscreteMeasure(funcs.T, np.full(n, 1.0 / n))


def partition_defect(t: TestVector) -> float:
    """LP distance from the law of ``(f_1, ..., f_k)`` to its nearest-vertex rounding.

    The rounding sends each value vector to the closest basis vector ``e_i``
    (ties to the lowest index); its law is concentrated on ``{e_i}``, so this
    is an upper bound on the distance to that family.
    """
    f = t.funcs
    k, n = f.shape
    target = np.argmin(((f.T[:, None, :] - np.eye(k)[None, :, :]) ** 2).sum(axis=2), axis=1)
    law = _vector_law(f)
    vert = DiscreteMeasure(np.eye(k)[target], np.full(n, 1.0 / n))
    return lp_distance(law, vert)


def round_to_partition(t: TestVector, delta: float) -> FunctionPartition:
    """Round near-indicator test functions to a partition.

    Point ``x`` goes to cell ``i`` when ``f_i(x) > 1 - delta`` for exactly
    one ``i``; every other point goes to cell 0.  Requires the law of the
    test vector to be within ``delta`` of a law on the basis vectors, which
    is certified through :func:`partition_defect`.
    """
    if not delta > 0:
        raise GraphLimError("delta must be positive")
    measured = partition_defect(t)
    if measured > delta + 1e-12:
        raise GraphLimError(
            f"test vector is {measured:.6g} from a partition law, more than delta={delta:.6g}"
        )
    hits = t.funcs > 1.0 - delta
    assign = np.zeros(t.n, dtype=np.int64)
    single = hits.sum(axis=0) == 1
    assign[single] = np.argmax(hits[:, single], axis=0)
    return FunctionPartition(assign, t.k)


def quantize_function(f, levels: int) -> np.ndarray:
    """``ceil(levels * f) / levels``, treating values within 1e-9 of the grid as on it."""
    levels = int(levels)
    if levels < 1:
        raise GraphLimError("levels must be positive")
    x = np.asarray(f, dtype=np.float64) * levels
    near = np.rint(x)
    x = np.where(np.abs(x - near) <= 1e-9, near, np.ceil(x))
    return x / levels
