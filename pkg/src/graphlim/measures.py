"""Finitely supported measures on R^d.

The central routine is :func:`lp_distance`, the exact Levy-Prokhorov distance
between two discrete measures.  For a threshold ``t`` let ``F(t)`` be the
largest mass that can be transported between the two measures along pairs of
atoms at Euclidean distance at most ``t`` (a bipartite max-flow).  The
enlargement condition holds at ``eps`` exactly when ``F(eps) >= M - eps``
where ``M`` is the larger of the two total masses, so the distance is the
smallest ``max(t, M - F(t))`` over the distinct pairwise distances ``t``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Hashable, Iterable, Sequence, TypeVar

import numpy as np

from .errors import GraphLimError

MERGE_TOL = 1e-12
FEASIBILITY_TOL = 1e-12
MASS_TOL = 1e-9
ORACLE_MAX_SUPPORT = 12

__all__ = [
    "DiscreteMeasure",
    "MeasureSet",
    "lp_distance",
    "lp_general",
    "lp_distance_oracle",
    "hausdorff_distance",
    "hausdorff",
    "marginal",
    "restrict",
    "scale_mix",
    "tau",
]


def _snap_column(col: np.ndarray) -> np.ndarray:
    # single-linkage clustering of near-equal values onto the cluster minimum
    if col.size < 2:
        return col
    order = np.argsort(col, kind="stable")
    s = col[order]
    gaps = np.diff(s)
    if not np.any((gaps > 0) & (gaps <= MERGE_TOL)):
        return col
    starts = np.concatenate(([True], gaps > MERGE_TOL))
    reps = s[starts][np.cumsum(starts) - 1]
    out = np.empty_like(col)
    out[order] = reps
    return out


def _canonicalize(atoms: np.ndarray, weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    keep = weights != 0.0
    if not keep.all():
        atoms, weights = atoms[keep], weights[keep]
    m, d = atoms.shape
    if m == 0:
        return np.zeros((0, d)), np.zeros(0)
    if m == 1:
        return atoms.copy(), weights.copy()
    snapped = np.column_stack([_snap_column(atoms[:, c]) for c in range(d)])
    uniq, inverse = np.unique(snapped, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    if uniq.shape[0] == m:
        # already distinct; np.unique sorted the rows lexicographically
        out = np.empty(m)
        out[inverse] = weights
        return uniq, out
    # sorting each group's weights makes the merged sum independent of input order
    order = np.lexsort((weights, inverse))
    grp = inverse[order]
    starts = np.flatnonzero(np.concatenate(([True], grp[1:] != grp[:-1])))
    sums = np.add.reduceat(weights[order], starts)
    return uniq, sums


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


class DiscreteMeasure:
    """A finitely supported nonnegative measure on R^dim.

    Atoms are merged when closer than ``MERGE_TOL`` coordinatewise, zero
    weights are dropped, and atoms are stored in lexicographic order, so two
    measures built from the same multiset of (atom, weight) pairs compare
    equal bit for bit.
    """

    __slots__ = ("atoms", "weights", "_hash")

    def __init__(self, atoms, weights, dim: int | None = None):
        w = np.asarray(weights, dtype=np.float64).reshape(-1)
        a = np.asarray(atoms, dtype=np.float64)
        if a.ndim == 1:
            if dim is not None and dim > 1:
                a = a.reshape(-1, dim)
            else:
                a = a.reshape(-1, 1)
        elif a.ndim != 2:
            raise GraphLimError("atoms must be a list of points")
        if a.shape[0] == 0 and dim is not None:
            a = np.zeros((0, dim))
        if dim is not None and a.shape[1] != dim:
            raise GraphLimError(f"atoms have dimension {a.shape[1]}, expected {dim}")
        if a.shape[1] < 1:
            raise GraphLimError("dimension must be positive")
        if a.shape[0] != w.shape[0]:
            raise GraphLimError("atoms and weights differ in length")
        if not np.all(np.isfinite(a)) or not np.all(np.isfinite(w)):
            raise GraphLimError("atoms and weights must be finite")
        if np.any(w < 0):
            raise GraphLimError("weights must be nonnegative")
        a, w = _canonicalize(a, w)
        self.atoms = _freeze(a)
        self.weights = _freeze(w)
        self._hash = None

    @classmethod
    def _trusted(cls, atoms: np.ndarray, weights: np.ndarray) -> "DiscreteMeasure":
        obj = cls.__new__(cls)
        obj.atoms = _freeze(atoms)
        obj.weights = _freeze(weights)
        obj._hash = None
        return obj

    @classmethod
    def dirac(cls, point, mass: float = 1.0) -> "DiscreteMeasure":
        p = np.atleast_1d(np.asarray(point, dtype=np.float64))
        return cls(p.reshape(1, -1), [mass])

    @classmethod
    def zero(cls, dim: int = 1) -> "DiscreteMeasure":
        return cls(np.zeros((0, dim)), [], dim=dim)

    @property
    def dim(self) -> int:
        return self.atoms.shape[1]

    @property
    def mass(self) -> float:
        return math.fsum(self.weights)

    def is_probability(self, tol: float = FEASIBILITY_TOL) -> bool:
        return abs(self.mass - 1.0) <= tol

    def __len__(self) -> int:
        return self.weights.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiscreteMeasure):
            return NotImplemented
        return (
            self.atoms.shape == other.atoms.shape
            and np.array_equal(self.atoms, other.atoms)
            and np.array_equal(self.weights, other.weights)
        )

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.atoms.shape, self.atoms.tobytes(), self.weights.tobytes()))
        return self._hash

    def key(self) -> bytes:
        return self.atoms.tobytes() + b"|" + self.weights.tobytes() + bytes([self.dim])

    def __repr__(self) -> str:
        terms = " + ".join(
            f"{w:.6g}*d{tuple(float(x) for x in a) if self.dim > 1 else float(a[0])}"
            for a, w in zip(self.atoms[:6], self.weights[:6])
        )
        more = "" if len(self) <= 6 else f" + ... ({len(self)} atoms)"
        return f"DiscreteMeasure({terms or '0'}{more})"

    def integrate(self, fn: Callable[[np.ndarray], np.ndarray]) -> float:
        """Integral of a vectorised function of the atoms (shape (m, dim))."""
        if len(self) == 0:
            return 0.0
        vals = np.asarray(fn(self.atoms), dtype=np.float64).reshape(-1)
        return math.fsum(vals * self.weights)

    def to_json(self) -> dict:
        return {
            "dim": self.dim,
            "atoms": self.atoms.tolist(),
            "weights": self.weights.tolist(),
        }

    @classmethod
    def from_json(cls, obj: dict) -> "DiscreteMeasure":
        try:
            dim = int(obj["dim"])
            atoms = obj["atoms"]
            weights = obj["weights"]
        except (KeyError, TypeError) as exc:
            raise GraphLimError(f"not a measure object: {obj!r}") from exc
        return cls(np.asarray(atoms, dtype=np.float64).reshape(len(weights), dim), weights, dim=dim)


@dataclass(frozen=True)
class MeasureSet:
    """A finite, non-empty collection of measures of one dimension."""

    members: tuple[DiscreteMeasure, ...]

    def __post_init__(self):
        members = tuple(self.members)
        if not members:
            raise GraphLimError("a measure set must be non-empty")
        dims = {m.dim for m in members}
        if len(dims) != 1:
            raise GraphLimError(f"mixed dimensions in measure set: {sorted(dims)}")
        object.__setattr__(self, "members", members)

    @property
    def dim(self) -> int:
        return self.members[0].dim

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)


# ---------------------------------------------------------------------------
# Levy-Prokhorov distance


class _BipartiteFlow:
    """Max-flow from the atoms of one measure to the atoms of another.

    Edges are admitted by raising a distance threshold; flow already routed
    stays feasible, so successive thresholds warm-start from the last state.
    """

    def __init__(self, dist: np.ndarray, a: np.ndarray, b: np.ndarray):
        self.dist = dist
        self.ra = a.astype(np.float64).copy()
        self.rb = b.astype(np.float64).copy()
        self.flow = np.zeros(dist.shape)
        self.value = 0.0
        self.threshold = -np.inf
        self.adj: list[list[int]] = [[] for _ in range(dist.shape[0])]
        self.eps = 1e-15 * max(1.0, float(a.sum()), float(b.sum()))

    def copy(self) -> "_BipartiteFlow":
        new = _BipartiteFlow.__new__(_BipartiteFlow)
        new.dist = self.dist
        new.ra = self.ra.copy()
        new.rb = self.rb.copy()
        new.flow = self.flow.copy()
        new.value = self.value
        new.threshold = self.threshold
        new.adj = [list(x) for x in self.adj]
        new.eps = self.eps
        return new

    def raise_to(self, t: float) -> float:
        if t > self.threshold:
            self.threshold = t
            self.adj = [np.flatnonzero(row <= t).tolist() for row in self.dist]
        self._augment()
        return self.value

    def _augment(self) -> None:
        eps = self.eps
        ra, rb, flow, adj = self.ra, self.rb, self.flow, self.adj
        p, q = flow.shape
        while True:
            from_right = [-1] * p  # -1: unvisited, -2: reached from source
            from_left = [-1] * q
            frontier = [i for i in range(p) if ra[i] > eps]
            for i in frontier:
                from_right[i] = -2
            hit = -1
            while frontier and hit < 0:
                nxt = []
                for i in frontier:
                    for j in adj[i]:
                        if from_left[j] != -1:
                            continue
                        from_left[j] = i
                        if rb[j] > eps:
                            hit = j
                            break
                        for i2 in np.flatnonzero(flow[:, j] > eps).tolist():
                            if from_right[i2] == -1:
                                from_right[i2] = j
                                nxt.append(i2)
                    if hit >= 0:
                        break
                frontier = nxt
            if hit < 0:
                return
            # walk back to the source collecting the bottleneck
            bottleneck = rb[hit]
            j = hit
            while True:
                i = from_left[j]
                prev = from_right[i]
                if prev == -2:
                    bottleneck = min(bottleneck, ra[i])
                    break
                bottleneck = min(bottleneck, flow[i, prev])
                j = prev
            j = hit
            rb[hit] -= bottleneck
            while True:
                i = from_left[j]
                flow[i, j] += bottleneck
                prev = from_right[i]
                if prev == -2:
                    ra[i] -= bottleneck
                    break
                flow[i, prev] -= bottleneck
                j = prev
            self.value += bottleneck


def _pairwise(xa: np.ndarray, xb: np.ndarray) -> np.ndarray:
    diff = xa[:, None, :] - xb[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def _line_flow(xa: list, wa: list, xb: list, wb: list, t: float) -> float:
    """Max flow between sorted atoms on a line along pairs at distance <= t.

    Each left atom takes mass from the leftmost reachable right atoms; the
    reachable windows move monotonically, which makes this greedy exact.
    """
    rest = list(wb)
    j0 = 0
    q = len(xb)
    total = 0.0
    for x, m in zip(xa, wa):
        # distances use the same expression as the threshold list
        while j0 < q and ((xb[j0] < x and x - xb[j0] > t) or rest[j0] <= 0.0):
            j0 += 1
        j = j0
        while m > 0.0 and j < q and abs(xb[j] - x) <= t:
            take = min(m, rest[j])
            if take > 0.0:
                rest[j] -= take
                m -= take
                total += take
            j += 1
    return total


def _lp_line(xa: np.ndarray, wa: np.ndarray, xb: np.ndarray, wb: np.ndarray, total: float) -> float:
    dist = np.abs(xa[:, None] - xb[None, :])
    thresholds = np.unique(dist)
    thresholds = thresholds[thresholds < total]
    if thresholds.size == 0:
        return total
    ia, ib = np.argsort(xa, kind="stable"), np.argsort(xb, kind="stable")
    args = (xa[ia].tolist(), wa[ia].tolist(), xb[ib].tolist(), wb[ib].tolist())

    def gap(t: float) -> float:
        g = total - _line_flow(*args, t)
        return 0.0 if g <= FEASIBILITY_TOL else g

    lo, lo_gap, hi = -1, total, thresholds.size
    while hi - lo > 1:
        mid = (lo + hi) // 2
        g = gap(thresholds[mid])
        if thresholds[mid] >= g:
            hi = mid
        else:
            lo, lo_gap = mid, g
    best = lo_gap
    if hi < thresholds.size:
        best = min(best, float(thresholds[hi]))
    return min(best, total)


def _lp_arrays(xa: np.ndarray, wa: np.ndarray, xb: np.ndarray, wb: np.ndarray) -> float:
    total = max(math.fsum(wa), math.fsum(wb))
    if wa.size == 0 or wb.size == 0:
        return total
    if xa.shape[1] == 1:
        return float(_lp_line(xa[:, 0], wa, xb[:, 0], wb, total))
    dist = _pairwise(xa, xb)
    thresholds = np.unique(dist)
    thresholds = thresholds[thresholds < total]
    if thresholds.size == 0:
        return total

    def gap(value: float) -> float:
        g = total - value
        return 0.0 if g <= FEASIBILITY_TOL else g

    # smallest index c with thresholds[c] >= gap(c); gap is nonincreasing
    base = _BipartiteFlow(dist, wa, wb)
    lo, lo_state, lo_gap = -1, base, total
    hi = thresholds.size
    while hi - lo > 1:
        mid = (lo + hi) // 2
        state = lo_state.copy()
        g = gap(state.raise_to(thresholds[mid]))
        if thresholds[mid] >= g:
            hi = mid
        else:
            lo, lo_state, lo_gap = mid, state, g
    best = lo_gap if lo >= 0 else total
    if hi < thresholds.size:
        best = min(best, float(thresholds[hi]))
    return float(min(best, total))


def _ordered(mu: DiscreteMeasure, nu: DiscreteMeasure) -> tuple[DiscreteMeasure, DiscreteMeasure]:
    # fixed orientation makes the result symmetric bit for bit
    if (len(mu), mu.key()) <= (len(nu), nu.key()):
        return mu, nu
    return nu, mu


def lp_general(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Levy-Prokhorov distance between arbitrary finite measures.

    With unequal total masses the enlargement condition is applied verbatim,
    which amounts to requiring ``F(eps) >= max(mass) - eps``.
    """
    if mu.dim != nu.dim:
        raise GraphLimError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    if mu == nu:
        return 0.0
    a, b = _ordered(mu, nu)
    return _lp_arrays(a.atoms, a.weights, b.atoms, b.weights)


def _check_probability(mu: DiscreteMeasure, name: str) -> None:
    if len(mu) == 0:
        raise GraphLimError(f"{name} has empty support")
    if abs(mu.mass - 1.0) > MASS_TOL:
        raise GraphLimError(f"{name} is not a probability measure (mass {mu.mass!r})")


def lp_distance(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Exact Levy-Prokhorov distance between two discrete probability measures."""
    if mu.dim != nu.dim:
        raise GraphLimError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    _check_probability(mu, "mu")
    _check_probability(nu, "nu")
    return lp_general(mu, nu)


def lp_distance_oracle(mu: DiscreteMeasure, nu: DiscreteMeasure) -> float:
    """Brute-force Levy-Prokhorov distance by enumerating every subset.

    Checks ``mu(U) <= nu(U^eps) + eps`` and the mirrored inequality for all
    subsets of both supports at every candidate ``eps`` (pairwise distances
    and the mass gaps they induce) and returns the smallest feasible one.
    Independent of the max-flow route; meant for supports of at most
    ``ORACLE_MAX_SUPPORT`` atoms in total.
    """
    if mu.dim != nu.dim:
        raise GraphLimError(f"dimension mismatch: {mu.dim} vs {nu.dim}")
    p, q = len(mu), len(nu)
    if p + q > ORACLE_MAX_SUPPORT:
        raise GraphLimError(f"oracle limited to {ORACLE_MAX_SUPPORT} atoms, got {p + q}")
    total = max(mu.mass, nu.mass)
    if p == 0 or q == 0:
        return total
    xa, wa, xb, wb = mu.atoms, mu.weights.tolist(), nu.atoms, nu.weights.tolist()
    dist = np.array([[math.dist(x, y) for y in xb] for x in xa])

    def subset_masses(w: list[float]) -> list[float]:
        out = [0.0] * (1 << len(w))
        for s in range(1, 1 << len(w)):
            low = (s & -s).bit_length() - 1
            out[s] = out[s & (s - 1)] + w[low]
        return out

    mass_a, mass_b = subset_masses(wa), subset_masses(wb)

    def worst_gap(eps: float) -> float:
        near_a = [sum(1 << j for j in range(q) if dist[i, j] <= eps) for i in range(p)]
        near_b = [sum(1 << i for i in range(p) if dist[i, j] <= eps) for j in range(q)]
        g = 0.0
        for nbrs, own, other in ((near_a, mass_a, mass_b), (near_b, mass_b, mass_a)):
            reach = [0] * len(own)
            for s in range(1, len(own)):
                low = (s & -s).bit_length() - 1
                reach[s] = reach[s & (s - 1)] | nbrs[low]
                g = max(g, own[s] - other[reach[s]])
        return g

    candidates = {0.0, float(total)}
    for d in np.unique(dist).tolist():
        candidates.add(d)
    for c in list(candidates):
        candidates.add(worst_gap(c))
    for c in sorted(candidates):
        if c >= 0 and worst_gap(c) <= c + FEASIBILITY_TOL:
            return c
    return total


# ---------------------------------------------------------------------------
# Hausdorff distance over sets

T = TypeVar("T")


def hausdorff(
    xs: Sequence[T],
    ys: Sequence[T],
    dist: Callable[[T, T], float],
    key: Callable[[T], Hashable] | None = None,
) -> float:
    """Hausdorff distance between two finite sets under ``dist``.

    ``key`` (when given) identifies members at distance zero, which lets
    shared members skip the inner minimisation entirely.
    """
    if not xs or not ys:
        raise GraphLimError("Hausdorff distance needs non-empty sets")
    return max(_directed(xs, ys, dist, key, 0.0), _directed(ys, xs, lambda a, b: dist(b, a), key, 0.0))


def _directed(xs, ys, dist, key, floor: float) -> float:
    known = {key(y) for y in ys} if key is not None else set()
    worst = floor
    for x in xs:
        if key is not None and key(x) in known:
            continue
        best = math.inf
        for y in ys:
            best = min(best, dist(x, y))
            if best <= worst:
                break
        worst = max(worst, best)
    return worst


def hausdorff_distance(a: MeasureSet, b: MeasureSet) -> float:
    """Hausdorff distance between two measure sets under :func:`lp_distance`."""
    if a.dim != b.dim:
        raise GraphLimError(f"dimension mismatch: {a.dim} vs {b.dim}")
    return hausdorff(a.members, b.members, lp_distance, key=lambda m: m)


# ---------------------------------------------------------------------------
# Measure calculus


def marginal(mu: DiscreteMeasure, coords: Sequence[int]) -> DiscreteMeasure:
    """Pushforward under projection onto ``coords``."""
    coords = [int(c) for c in coords]
    if not coords:
        raise GraphLimError("at least one coordinate is required")
    if len(set(coords)) != len(coords):
        raise GraphLimError("coordinates must be distinct")
    bad = [c for c in coords if not 0 <= c < mu.dim]
    if bad:
        raise GraphLimError(f"coordinate index out of range: {bad}")
    return DiscreteMeasure(mu.atoms[:, coords], mu.weights, dim=len(coords))


def restrict(mu: DiscreteMeasure, box: Sequence[tuple[float, float]]) -> DiscreteMeasure:
    """Restriction of ``mu`` to a closed axis-aligned box."""
    box = np.asarray(box, dtype=np.float64).reshape(-1, 2)
    if box.shape[0] != mu.dim:
        raise GraphLimError(f"box has {box.shape[0]} sides, measure has dimension {mu.dim}")
    inside = np.all((mu.atoms >= box[:, 0]) & (mu.atoms <= box[:, 1]), axis=1)
    return DiscreteMeasure._trusted(mu.atoms[inside], mu.weights[inside])


def scale_mix(measures: Sequence[DiscreteMeasure], coefficients: Sequence[float]) -> DiscreteMeasure:
    """The combination ``sum_i c_i mu_i`` with nonnegative coefficients."""
    measures = list(measures)
    coefficients = [float(c) for c in coefficients]
    if len(measures) != len(coefficients):
        raise GraphLimError("measures and coefficients differ in length")
    if not measures:
        raise GraphLimError("need at least one measure")
    if any(c < 0 or not math.isfinite(c) for c in coefficients):
        raise GraphLimError("coefficients must be finite and nonnegative")
    dims = {m.dim for m in measures}
    if len(dims) != 1:
        raise GraphLimError(f"mixed dimensions: {sorted(dims)}")
    atoms = np.concatenate([m.atoms for m in measures])
    weights = np.concatenate([c * m.weights for m, c in zip(measures, coefficients)])
    return DiscreteMeasure(atoms, weights, dim=dims.pop())


def tau(mu: DiscreteMeasure) -> float:
    """Largest first absolute moment over the coordinates."""
    if len(mu) == 0:
        return 0.0
    return max(math.fsum(np.abs(mu.atoms[:, i]) * mu.weights) for i in range(mu.dim))


def as_measures(items: Iterable) -> list[DiscreteMeasure]:
    return [m if isinstance(m, DiscreteMeasure) else DiscreteMeasure.from_json(m) for m in items]
