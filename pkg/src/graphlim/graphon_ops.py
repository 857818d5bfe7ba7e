"""Probability-graphon operations on step P-variables.

Block measures, cut semidistance and its relabeling-minimized version,
homomorphism densities of decorated graphs, overlay functionals, quotient
graphs and distances between quotient sets.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import GraphLimError, budget, check_budget
from .interval import Interval
from .measures import DiscreteMeasure, _lp_arrays, hausdorff, lp_distance, lp_general, scale_mix
from .partition import FunctionPartition, all_assignments
from .profiles import CERTIFY_LIMIT, MOVES_PER_POINT, Strategy, EXHAUSTIVE
from .pvariable import StepPVariable, common_refinement, global_law, seed_for

DEFAULT_RESTARTS = 8
ZERO_TOL = 1e-12
HOM_BUDGET = 10**8
UNLABELED_EXHAUSTIVE_MAX = 8

__all__ = [
    "Decoration",
    "DecoratedGraph",
    "QuotientGraph",
    "OverlayResult",
    "block_measure",
    "cut_semidistance",
    "unlabeled_cut_distance",
    "hom_density",
    "overlay",
    "quotient",
    "d1_distance",
    "quotient_set_distance",
    "heuristic",
    "block_sizes",
]


# ---------------------------------------------------------------------------
# block measures


def _block_counts(w: StepPVariable, s, t) -> np.ndarray:
    s = np.asarray(s, dtype=np.int64).reshape(-1)
    t = np.asarray(t, dtype=np.int64).reshape(-1)
    if s.size and (s.min() < 0 or s.max() >= w.n) or t.size and (t.min() < 0 or t.max() >= w.n):
        raise GraphLimError(f"ground subset outside range({w.n})")
    if s.size == 0 or t.size == 0:
        return np.zeros(len(w.laws), dtype=np.int64)
    return np.bincount(w.ids[np.ix_(s, t)].ravel(), minlength=len(w.laws))


def _mixture(w: StepPVariable, counts: np.ndarray, denom: float) -> DiscreteMeasure:
    used = np.flatnonzero(counts)
    if used.size == 0:
        return DiscreteMeasure.zero(1)
    return scale_mix([w.laws[t] for t in used], [counts[t] / denom for t in used])


def block_measure(w: StepPVariable, s: Sequence[int], t: Sequence[int]) -> DiscreteMeasure:
    """``W(S x T; .)``: the sum of the cell laws over ``S x T`` divided by ``n^2``."""
    s = np.unique(np.asarray(s, dtype=np.int64))
    t = np.unique(np.asarray(t, dtype=np.int64))
    return _mixture(w, _block_counts(w, s, t), float(w.n) * float(w.n))


# ---------------------------------------------------------------------------
# cut semidistance


def _common_grid(u: StepPVariable, w: StepPVariable):
    zu, tu = u.grid()
    zw, tw = w.grid()
    z = np.union1d(zu, zw)
    mu = np.zeros((len(u.laws), z.size))
    mu[:, np.searchsorted(z, zu)] = tu
    mw = np.zeros((len(w.laws), z.size))
    mw[:, np.searchsorted(z, zw)] = tw
    gap = float(np.diff(z).min()) if z.size > 1 else math.inf
    return z, mu[u.ids], mw[w.ids], gap


def _pair_lp(mu: np.ndarray, nu: np.ndarray, z: np.ndarray, gap: float) -> float:
    total = max(math.fsum(mu), math.fsum(nu))
    if total <= gap:
        # no two distinct grid points are close enough to exchange mass
        val = total - math.fsum(np.minimum(mu, nu))
    else:
        a, b = mu > 0, nu > 0
        val = _lp_arrays(z[a][:, None], mu[a], z[b][:, None], nu[b])
    return 0.0 if val <= ZERO_TOL else float(val)


def _subset_rows(n: int) -> np.ndarray:
    return ((np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)


def _cut_exhaustive(tu: np.ndarray, tw: np.ndarray, z: np.ndarray, gap: float, stop_at: float = math.inf):
    """Largest block LP distance over all ``(S, T)``; stops once ``stop_at`` is reached."""
    n, _, nz = tu.shape
    rows = _subset_rows(n)
    sizes = rows.sum(axis=1)
    nn = float(n) * float(n)
    best, witness = 0.0, (0, 0)
    chunk = max(1, (1 << 18) // (rows.shape[0] * nz))
    fu = tu.reshape(n, n * nz)
    fw = tw.reshape(n, n * nz)
    for lo in range(0, rows.shape[0], chunk):
        part = rows[lo : lo + chunk]
        bu = np.einsum("sjz,tj->stz", (part @ fu).reshape(-1, n, nz), rows) / nn
        bw = np.einsum("sjz,tj->stz", (part @ fw).reshape(-1, n, nz), rows) / nn
        mass = np.outer(sizes[lo : lo + chunk], sizes) / nn
        closed = mass <= gap
        vals = np.where(closed, mass - np.minimum(bu, bw).sum(axis=2), 0.0)
        vals[vals <= ZERO_TOL] = 0.0
        open_idx = np.argwhere(~closed)
        if open_idx.size:
            pairs = np.concatenate([bu[~closed], bw[~closed]], axis=1)
            uniq, inv = np.unique(pairs, axis=0, return_inverse=True)
            res = np.array([_pair_lp(r[:nz], r[nz:], z, gap) for r in uniq])
            vals[~closed] = res[inv.reshape(-1)]
        idx = np.unravel_index(int(np.argmax(vals)), vals.shape)
        if vals[idx] > best:
            best, witness = float(vals[idx]), (lo + int(idx[0]), int(idx[1]))
            if best >= stop_at:
                break
    return best, witness


def _mask_of(code: int, n: int) -> np.ndarray:
    return ((code >> np.arange(n)) & 1).astype(bool)


def _witness_value(tu, tw, z, gap, s: np.ndarray, t: np.ndarray) -> float:
    n = tu.shape[0]
    nn = float(n) * float(n)
    mu = tu[np.ix_(s, t)].sum(axis=(0, 1)) / nn
    nu = tw[np.ix_(s, t)].sum(axis=(0, 1)) / nn
    return _pair_lp(mu, nu, z, gap)


def _spectral_bound(tu: np.ndarray, tw: np.ndarray) -> float:
    """Certified upper bound on the cut semidistance.

    Each block LP distance is at most half the total variation of the block
    difference, and for every grid point the block difference is bounded
    both by the spectral norm and by the entrywise mean of the difference.
    """
    n = tu.shape[0]
    diff = tu - tw
    total = 0.0
    for zi in range(diff.shape[2]):
        d = diff[:, :, zi]
        if not np.any(d):
            continue
        total += min(float(np.linalg.norm(d, 2)) / n, float(np.abs(d).mean()))
    return min(1.0, 0.5 * total)


def _check_same_ground(u: StepPVariable, w: StepPVariable) -> None:
    if u.n != w.n:
        raise GraphLimError(
            f"ground sizes differ ({u.n} vs {w.n}); use unlabeled_cut_distance for unlabeled comparison"
        )


def _parse_mode(mode) -> tuple[str, int, int]:
    if isinstance(mode, Strategy):
        return ("exhaustive", 0, mode.seed) if mode.kind == "exhaustive" else ("heuristic", mode.samples, mode.seed)
    if isinstance(mode, str):
        name, _, rest = mode.partition(":")
        if name == "exhaustive" and not rest:
            return "exhaustive", 0, 0
        if name == "heuristic":
            return "heuristic", int(rest) if rest else DEFAULT_RESTARTS, 0
    raise GraphLimError(f"unknown mode {mode!r}; expected 'exhaustive' or 'heuristic[:R]'")


def heuristic(restarts: int = DEFAULT_RESTARTS, seed: int = 0) -> Strategy:
    """Mode object for the randomized search variants."""
    return Strategy("random", restarts, seed)


def cut_semidistance(u: StepPVariable, w: StepPVariable, mode="exhaustive"):
    """Largest LP distance between block measures ``u(S x T)`` and ``w(S x T)``.

    ``exhaustive`` returns the exact value.  ``heuristic(restarts, seed)``
    returns an :class:`Interval` whose lower end is attained by an explicit
    ``(S, T)`` found by toggle ascent and whose upper end is a spectral
    bound that holds for every ``(S, T)``.
    """
    _check_same_ground(u, w)
    kind, restarts, seed = _parse_mode(mode)
    z, tu, tw, gap = _common_grid(u, w)
    n = u.n
    if kind == "exhaustive":
        check_budget(4**n, f"4^{n} subset pairs")
        return _cut_exhaustive(tu, tw, z, gap)[0]
    lower = _cut_ascent(tu, tw, z, gap, restarts, seed)
    return Interval(lower, max(lower, _spectral_bound(tu, tw)))


def _cut_ascent(tu, tw, z, gap, restarts: int, seed: int) -> float:
    n = tu.shape[0]
    rng = np.random.default_rng(seed_for(seed, n, 7))
    full = np.ones(n, dtype=bool)
    best = _witness_value(tu, tw, z, gap, full, full)
    for r in range(restarts):
        s = full.copy() if r == 0 else rng.random(n) < 0.5
        t = full.copy() if r == 0 else rng.random(n) < 0.5
        cur = _witness_value(tu, tw, z, gap, s, t) if s.any() and t.any() else 0.0
        moves, improved = 0, True
        while improved and moves < MOVES_PER_POINT * n:
            improved = False
            for i in rng.permutation(2 * n).tolist():
                vec = s if i < n else t
                j = i % n
                vec[j] = not vec[j]
                moves += 1
                val = _witness_value(tu, tw, z, gap, s, t) if s.any() and t.any() else 0.0
                if val > cur + ZERO_TOL:
                    cur, improved = val, True
                    break
                vec[j] = not vec[j]
        best = max(best, cur)
    return best


def _row_stat_bound(u: StepPVariable, w: StepPVariable) -> float:
    """Relabeling-invariant lower bound from sorted row and column means.

    A block LP distance ``eps`` between equal-mass measures on an interval
    of length ``R`` bounds their first-moment gap by ``eps (1 + R)``; taking
    ``T`` as the whole ground set and ``S`` the points where one row mean
    exceeds the other gives the bound below for every relabeling.
    """
    lo = min(float(law.atoms[0, 0]) for law in u.laws + w.laws)
    hi = max(float(law.atoms[-1, 0]) for law in u.laws + w.laws)
    spread = hi - lo
    cu = u.means()[u.ids]
    cw = w.means()[w.ids]
    best = 0.0
    for axis in (1, 0):
        ru = np.sort(cu.mean(axis=axis))
        rw = np.sort(cw.mean(axis=axis))
        delta = float(np.abs(ru - rw).mean())
        best = max(best, 0.5 * delta / (1.0 + spread))
    return best


def unlabeled_cut_distance(u: StepPVariable, w: StepPVariable, mode="exhaustive"):
    """Cut semidistance minimized over relabelings of ``w``.

    Sizes are first matched by blowing both sides up to their least common
    multiple.  ``exhaustive`` (at most 8 points) returns the exact minimum.
    ``heuristic(restarts, seed)`` returns an :class:`Interval`: the upper end
    is the spectral bound of the best relabeling found by random restarts and
    transposition descent, the lower end the largest of several
    relabeling-invariant statistics.
    """
    kind, restarts, seed = _parse_mode(mode)
    u, w = common_refinement(u, w)
    n = u.n
    z, tu, tw, gap = _common_grid(u, w)
    if kind == "exhaustive":
        if n > UNLABELED_EXHAUSTIVE_MAX:
            raise GraphLimError(f"exhaustive unlabeled cut distance limited to n <= {UNLABELED_EXHAUSTIVE_MAX}")
        check_budget(math.factorial(n), f"{n}! relabelings")
        return _unlabeled_exhaustive(w, tu, tw, z, gap)
    lower = max(lp_distance(global_law(u), global_law(w)), _row_stat_bound(u, w))
    if len(w.laws) == 1 or len(u.laws) == 1:
        upper = _spectral_bound(tu, tw)
    else:
        upper = _transposition_descent(tu, tw, restarts, seed)
    return Interval(lower, max(lower, upper))


def _unlabeled_exhaustive(w, tu, tw, z, gap) -> float:
    n = tu.shape[0]
    best = math.inf
    seen: set[bytes] = set()
    killers: list[tuple[np.ndarray, np.ndarray]] = []
    for perm in itertools.permutations(range(n)):
        p = np.array(perm)
        sig = w.ids[np.ix_(p, p)].tobytes()
        if sig in seen:
            continue
        seen.add(sig)
        twp = tw[np.ix_(p, p)]
        if any(_witness_value(tu, twp, z, gap, s, t) >= best for s, t in killers):
            continue
        val, (si, ti) = _cut_exhaustive(tu, twp, z, gap, stop_at=best)
        if val < best:
            best = val
            if best == 0.0:
                return 0.0
        else:
            killers.insert(0, (_mask_of(si, n), _mask_of(ti, n)))
            del killers[32:]
    return best


def _transposition_descent(tu, tw, restarts: int, seed: int) -> float:
    n = tu.shape[0]
    rng = np.random.default_rng(seed_for(seed, n, 11))
    best = math.inf
    for r in range(max(1, restarts)):
        p = np.arange(n) if r == 0 else rng.permutation(n)
        cur = _spectral_bound(tu, tw[np.ix_(p, p)])
        moves, improved = 0, True
        while improved and moves < MOVES_PER_POINT * n and cur > 0:
            improved = False
            pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
            for idx in rng.permutation(len(pairs)).tolist():
                i, j = pairs[idx]
                p[i], p[j] = p[j], p[i]
                moves += 1
                val = _spectral_bound(tu, tw[np.ix_(p, p)])
                if val < cur - ZERO_TOL:
                    cur, improved = val, True
                    break
                p[i], p[j] = p[j], p[i]
                if moves >= MOVES_PER_POINT * n:
                    break
        best = min(best, cur)
    return best


# ---------------------------------------------------------------------------
# decorated graphs


@dataclass(frozen=True)
class Decoration:
    """A bounded function on R attached to an edge.

    Kinds: ``const(c)``, ``identity`` (clamped to ``range`` when given),
    ``poly(coeffs, range)`` (coefficients from the constant term up, only
    evaluated inside ``range``), ``indicator(value, tol)`` and
    ``bounded_lipschitz(table)`` (piecewise linear through sorted
    ``(x, y)`` pairs, constant beyond the ends).
    """

    kind: str
    params: tuple = ()
    range: tuple[float, float] | None = None

    def __post_init__(self):
        if self.kind not in ("const", "identity", "poly", "indicator", "bounded_lipschitz"):
            raise GraphLimError(f"unknown decoration kind {self.kind!r}")
        if self.range is not None:
            lo, hi = (float(x) for x in self.range)
            if not lo <= hi:
                raise GraphLimError("decoration range must satisfy lo <= hi")
            object.__setattr__(self, "range", (lo, hi))
        if self.kind == "poly" and self.range is None:
            raise GraphLimError("poly decorations need a bounded range")
        if self.kind == "bounded_lipschitz":
            table = np.asarray(self.params, dtype=np.float64).reshape(-1, 2)
            if table.shape[0] == 0 or np.any(np.diff(table[:, 0]) < 0):
                raise GraphLimError("lipschitz table must be non-empty and sorted by x")

    @classmethod
    def const(cls, c: float) -> "Decoration":
        return cls("const", (float(c),))

    @classmethod
    def identity(cls, range: tuple[float, float] | None = None) -> "Decoration":
        return cls("identity", (), range)

    @classmethod
    def poly(cls, coeffs: Sequence[float], range: tuple[float, float]) -> "Decoration":
        return cls("poly", tuple(float(c) for c in coeffs), range)

    @classmethod
    def indicator(cls, value: float, tol: float = 0.0) -> "Decoration":
        return cls("indicator", (float(value), float(tol)))

    @classmethod
    def bounded_lipschitz(cls, table: Sequence[Sequence[float]]) -> "Decoration":
        return cls("bounded_lipschitz", tuple((float(x), float(y)) for x, y in table))

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=np.float64)
        if self.kind == "const":
            return np.full(z.shape, self.params[0])
        if self.kind == "identity":
            return z if self.range is None else np.clip(z, *self.range)
        if self.kind == "poly":
            lo, hi = self.range
            if np.any((z < lo) | (z > hi)):
                raise GraphLimError(f"poly decoration evaluated outside its range [{lo}, {hi}]")
            return np.polynomial.polynomial.polyval(z, self.params)
        if self.kind == "indicator":
            value, tol = self.params
            return (np.abs(z - value) <= tol).astype(np.float64)
        table = np.asarray(self.params).reshape(-1, 2)
        return np.interp(z, table[:, 0], table[:, 1])

    def pair(self, law: DiscreteMeasure) -> float:
        """``<law, beta>``: integral of the decoration against a law on R."""
        return math.fsum(self(law.atoms[:, 0]) * law.weights)

    def to_json(self) -> dict:
        if self.kind == "const":
            return {"kind": "const", "c": self.params[0]}
        if self.kind == "identity":
            return {"kind": "identity"} if self.range is None else {"kind": "identity", "range": list(self.range)}
        if self.kind == "poly":
            return {"kind": "poly", "coeffs": list(self.params), "range": list(self.range)}
        if self.kind == "indicator":
            return {"kind": "indicator", "value": self.params[0], "tol": self.params[1]}
        return {"kind": "bounded_lipschitz", "table": [list(r) for r in self.params]}

    @classmethod
    def from_json(cls, obj: dict) -> "Decoration":
        kind = obj.get("kind")
        try:
            if kind == "const":
                return cls.const(obj["c"])
            if kind == "identity":
                return cls.identity(tuple(obj["range"]) if obj.get("range") is not None else None)
            if kind == "poly":
                return cls.poly(obj["coeffs"], tuple(obj["range"]))
            if kind == "indicator":
                return cls.indicator(obj["value"], obj.get("tol", 0.0))
            if kind == "bounded_lipschitz":
                return cls.bounded_lipschitz(obj["table"])
        except (KeyError, TypeError) as exc:
            raise GraphLimError(f"incomplete decoration {obj!r}") from exc
        raise GraphLimError(f"unknown decoration kind {kind!r}")


@dataclass(frozen=True)
class DecoratedGraph:
    """Graph on ``vertices`` points with one decoration per ordered edge.

    ``alpha`` holds optional vertex weights used by :func:`overlay`.
    """

    vertices: int
    edges: tuple[tuple[int, int], ...]
    beta: tuple[Decoration, ...]
    alpha: tuple[float, ...] | None = None

    def __post_init__(self):
        edges = tuple((int(a), int(b)) for a, b in self.edges)
        beta = tuple(self.beta)
        v = int(self.vertices)
        if v < 1:
            raise GraphLimError("a graph needs at least one vertex")
        if len(edges) != len(beta):
            raise GraphLimError("need exactly one decoration per edge")
        for a, b in edges:
            if not (0 <= a < v and 0 <= b < v):
                raise GraphLimError(f"edge ({a}, {b}) has an endpoint outside range({v})")
        object.__setattr__(self, "vertices", v)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "beta", beta)
        if self.alpha is not None:
            alpha = tuple(float(a) for a in self.alpha)
            if len(alpha) != v or any(a < 0 for a in alpha) or abs(math.fsum(alpha) - 1.0) > 1e-9:
                raise GraphLimError("alpha must be a probability vector with one entry per vertex")
            object.__setattr__(self, "alpha", alpha)

    def to_json(self) -> dict:
        out = {
            "vertices": self.vertices,
            "edges": [list(e) for e in self.edges],
            "beta": [b.to_json() for b in self.beta],
        }
        if self.alpha is not None:
            out["alpha"] = list(self.alpha)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "DecoratedGraph":
        try:
            return cls(
                int(obj["vertices"]),
                tuple(tuple(e) for e in obj["edges"]),
                tuple(Decoration.from_json(b) for b in obj["beta"]),
                tuple(obj["alpha"]) if obj.get("alpha") is not None else None,
            )
        except (KeyError, TypeError) as exc:
            raise GraphLimError(f"incomplete graph description: {exc}") from exc


def _edge_matrix(w: StepPVariable, beta: Decoration) -> np.ndarray:
    vals = np.array([beta.pair(law) for law in w.laws])
    return vals[w.ids]


_LETTERS = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"


def hom_density(g: DecoratedGraph, w: StepPVariable) -> float:
    """Average over vertex maps into the ground set of the product of edge pairings."""
    used = sorted({v for e in g.edges for v in e})
    check_budget(w.n ** len(used), f"{w.n}^{len(used)} vertex maps", limit=max(HOM_BUDGET, budget()))
    if not g.edges:
        return 1.0
    if len(used) > len(_LETTERS):
        raise GraphLimError("too many vertices for the contraction engine")
    letter = {v: _LETTERS[i] for i, v in enumerate(used)}
    operands, subs = [], []
    for (a, b), beta in zip(g.edges, g.beta):
        m = _edge_matrix(w, beta)
        if a == b:
            operands.append(np.diag(m).copy())
            subs.append(letter[a])
        else:
            operands.append(m)
            subs.append(letter[a] + letter[b])
    total = np.einsum(",".join(subs) + "->", *operands, optimize=True)
    return float(total) / float(w.n) ** len(used)


# ---------------------------------------------------------------------------
# overlay


@dataclass
class OverlayResult:
    lower: float
    upper: float
    sizes: tuple[int, ...]

    def __iter__(self):
        return iter((self.lower, self.upper))

    def to_json(self) -> dict:
        return {"lower": self.lower, "upper": self.upper, "sizes": list(self.sizes)}


def block_sizes(alpha: Sequence[float], n: int) -> tuple[int, ...]:
    """Round ``alpha * n`` to integers summing to ``n`` (largest remainders)."""
    alpha = np.asarray(alpha, dtype=np.float64)
    raw = alpha * n
    base = np.floor(raw + 1e-9).astype(np.int64)
    short = n - int(base.sum())
    if short < 0:
        raise GraphLimError("alpha is not realizable as block sizes")
    order = np.argsort(-(raw - base), kind="stable")
    base[order[:short]] += 1
    return tuple(int(x) for x in base)


def _sized_assignments(sizes: Sequence[int]) -> np.ndarray:
    n = sum(sizes)
    rows: list[list[int]] = []

    def fill(label: int, free: list[int], cur: list[int]):
        if label == len(sizes) - 1:
            row = list(cur)
            for i in free:
                row[i] = label
            rows.append(row)
            return
        for chosen in itertools.combinations(free, sizes[label]):
            row = list(cur)
            for i in chosen:
                row[i] = label
            rest = [i for i in free if i not in chosen]
            fill(label + 1, rest, row)

    fill(0, list(range(n)), [0] * n)
    return np.array(rows, dtype=np.int64).reshape(-1, n)


def _overlay_values(assigns: np.ndarray, mats: list[np.ndarray], edges, k: int, nn: float) -> np.ndarray:
    ind = [(assigns == c).astype(np.float64) for c in range(k)]
    total = np.zeros(assigns.shape[0])
    for (a, b), m in zip(edges, mats):
        total += np.einsum("pi,ij,pj->p", ind[a], m, ind[b], optimize=True)
    return total / nn


def overlay(w: StepPVariable, g: DecoratedGraph, strategy: Strategy = EXHAUSTIVE) -> OverlayResult:
    """Supremum over size-constrained partitions of the decorated block sum.

    Block sizes are ``alpha * n`` rounded by largest remainders (reported in
    the result).  Exhaustive enumeration gives the exact value; the local
    strategy runs size-preserving swap ascent for the lower end and bounds
    the upper end by summing the largest admissible entries per edge.
    """
    if g.alpha is None:
        raise GraphLimError("overlay needs vertex weights alpha")
    n, k = w.n, g.vertices
    sizes = block_sizes(g.alpha, n)
    nn = float(n) * float(n)
    mats = [_edge_matrix(w, beta) for beta in g.beta]
    if not g.edges:
        return OverlayResult(0.0, 0.0, sizes)
    if strategy.kind == "exhaustive":
        count = math.factorial(n)
        for s in sizes:
            count //= math.factorial(s)
        check_budget(count, "size-constrained partitions")
        vals = _overlay_values(_sized_assignments(sizes), mats, g.edges, k, nn)
        best = float(vals.max())
        return OverlayResult(best, best, sizes)
    rng = np.random.default_rng(seed_for(strategy.seed, n, 13))
    labels = np.repeat(np.arange(k), sizes)
    best = -math.inf
    for _ in range(strategy.samples):
        x = rng.permutation(labels)
        cur = float(_overlay_values(x[None, :], mats, g.edges, k, nn)[0])
        moves, improved = 0, True
        while improved and moves < MOVES_PER_POINT * n:
            improved = False
            for i, j in itertools.combinations(rng.permutation(n).tolist(), 2):
                if x[i] == x[j]:
                    continue
                x[i], x[j] = x[j], x[i]
                moves += 1
                val = float(_overlay_values(x[None, :], mats, g.edges, k, nn)[0])
                if val > cur + ZERO_TOL:
                    cur, improved = val, True
                    break
                x[i], x[j] = x[j], x[i]
                if moves >= MOVES_PER_POINT * n:
                    break
        best = max(best, cur)
    upper = 0.0
    for (a, b), m in zip(g.edges, mats):
        top = np.sort(m.ravel())[::-1]
        upper += math.fsum(top[: sizes[a] * sizes[b]])
    return OverlayResult(best, max(best, upper / nn), sizes)


# ---------------------------------------------------------------------------
# quotients


@dataclass(frozen=True, eq=False)
class QuotientGraph:
    """Vertex weights ``alpha`` and block laws ``beta`` of a partitioned P-variable."""

    alpha: np.ndarray
    beta: tuple[tuple[DiscreteMeasure, ...], ...]
    _key: bytes = field(default=b"", repr=False)

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=np.float64).reshape(-1)
        k = alpha.size
        beta = tuple(tuple(row) for row in self.beta)
        if k == 0 or len(beta) != k or any(len(row) != k for row in beta):
            raise GraphLimError("beta must be a k x k array matching alpha")
        if np.any(alpha < 0) or abs(math.fsum(alpha) - 1.0) > 1e-12:
            raise GraphLimError("alpha must be a probability vector")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        key = alpha.tobytes() + b"".join(m.key() + b";" for row in beta for m in row)
        object.__setattr__(self, "_key", key)

    @property
    def k(self) -> int:
        return self.alpha.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, QuotientGraph):
            return NotImplemented
        return self._key == other._key

    def __hash__(self) -> int:
        return hash(self._key)

    def relabel(self, perm: Sequence[int]) -> "QuotientGraph":
        p = list(perm)
        return QuotientGraph(self.alpha[p], tuple(tuple(self.beta[i][j] for j in p) for i in p))

    def mixture(self) -> DiscreteMeasure:
        """``sum_ij alpha_i alpha_j beta_ij``; equals the global law of the source."""
        ms, cs = [], []
        for i in range(self.k):
            for j in range(self.k):
                ms.append(self.beta[i][j])
                cs.append(self.alpha[i] * self.alpha[j])
        return scale_mix(ms, cs)

    def to_json(self) -> dict:
        return {"alpha": self.alpha.tolist(), "beta": [[m.to_json() for m in row] for row in self.beta]}


def quotient(w: StepPVariable, p: FunctionPartition) -> QuotientGraph:
    """Quotient graph: cell weights ``|P_i|/n`` and averaged block laws."""
    if p.n != w.n:
        raise GraphLimError(f"partition has {p.n} points, P-variable has {w.n}")
    cells = p.cells()
    sizes = [c.size for c in cells]
    beta = []
    for a, sa in enumerate(cells):
        row = []
        for b, sb in enumerate(cells):
            counts = _block_counts(w, sa, sb)
            row.append(_mixture(w, counts, float(sizes[a] * sizes[b]) if sizes[a] and sizes[b] else 1.0))
        beta.append(tuple(row))
    return QuotientGraph(np.array(sizes, dtype=np.float64) / w.n, tuple(beta))


def _scaled(m: DiscreteMeasure, c: float) -> DiscreteMeasure:
    if c == 1.0:
        return m
    return scale_mix([m], [c])


def d1_distance(a: QuotientGraph, b: QuotientGraph) -> float:
    """``||alpha - alpha'||_1`` plus LP distances of the weighted block laws.

    Weighted block laws may have different total masses; the LP condition is
    then applied verbatim, which already charges at least the mass gap.
    """
    if a.k != b.k:
        raise GraphLimError(f"quotient sizes differ: {a.k} vs {b.k}")
    total = [float(np.abs(a.alpha - b.alpha).sum())]
    for i in range(a.k):
        for j in range(a.k):
            ma = _scaled(a.beta[i][j], float(a.alpha[i] * a.alpha[j]))
            mb = _scaled(b.beta[i][j], float(b.alpha[i] * b.alpha[j]))
            if ma != mb:
                total.append(lp_general(ma, mb))
    return math.fsum(total)


def _unlabeled_d1(k: int):
    perms = [list(p) for p in itertools.permutations(range(k))]

    def dist(a: QuotientGraph, b: QuotientGraph) -> float:
        best = math.inf
        for p in perms:
            best = min(best, d1_distance(a, b.relabel(p)))
            if best == 0.0:
                break
        return best

    return dist


def quotient_set(w: StepPVariable, k: int, assigns: np.ndarray) -> list[QuotientGraph]:
    return list(dict.fromkeys(quotient(w, FunctionPartition(a, k)) for a in assigns))


def quotient_set_distance(
    u: StepPVariable,
    w: StepPVariable,
    k: int,
    strategy: Strategy = EXHAUSTIVE,
    label_invariant: bool = False,
) -> Interval:
    """Hausdorff distance under :func:`d1_distance` between quotient sets.

    Exhaustive strategy enumerates all ``k^n`` labeled partitions of each
    side (after a common blow-up) and is exact.  Sampled strategies draw
    random partitions.  When each side has at most ``CERTIFY_LIMIT``
    partitions, directed distances of the sampled quotients are certified
    lower bounds and the exact value is the upper end; otherwise the
    interval is heuristic.  With
    ``label_invariant`` the distance between two quotients is minimized over
    relabelings of the cells.
    """
    if k < 1:
        raise GraphLimError("k must be positive")
    if label_invariant and k > 6:
        raise GraphLimError("label-invariant comparison supports k <= 6")
    u, w = common_refinement(u, w)
    n = u.n
    dist = _unlabeled_d1(k) if label_invariant else d1_distance
    if strategy.kind == "exhaustive":
        check_budget(k**n, f"{k}^{n} labeled partitions")
        assigns = all_assignments(n, k)
        qu, qw = quotient_set(u, k, assigns), quotient_set(w, k, assigns)
        d = hausdorff(qu, qw, dist, key=None if label_invariant else (lambda q: q))
        return Interval(d, d)
    full = k**n <= min(CERTIFY_LIMIT, budget())
    rng = np.random.default_rng(seed_for(strategy.seed, n, k, 17))
    if full:
        assigns = all_assignments(n, k)
        refs = {"u": quotient_set(u, k, assigns), "w": quotient_set(w, k, assigns)}
    else:
        refs = {
            "u": quotient_set(u, k, rng.integers(0, k, size=(strategy.samples, n))),
            "w": quotient_set(w, k, rng.integers(0, k, size=(strategy.samples, n))),
        }
    lower = upper = 0.0
    if full:
        # both sets are enumerated, so the exact value is a certified upper end
        upper = hausdorff(refs["u"], refs["w"], dist, key=None if label_invariant else (lambda q: q))
    for x, other in ((u, "w"), (w, "u")):
        cands = quotient_set(x, k, rng.integers(0, k, size=(strategy.samples, n)))
        for q in cands:
            d = min(dist(q, r) for r in refs[other])
            if full:
                lower = max(lower, d)
            else:
                upper = max(upper, d)
    return Interval(lower, max(lower, upper))
