"""Real-valued kernels: cut norm, cut distance, averaged quotients, L^p norms."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .errors import GraphLimError, budget, check_budget
from .graphon_ops import _sized_assignments
from .interval import Interval
from .partition import FunctionPartition
from .profiles import CERTIFY_LIMIT, EXHAUSTIVE, MOVES_PER_POINT, Strategy
from .pvariable import RealKernel, StepPVariable, contraction, from_matrix, global_law, seed_for

EXHAUSTIVE_ROWS_MAX = 22
BRUTEFORCE_MAX = 12
PERMUTATION_MAX = 8
DEFAULT_RESTARTS = 8
ZERO_TOL = 1e-12
BALANCE_TOL = 1e-9

__all__ = [
    "FractionalPartition",
    "cut_norm",
    "real_cut_distance",
    "averaged_quotient",
    "balanced_partitions",
    "avq_set",
    "avq_set_distance",
    "lp_norm",
    "normalized",
    "kernel_blowup",
]


@dataclass(frozen=True, eq=False)
class FractionalPartition:
    """``k x n`` weights in ``[0, 1]`` whose columns sum to one."""

    weights: np.ndarray

    def __post_init__(self):
        f = np.array(self.weights, dtype=np.float64)
        if f.ndim != 2 or f.shape[0] == 0 or f.shape[1] == 0:
            raise GraphLimError("fractional partition must be a non-empty k x n array")
        if np.any(f < 0) or np.any(f > 1):
            raise GraphLimError("fractional partition entries must lie in [0, 1]")
        if np.any(np.abs(f.sum(axis=0) - 1.0) > 1e-12):
            raise GraphLimError("fractional partition columns must sum to 1")
        f.setflags(write=False)
        object.__setattr__(self, "weights", f)

    @property
    def k(self) -> int:
        return self.weights.shape[0]

    @property
    def n(self) -> int:
        return self.weights.shape[1]

    @property
    def balanced(self) -> bool:
        return bool(np.all(np.abs(self.weights.sum(axis=1) - self.n / self.k) <= BALANCE_TOL))

    @classmethod
    def from_partition(cls, p: FunctionPartition) -> "FractionalPartition":
        return cls(p.indicators())


def _as_matrix(a) -> np.ndarray:
    if isinstance(a, RealKernel):
        return np.asarray(a.values)
    if isinstance(a, StepPVariable):
        return np.asarray(contraction(a).values)
    m = np.asarray(a, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise GraphLimError("expected a square kernel")
    return m


# ---------------------------------------------------------------------------
# cut norm


def _subset_rows(n: int, lo: int, hi: int) -> np.ndarray:
    return ((np.arange(lo, hi)[:, None] >> np.arange(n)[None, :]) & 1).astype(np.float64)


def _cut_norm_rows(m: np.ndarray, stop_at: float = math.inf) -> tuple[float, int, np.ndarray]:
    """Exact cut norm by enumerating row sets; the best column set follows from signs."""
    n = m.shape[0]
    best, best_s, best_t = 0.0, 0, np.zeros(n, dtype=bool)
    step = max(1, (1 << 20) // max(n, 1))
    for lo in range(0, 2**n, step):
        rows = _subset_rows(n, lo, min(2**n, lo + step))
        cols = rows @ m
        pos = np.where(cols > 0, cols, 0.0).sum(axis=1)
        neg = -np.where(cols < 0, cols, 0.0).sum(axis=1)
        val = np.maximum(pos, neg)
        i = int(np.argmax(val))
        if val[i] > best:
            best, best_s = float(val[i]), lo + i
            best_t = cols[i] > 0 if pos[i] >= neg[i] else cols[i] < 0
            if best / (n * n) >= stop_at:
                break
    return best / (n * n), best_s, best_t


def _cut_norm_brute(m: np.ndarray) -> float:
    n = m.shape[0]
    rows = _subset_rows(n, 0, 2**n)
    best = 0.0
    step = max(1, (1 << 22) // (2**n))
    for lo in range(0, 2**n, step):
        vals = np.abs(rows[lo : lo + step] @ m @ rows.T)
        best = max(best, float(vals.max()))
    return best / (n * n)


def cut_norm(a, mode: str = "exhaustive_rows") -> float:
    """``max_{S,T} |sum_{S x T} a| / n^2``.

    ``exhaustive_rows`` enumerates row sets only (exact; ``n <= 22``),
    ``bruteforce`` enumerates both sides (``n <= 12``).
    """
    m = _as_matrix(a)
    n = m.shape[0]
    if mode == "exhaustive_rows":
        if n > EXHAUSTIVE_ROWS_MAX:
            raise GraphLimError(f"exhaustive_rows supports n <= {EXHAUSTIVE_ROWS_MAX}, got {n}")
        check_budget(2**n, f"2^{n} row sets", limit=max(budget(), 2**EXHAUSTIVE_ROWS_MAX))
        return _cut_norm_rows(m)[0]
    if mode == "bruteforce":
        if n > BRUTEFORCE_MAX:
            raise GraphLimError(f"bruteforce supports n <= {BRUTEFORCE_MAX}, got {n}")
        return _cut_norm_brute(m)
    raise GraphLimError(f"unknown cut norm mode {mode!r}")


def _spectral(m: np.ndarray) -> float:
    n = m.shape[0]
    return min(float(np.linalg.norm(m, 2)) / n, float(np.abs(m).mean()))


def kernel_blowup(m: np.ndarray, factor: int) -> np.ndarray:
    """Each ground point replaced by ``factor`` copies."""
    return np.repeat(np.repeat(m, factor, axis=0), factor, axis=1)


def _match_sizes(a: np.ndarray, b: np.ndarray, limit: int = 4096) -> tuple[np.ndarray, np.ndarray]:
    m = math.lcm(a.shape[0], b.shape[0])
    if m > limit:
        raise GraphLimError(f"common refinement size {m} exceeds limit {limit}")
    return kernel_blowup(a, m // a.shape[0]), kernel_blowup(b, m // b.shape[0])


def _row_bound(a: np.ndarray, b: np.ndarray) -> float:
    best = abs(float(a.mean()) - float(b.mean()))
    for axis in (1, 0):
        ra, rb = np.sort(a.mean(axis=axis)), np.sort(b.mean(axis=axis))
        best = max(best, 0.5 * float(np.abs(ra - rb).mean()))
    return best


def real_cut_distance(a, b, mode="exhaustive"):
    """Cut norm of ``a - b`` minimized over relabelings of ``b``.

    Arguments may be :class:`RealKernel`, square arrays, or step
    P-variables (compared through their contractions).  ``exhaustive``
    is exact: at most 8 points after blow-up, or up to the ``exhaustive_rows``
    limit when one side is invariant under relabeling.  ``heuristic`` modes return an
    :class:`Interval` bracketing the minimum with relabeling-invariant
    statistics below and the best relabeling's certified bound above.
    """
    from .graphon_ops import _parse_mode

    kind, restarts, seed = _parse_mode(mode)
    a, b = _match_sizes(_as_matrix(a), _as_matrix(b))
    n = a.shape[0]
    if kind == "exhaustive":
        if _relabel_invariant(a) or _relabel_invariant(b):
            return cut_norm(a - b)
        if n > PERMUTATION_MAX:
            raise GraphLimError(f"exhaustive real cut distance limited to n <= {PERMUTATION_MAX}")
        return _real_exhaustive(a, b)
    lower = _row_bound(a, b)
    if np.all(b == b.flat[0]) or np.all(a == a.flat[0]):
        upper = _spectral(a - b)
    else:
        upper = _descend(a, b, restarts, seed)
    return Interval(lower, max(lower, upper))


def _relabel_invariant(m: np.ndarray) -> bool:
    diag = np.diag(m)
    off = m[~np.eye(m.shape[0], dtype=bool)]
    return bool(np.all(diag == diag[0]) and (off.size == 0 or np.all(off == off[0])))


def _real_exhaustive(a: np.ndarray, b: np.ndarray) -> float:
    n = a.shape[0]
    nn = float(n * n)
    best = math.inf
    seen: set[bytes] = set()
    killers: list[tuple[np.ndarray, np.ndarray]] = []
    for perm in itertools.permutations(range(n)):
        p = np.array(perm)
        bp = b[np.ix_(p, p)]
        sig = bp.tobytes()
        if sig in seen:
            continue
        seen.add(sig)
        d = a - bp
        if any(abs(float(d[np.ix_(s, t)].sum())) / nn >= best for s, t in killers):
            continue
        val, s_code, t_mask = _cut_norm_rows(d, stop_at=best)
        if val < best:
            best = val
            if best <= ZERO_TOL:
                return 0.0
        else:
            killers.insert(0, (((s_code >> np.arange(n)) & 1).astype(bool), t_mask))
            del killers[32:]
    return best


def _descend(a: np.ndarray, b: np.ndarray, restarts: int, seed: int) -> float:
    n = a.shape[0]
    rng = np.random.default_rng(seed_for(seed, n, 19))
    best = math.inf
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    for r in range(max(1, restarts)):
        p = np.arange(n) if r == 0 else rng.permutation(n)
        cur = _spectral(a - b[np.ix_(p, p)])
        moves, improved = 0, True
        while improved and moves < MOVES_PER_POINT * n:
            improved = False
            for idx in rng.permutation(len(pairs)).tolist():
                i, j = pairs[idx]
                p[i], p[j] = p[j], p[i]
                moves += 1
                val = _spectral(a - b[np.ix_(p, p)])
                if val < cur - ZERO_TOL:
                    cur, improved = val, True
                    break
                p[i], p[j] = p[j], p[i]
                if moves >= MOVES_PER_POINT * n:
                    break
        best = min(best, cur)
    return best


# ---------------------------------------------------------------------------
# averaged quotients


def averaged_quotient(w, f: FractionalPartition) -> np.ndarray:
    """``M_ij = (1/n^2) sum_{a,b} f_i(a) f_j(b) c(a, b)`` for the contraction ``c``."""
    c = _as_matrix(w)
    if f.n != c.shape[0]:
        raise GraphLimError(f"partition has {f.n} points, kernel has {c.shape[0]}")
    n = c.shape[0]
    return (f.weights @ c @ f.weights.T) / (float(n) * float(n))


def balanced_partitions(n: int, k: int) -> np.ndarray:
    """All balanced near-hard fractional partitions as a ``(P, k, n)`` array.

    Each cell receives ``n // k`` whole points; the ``n mod k`` remaining
    points are split evenly across all cells.
    """
    q, r = divmod(n, k)
    sizes = [q] * k + [r]
    count = math.factorial(n)
    for s in sizes:
        count //= math.factorial(s)
    check_budget(count, "balanced partitions")
    assigns = _sized_assignments(sizes)
    out = np.zeros((assigns.shape[0], k, n))
    for c in range(k):
        out[:, c, :] = assigns == c
    out += (assigns == k)[:, None, :] / k
    return out


def _random_balanced(n: int, k: int, rng) -> np.ndarray:
    q, r = divmod(n, k)
    labels = rng.permutation(np.repeat(np.arange(k + 1), [q] * k + [r]))
    f = np.zeros((k, n))
    for c in range(k):
        f[c] = labels == c
    f += (labels == k)[None, :] / k
    return f


def _matrices(c: np.ndarray, fs: np.ndarray) -> np.ndarray:
    n = c.shape[0]
    return np.einsum("pia,ab,pjb->pij", fs, c, fs, optimize=True) / (float(n) * float(n))


def avq_set(w, k: int, strategy: Strategy = EXHAUSTIVE) -> np.ndarray:
    """Distinct averaged quotients over balanced partitions, shape ``(P, k, k)``."""
    c = _as_matrix(w)
    n = c.shape[0]
    if strategy.kind == "exhaustive":
        fs = balanced_partitions(n, k)
    else:
        rng = np.random.default_rng(seed_for(strategy.seed, n, k, 23))
        fs = np.stack([_random_balanced(n, k, rng) for _ in range(strategy.samples)])
    mats = _matrices(c, fs)
    return np.unique(mats.reshape(mats.shape[0], -1), axis=0).reshape(-1, k, k)


def _l1_matrix(xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    return np.abs(xs.reshape(len(xs), 1, -1) - ys.reshape(1, len(ys), -1)).sum(axis=2)


def _frac_climb(c: np.ndarray, f: np.ndarray, ref: np.ndarray, rng, max_moves: int) -> np.ndarray:
    """Raise the distance from ``f``'s quotient to ``ref`` by balanced mass transfers."""
    k, n = f.shape
    step = 1.0 / (4 * n)

    def score(g):
        return float(_l1_matrix(_matrices(c, g[None]), ref).min())

    cur = score(f)
    moves, improved = 0, True
    while improved and moves < max_moves:
        improved = False
        for _ in range(4 * n):
            i, j = rng.choice(k, size=2, replace=False) if k > 1 else (0, 0)
            a, b = rng.integers(0, n, size=2)
            if k == 1 or a == b or f[i, a] < step or f[j, b] < step:
                continue
            g = f.copy()
            g[i, a] -= step
            g[j, a] += step
            g[j, b] -= step
            g[i, b] += step
            moves += 1
            val = score(g)
            if val > cur + ZERO_TOL:
                f, cur, improved = g, val, True
                break
            if moves >= max_moves:
                break
    return f


def avq_set_distance(u, w, k: int, strategy: Strategy = EXHAUSTIVE) -> Interval:
    """Hausdorff distance under entrywise L1 between averaged-quotient families.

    The families are generated by balanced near-hard partitions
    (:func:`balanced_partitions`).  Exhaustive strategy compares the full
    families; ``random`` samples them; ``local`` additionally perturbs the
    sampled partitions by balanced fractional transfers of size ``1/(4n)``
    to push directed distances up.
    """
    if k < 1:
        raise GraphLimError("k must be positive")
    cu, cw = _match_sizes(_as_matrix(u), _as_matrix(w))
    if strategy.kind == "exhaustive":
        au, aw = avq_set(cu, k), avq_set(cw, k)
        d = _l1_matrix(au, aw)
        val = max(float(d.min(axis=1).max()), float(d.min(axis=0).max()))
        return Interval(val, val)
    n = cu.shape[0]
    try:
        refs = (avq_set(cu, k), avq_set(cw, k))
        full = refs[0].shape[0] <= CERTIFY_LIMIT and refs[1].shape[0] <= CERTIFY_LIMIT
    except GraphLimError:
        full = False
    if not full:
        refs = (avq_set(cu, k, strategy), avq_set(cw, k, Strategy(strategy.kind, strategy.samples, strategy.seed + 1)))
    rng = np.random.default_rng(seed_for(strategy.seed, n, k, 29))
    lower = upper = 0.0
    for c, ref in ((cu, refs[1]), (cw, refs[0])):
        fs = [_random_balanced(n, k, rng) for _ in range(strategy.samples)]
        if strategy.kind == "local":
            fs = [_frac_climb(c, f, ref, rng, MOVES_PER_POINT * n) for f in fs]
        d = float(_l1_matrix(_matrices(c, np.stack(fs)), ref).min(axis=1).max())
        if full:
            lower = max(lower, d)
        upper = max(upper, d)
    return Interval(lower, max(lower, upper))


# ---------------------------------------------------------------------------
# norms and normalization


def lp_norm(w: StepPVariable, p: float) -> float:
    """``(E|W|^p)^(1/p)``; ``p = inf`` gives the largest absolute atom."""
    p = float(p)
    if not p >= 1:
        raise GraphLimError("p must be at least 1")
    if math.isinf(p):
        return max(float(np.abs(law.atoms[:, 0]).max()) for law in w.laws)
    law = global_law(w)
    return math.fsum(law.weights * np.abs(law.atoms[:, 0]) ** p) ** (1.0 / p)


def normalized(adjacency) -> StepPVariable:
    """Step P-variable of ``A / mean|A|`` (sparse-graph rescaling)."""
    a = np.asarray(adjacency, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise GraphLimError("adjacency must be square")
    scale = float(np.abs(a).mean())
    if scale == 0.0:
        raise GraphLimError("cannot normalize an empty graph")
    return from_matrix(a / scale)
