"""Step P-variables on a finite ground set with uniform weights.

A :class:`StepPVariable` stores one probability law on R per ordered pair of
ground points.  Read as a kernel it is a probability graphon; read through
the quantile function of each cell it is a P-variable on
``[n] x [n] x [0, 1]``.  Cells sharing a law share one stored measure, so
relabeling and block blow-ups only move integer indices around.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import GraphLimError
from .measures import DiscreteMeasure, scale_mix
from .partition import FunctionPartition

PROB_TOL = 1e-12

__all__ = [
    "StepPVariable",
    "constant_cell",
    "RealKernel",
    "from_matrix",
    "quantile_from_kernel",
    "global_law",
    "contraction",
    "sample_matrix",
    "tail_mass",
    "relabel",
    "stepping",
    "blowup",
    "common_refinement",
    "seed_for",
]


class StepPVariable:
    """An ``n x n`` grid of probability laws on R.

    ``ids[i, j]`` indexes into ``laws``; laws are pairwise distinct and every
    law is used by at least one cell.
    """

    __slots__ = ("n", "ids", "laws", "_grid", "_quant")

    def __init__(self, ids: np.ndarray, laws: Sequence[DiscreteMeasure], *, check: bool = True):
        ids = np.asarray(ids, dtype=np.int64)
        if ids.ndim != 2 or ids.shape[0] != ids.shape[1] or ids.shape[0] == 0:
            raise GraphLimError(f"cell grid must be a non-empty square, got shape {ids.shape}")
        laws = list(laws)
        if check:
            for law in laws:
                if law.dim != 1:
                    raise GraphLimError("cell laws must live on R")
                if len(law) == 0 or abs(law.mass - 1.0) > PROB_TOL:
                    raise GraphLimError(f"cell law is not a probability measure (mass {law.mass!r})")
            if ids.min() < 0 or ids.max() >= len(laws):
                raise GraphLimError("cell index out of range")
        ids, laws = _compact(ids, laws)
        ids.setflags(write=False)
        self.n = ids.shape[0]
        self.ids = ids
        self.laws = tuple(laws)
        self._grid = None
        self._quant = None

    # -- cell access ---------------------------------------------------------

    def cell(self, i: int, j: int) -> DiscreteMeasure:
        return self.laws[self.ids[i, j]]

    @property
    def cells(self) -> list[list[DiscreteMeasure]]:
        return [[self.laws[t] for t in row] for row in self.ids.tolist()]

    def is_deterministic(self) -> bool:
        """True when every cell is a point mass."""
        return all(len(law) == 1 for law in self.laws)

    def is_symmetric(self) -> bool:
        """Cell laws satisfy ``cell(i, j) == cell(j, i)``."""
        return bool(np.array_equal(self.ids, self.ids.T))

    def __eq__(self, other) -> bool:
        if not isinstance(other, StepPVariable):
            return NotImplemented
        if self.n != other.n or len(self.laws) != len(other.laws):
            return False
        index = {law: t for t, law in enumerate(other.laws)}
        try:
            remap = np.array([index[law] for law in self.laws], dtype=np.int64)
        except KeyError:
            return False
        return bool(np.array_equal(remap[self.ids], other.ids))

    __hash__ = None

    def __repr__(self) -> str:
        return f"StepPVariable(n={self.n}, distinct_laws={len(self.laws)})"

    # -- quantile view -------------------------------------------------------

    def quantile_levels(self, i: int, j: int) -> tuple[np.ndarray, np.ndarray]:
        """Levels (ascending) and their widths in ``[0, 1]`` for cell ``(i, j)``."""
        law = self.cell(i, j)
        return law.atoms[:, 0], law.weights

    def quantile(self, i: int, j: int, y) -> np.ndarray:
        """Generalized inverse distribution function of cell ``(i, j)`` at ``y``."""
        levels, cum = self._quantiles()[self.ids[i, j]]
        pos = np.searchsorted(cum, np.asarray(y, dtype=np.float64), side="left")
        return levels[np.minimum(pos, levels.size - 1)]

    def _quantiles(self):
        if self._quant is None:
            self._quant = [(law.atoms[:, 0], np.cumsum(law.weights)) for law in self.laws]
        return self._quant

    # -- dense mass representation -------------------------------------------

    def grid(self) -> tuple[np.ndarray, np.ndarray]:
        """Sorted union ``Z`` of cell supports and the ``(laws, |Z|)`` mass table."""
        if self._grid is None:
            z = np.unique(np.concatenate([law.atoms[:, 0] for law in self.laws]))
            table = np.zeros((len(self.laws), z.size))
            for t, law in enumerate(self.laws):
                table[t, np.searchsorted(z, law.atoms[:, 0])] = law.weights
            z.setflags(write=False)
            table.setflags(write=False)
            self._grid = (z, table)
        return self._grid

    def means(self) -> np.ndarray:
        return np.array([math.fsum(law.atoms[:, 0] * law.weights) for law in self.laws])

    # -- serialization -------------------------------------------------------

    def to_json(self) -> dict:
        return {"n": self.n, "cells": [[law.to_json() for law in row] for row in self.cells]}

    @classmethod
    def from_json(cls, obj: dict) -> "StepPVariable":
        try:
            cells = obj["cells"]
        except (KeyError, TypeError) as exc:
            raise GraphLimError("kernel JSON needs a 'cells' field") from exc
        grid = [[DiscreteMeasure.from_json(c) for c in row] for row in cells]
        w = quantile_from_kernel(grid)
        if "n" in obj and int(obj["n"]) != w.n:
            raise GraphLimError(f"declared n={obj['n']} but cells are {w.n}x{w.n}")
        return w


def _compact(ids: np.ndarray, laws: list[DiscreteMeasure]):
    # merge equal laws and drop unused ones, keeping first-use order
    canon: dict[DiscreteMeasure, int] = {}
    remap = np.empty(len(laws), dtype=np.int64)
    kept: list[DiscreteMeasure] = []
    for t, law in enumerate(laws):
        if law not in canon:
            canon[law] = len(kept)
            kept.append(law)
        remap[t] = canon[law]
    ids = remap[ids]
    used = np.unique(ids)
    if used.size == len(kept):
        return ids.copy(), kept
    order = np.full(len(kept), -1, dtype=np.int64)
    order[used] = np.arange(used.size)
    return order[ids], [kept[t] for t in used.tolist()]


@dataclass(frozen=True, eq=False)
class RealKernel:
    """A block-constant real kernel on the uniform grid ``[n] x [n]``."""

    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != v.shape[1] or v.shape[0] == 0:
            raise GraphLimError(f"kernel must be a non-empty square matrix, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise GraphLimError("kernel entries must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, RealKernel):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


# ---------------------------------------------------------------------------
# constructions


def from_matrix(a) -> StepPVariable:
    """Step representation of a real matrix: cell ``(i, j)`` is ``delta_{a[i, j]}``."""
    a = np.asarray(a, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] == 0:
        raise GraphLimError(f"expected a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise GraphLimError("matrix entries must be finite")
    values, inverse = np.unique(a, return_inverse=True)
    laws = [DiscreteMeasure._trusted(np.array([[v]]), np.array([1.0])) for v in values]
    return StepPVariable(inverse.reshape(a.shape), laws, check=False)


def quantile_from_kernel(kernel: Sequence[Sequence[DiscreteMeasure]]) -> StepPVariable:
    """Step P-variable whose cells are the given probability laws on R."""
    rows = [list(r) for r in kernel]
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise GraphLimError("kernel must be a non-empty square array of measures")
    index: dict[DiscreteMeasure, int] = {}
    laws: list[DiscreteMeasure] = []
    ids = np.empty((n, n), dtype=np.int64)
    for i, row in enumerate(rows):
        for j, law in enumerate(row):
            if not isinstance(law, DiscreteMeasure):
                raise GraphLimError(f"cell ({i}, {j}) is not a DiscreteMeasure")
            t = index.get(law)
            if t is None:
                t = index[law] = len(laws)
                laws.append(law)
            ids[i, j] = t
    return StepPVariable(ids, laws)


def constant_cell(law: DiscreteMeasure, n: int = 1) -> StepPVariable:
    """The P-variable with the same law in every cell."""
    return StepPVariable(np.zeros((n, n), dtype=np.int64), [law])


def global_law(w: StepPVariable) -> DiscreteMeasure:
    """Average of all cell laws: the law of the P-variable as a random variable."""
    counts = np.bincount(w.ids.ravel(), minlength=len(w.laws))
    nn = float(w.n) * float(w.n)
    return scale_mix(w.laws, [c / nn for c in counts.tolist()])


def contraction(w: StepPVariable) -> RealKernel:
    """Cell means."""
    return RealKernel(w.means()[w.ids])


def tail_mass(w: StepPVariable, threshold: float) -> float:
    """Mass the global law puts on ``{|z| > threshold}``."""
    if not threshold > 0:
        raise GraphLimError("threshold must be positive")
    law = global_law(w)
    return math.fsum(law.weights[np.abs(law.atoms[:, 0]) > threshold])


def _check_perm(p, n: int) -> np.ndarray:
    p = np.asarray(p, dtype=np.int64).reshape(-1)
    if p.size != n or not np.array_equal(np.sort(p), np.arange(n)):
        raise GraphLimError(f"not a permutation of range({n})")
    return p


def relabel(w: StepPVariable, p) -> StepPVariable:
    """``cell'(i, j) = cell(p[i], p[j])``."""
    p = _check_perm(p, w.n)
    return StepPVariable(w.ids[np.ix_(p, p)], w.laws, check=False)


def blowup(w: StepPVariable, factor: int) -> StepPVariable:
    """Replace each ground point by ``factor`` copies (a weakly isomorphic refinement)."""
    factor = int(factor)
    if factor < 1:
        raise GraphLimError("blow-up factor must be positive")
    if factor == 1:
        return w
    idx = np.arange(w.n * factor) // factor
    return StepPVariable(w.ids[np.ix_(idx, idx)], w.laws, check=False)


def common_refinement(u: StepPVariable, w: StepPVariable, limit: int = 4096) -> tuple[StepPVariable, StepPVariable]:
    """Blow both sides up to the least common multiple of their sizes."""
    m = math.lcm(u.n, w.n)
    if m > limit:
        raise GraphLimError(f"common refinement size {m} exceeds limit {limit}")
    return blowup(u, m // u.n), blowup(w, m // w.n)


def stepping(w: StepPVariable, partition: FunctionPartition) -> StepPVariable:
    """Average the cell laws over the blocks of ``partition``.

    Blocks whose cells already share one law keep it unchanged, which makes
    the operator exactly idempotent.
    """
    if partition.n != w.n:
        raise GraphLimError(f"partition is over {partition.n} points, P-variable has {w.n}")
    cells = [c for c in partition.cells()]
    laws = list(w.laws)
    ids = np.empty_like(w.ids)
    for a, sa in enumerate(cells):
        if sa.size == 0:
            continue
        for b, sb in enumerate(cells):
            if sb.size == 0:
                continue
            block = w.ids[np.ix_(sa, sb)]
            first = block.flat[0]
            if np.all(block == first):
                ids[np.ix_(sa, sb)] = first
                continue
            counts = np.bincount(block.ravel(), minlength=len(w.laws))
            used = np.flatnonzero(counts)
            total = float(block.size)
            mix = scale_mix([w.laws[t] for t in used], [counts[t] / total for t in used])
            ids[np.ix_(sa, sb)] = len(laws)
            laws.append(mix)
    return StepPVariable(ids, laws, check=False)


# ---------------------------------------------------------------------------
# sampling


def seed_for(seed: int, *key: int) -> np.random.SeedSequence:
    """Independent stream derived from ``seed`` and an integer key path."""
    return np.random.SeedSequence(int(seed) & (2**64 - 1), spawn_key=tuple(int(k) for k in key))


def sample_matrix(w: StepPVariable, m: int, seed, symmetrize: bool = False) -> np.ndarray:
    """Random ``m x m`` matrix ``M_ij = W(X_i, X_j, Y_ij)`` with zero diagonal.

    ``X`` are i.i.d. uniform ground points and ``Y`` i.i.d. uniform on
    ``[0, 1)``; with ``symmetrize`` the lower triangle copies the upper one.
    ``seed`` may be an int or a :class:`numpy.random.SeedSequence`.
    """
    m = int(m)
    if m < 1:
        raise GraphLimError("sample size must be positive")
    if not isinstance(seed, np.random.SeedSequence):
        seed = int(seed) & (2**64 - 1)
    rng = np.random.default_rng(seed)
    x = rng.integers(0, w.n, size=m)
    y = rng.random((m, m))
    cell = w.ids[np.ix_(x, x)]
    out = np.empty((m, m))
    quant = w._quantiles()
    for t in np.unique(cell).tolist():
        mask = cell == t
        levels, cum = quant[t]
        pos = np.searchsorted(cum, y[mask], side="left")
        out[mask] = levels[np.minimum(pos, levels.size - 1)]
    np.fill_diagonal(out, 0.0)
    if symmetrize:
        upper = np.triu(out, 1)
        out = upper + upper.T
    return out
