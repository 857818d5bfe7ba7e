"""Labeled partitions of a finite ground set."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import GraphLimError


@dataclass(frozen=True, eq=False)
class FunctionPartition:
    """Assignment of ground points ``0..n-1`` to ``k`` labeled cells.

    Labels are 0-based.  Cells may be empty; the indicator functions of the
    cells always sum to one pointwise.
    """

    assign: np.ndarray
    k: int
    n: int = field(init=False)

    def __post_init__(self):
        a = np.asarray(self.assign)
        if a.ndim != 1:
            raise GraphLimError("assignment must be one-dimensional")
        if a.size and not np.issubdtype(a.dtype, np.integer):
            if not np.all(a == np.round(a)):
                raise GraphLimError("assignment labels must be integers")
        a = a.astype(np.int64)
        k = int(self.k)
        if k < 1:
            raise GraphLimError("a partition needs at least one cell")
        if a.size and (a.min() < 0 or a.max() >= k):
            raise GraphLimError(f"labels must lie in [0, {k})")
        a.setflags(write=False)
        object.__setattr__(self, "assign", a)
        object.__setattr__(self, "k", k)
        object.__setattr__(self, "n", int(a.size))

    @classmethod
    def from_labels(cls, labels, k: int | None = None) -> "FunctionPartition":
        labels = np.asarray(labels, dtype=np.int64)
        if k is None:
            k = int(labels.max()) + 1 if labels.size else 1
        return cls(labels, k)

    @classmethod
    def one_class(cls, n: int) -> "FunctionPartition":
        return cls(np.zeros(n, dtype=np.int64), 1)

    @classmethod
    def singletons(cls, n: int) -> "FunctionPartition":
        return cls(np.arange(n), n)

    def __eq__(self, other) -> bool:
        if not isinstance(other, FunctionPartition):
            return NotImplemented
        return self.k == other.k and np.array_equal(self.assign, other.assign)

    def __hash__(self) -> int:
        return hash((self.k, self.assign.tobytes()))

    def __repr__(self) -> str:
        return f"FunctionPartition(k={self.k}, assign={self.assign.tolist()})"

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assign, minlength=self.k)

    def cells(self) -> list[np.ndarray]:
        return [np.flatnonzero(self.assign == c) for c in range(self.k)]

    def indicators(self) -> np.ndarray:
        """The ``k x n`` matrix of cell indicator functions."""
        out = np.zeros((self.k, self.n))
        out[self.assign, np.arange(self.n)] = 1.0
        return out

    def to_json(self) -> dict:
        return {"k": self.k, "assign": self.assign.tolist()}

    @classmethod
    def from_json(cls, obj: dict) -> "FunctionPartition":
        return cls(np.asarray(obj["assign"], dtype=np.int64), int(obj["k"]))


def all_assignments(n: int, k: int) -> np.ndarray:
    """Every map ``[n] -> [k]`` as rows of a ``(k**n, n)`` array, lexicographic."""
    if n == 0:
        return np.zeros((1, 0), dtype=np.int64)
    idx = np.arange(k**n, dtype=np.int64)
    powers = k ** np.arange(n - 1, -1, -1, dtype=np.int64)
    return (idx[:, None] // powers[None, :]) % k
