"""Two-sided estimates."""
from __future__ import annotations

from typing import NamedTuple


class Interval(NamedTuple):
    """A value known to lie in ``[lower, upper]`` (see each producer for guarantees)."""

    lower: float
    upper: float

    def to_json(self) -> dict:
        return {"lower": self.lower, "upper": self.upper}
