"""Exception types and the shared enumeration budget."""
from __future__ import annotations

import os

DEFAULT_BUDGET = 2_000_000


class GraphLimError(ValueError):
    """Base class for invalid inputs to graphlim operations."""


class BudgetExceeded(GraphLimError):
    """An exhaustive enumeration would exceed the configured budget."""


def budget() -> int:
    """Enumeration cap, overridable through ``GRAPHLIM_BUDGET``."""
    raw = os.environ.get("GRAPHLIM_BUDGET")
    if raw is None:
        return DEFAULT_BUDGET
    try:
        value = int(float(raw))
    except ValueError as exc:
        raise GraphLimError(f"GRAPHLIM_BUDGET is not a number: {raw!r}") from exc
    if value < 1:
        raise GraphLimError("GRAPHLIM_BUDGET must be positive")
    return value


def check_budget(size: int, what: str, limit: int | None = None) -> None:
    cap = budget() if limit is None else limit
    if size > cap:
        raise BudgetExceeded(f"{what}: {size} items exceeds budget {cap}")
