from __future__ import annotations

import numpy as np
import pytest

from graphlim.measures import DiscreteMeasure
from graphlim.pvariable import StepPVariable, quantile_from_kernel


def random_measure(rng: np.random.Generator, dim: int, max_atoms: int = 5, mass: float = 1.0, grid: int = 4):
    """Random measure whose atoms sit on a coarse grid, so distance ties occur."""
    m = int(rng.integers(1, max_atoms + 1))
    atoms = rng.integers(0, grid, size=(m, dim)) / 2.0
    w = rng.random(m) + 0.05
    return DiscreteMeasure(atoms, mass * w / w.sum(), dim=dim)


def random_law(rng: np.random.Generator, max_atoms: int = 3, grid: int = 3) -> DiscreteMeasure:
    m = int(rng.integers(1, max_atoms + 1))
    atoms = rng.integers(0, grid, size=m).astype(float)
    w = rng.integers(1, 4, size=m).astype(float)
    return DiscreteMeasure(atoms, w / w.sum())


def random_kernel(rng: np.random.Generator, n: int, max_atoms: int = 3, grid: int = 3) -> StepPVariable:
    return quantile_from_kernel([[random_law(rng, max_atoms, grid) for _ in range(n)] for _ in range(n)])


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
