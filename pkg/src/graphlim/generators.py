"""Random graph families and their limit P-variables.

Sample generators return matrices (zero diagonal); limit generators return
one-point :class:`StepPVariable` objects whose single cell carries the law
of an edge value.
"""
from __future__ import annotations

from statistics import NormalDist
from typing import Sequence

import numpy as np

from .errors import GraphLimError
from .measures import DiscreteMeasure
from .pvariable import StepPVariable, constant_cell, sample_matrix

PROB_TOL = 1e-12
DEFAULT_PROBIT_LEVELS = 64


def _check_p(p: float) -> float:
    p = float(p)
    if not 0.0 <= p <= 1.0:
        raise GraphLimError(f"probability out of range: {p}")
    return p


def _check_vector(ps: Sequence[float]) -> np.ndarray:
    ps = np.asarray(ps, dtype=np.float64).reshape(-1)
    if ps.size == 0 or np.any(ps < 0) or not np.all(np.isfinite(ps)):
        raise GraphLimError("probability vector must be non-empty and nonnegative")
    if abs(ps.sum() - 1.0) > 1e-9:
        raise GraphLimError(f"probability vector sums to {ps.sum()!r}, not 1")
    return ps


# -- limits ------------------------------------------------------------------


def constant(c: float) -> StepPVariable:
    """Deterministic P-variable equal to ``c`` everywhere."""
    return constant_cell(DiscreteMeasure.dirac([c]))


def indicator(p: float) -> StepPVariable:
    """Edge present with probability ``p``: cell ``(1-p) delta_0 + p delta_1``."""
    p = _check_p(p)
    return constant_cell(DiscreteMeasure([0.0, 1.0], [1.0 - p, p]))


def pm_limit(p: float) -> StepPVariable:
    """Entries ``-1`` with probability ``p`` and ``+1`` otherwise."""
    p = _check_p(p)
    return constant_cell(DiscreteMeasure([-1.0, 1.0], [p, 1.0 - p]))


def colored_limit(ps: Sequence[float]) -> StepPVariable:
    """Edge colour ``i`` with probability ``ps[i]`` (colour 0 means no edge)."""
    ps = _check_vector(ps)
    return constant_cell(DiscreteMeasure(np.arange(ps.size, dtype=np.float64), ps))


def probit_limit(levels: int = DEFAULT_PROBIT_LEVELS) -> StepPVariable:
    """Standard normal edge weights discretized to ``levels`` equal-mass quantiles."""
    levels = int(levels)
    if levels < 1:
        raise GraphLimError("need at least one quantile level")
    nd = NormalDist()
    atoms = [nd.inv_cdf((l + 0.5) / levels) for l in range(levels)]
    return constant_cell(DiscreteMeasure(atoms, np.full(levels, 1.0 / levels)))


# -- samples -----------------------------------------------------------------


def er(p: float, n: int, seed) -> np.ndarray:
    """Erdos-Renyi ``G(n, p)`` adjacency matrix."""
    return sample_matrix(indicator(p), n, seed, symmetrize=True)


def sparse_er(exponent: float, n: int, seed) -> np.ndarray:
    """``G(n, p_n)`` with edge probability ``p_n = n ** -exponent``."""
    exponent = float(exponent)
    if exponent < 0:
        raise GraphLimError("sparsity exponent must be nonnegative")
    return er(float(n) ** -exponent, n, seed)


def onoff(p: float, n: int, seed) -> np.ndarray:
    """Complete graph with probability ``p``, empty graph otherwise."""
    p = _check_p(p)
    n = int(n)
    if n < 1:
        raise GraphLimError("sample size must be positive")
    if not isinstance(seed, np.random.SeedSequence):
        seed = int(seed) & (2**64 - 1)
    on = np.random.default_rng(seed).random() < p
    out = np.ones((n, n)) if on else np.zeros((n, n))
    np.fill_diagonal(out, 0.0)
    return out


def colored(ps: Sequence[float], n: int, seed) -> np.ndarray:
    """Symmetric matrix of i.i.d. edge colours drawn from ``ps``."""
    return sample_matrix(colored_limit(ps), n, seed, symmetrize=True)


def pm_one(p: float, n: int, seed) -> np.ndarray:
    """Matrix of independent ``-1`` (probability ``p``) / ``+1`` entries."""
    return sample_matrix(pm_limit(p), n, seed, symmetrize=False)


def gauss_probit(levels: int, n: int, seed) -> np.ndarray:
    """Matrix of independent discretized standard normal entries."""
    return sample_matrix(probit_limit(levels), n, seed, symmetrize=False)


LIMITS = {
    "indicator": indicator,
    "pm_limit": pm_limit,
    "colored_limit": colored_limit,
    "probit_limit": probit_limit,
    "constant": constant,
}

SAMPLERS = {
    "er": er,
    "sparse_er": sparse_er,
    "onoff": onoff,
    "colored": colored,
    "pm_one": pm_one,
    "gauss_probit": gauss_probit,
}


def parse_call(text: str) -> tuple[str, list[float]]:
    """Split ``"name(a,b,...)"`` (or a bare ``"name"``) into name and numbers."""
    text = text.strip()
    if "(" not in text:
        return text, []
    if not text.endswith(")"):
        raise GraphLimError(f"malformed generator call: {text!r}")
    name, _, inner = text[:-1].partition("(")
    inner = inner.strip()
    try:
        args = [float(x) for x in inner.split(",")] if inner else []
    except ValueError as exc:
        raise GraphLimError(f"non-numeric generator argument in {text!r}") from exc
    return name.strip(), args


def generate(name: str, params: Sequence[float], n: int | None = None, seed=0):
    """Build a limit object or a sample by generator name.

    Limit names ignore ``n`` and ``seed``; sample names need ``n``.
    """
    params = list(params)
    if name in LIMITS:
        fn = LIMITS[name]
        if name == "colored_limit":
            return fn(params)
        if name == "probit_limit":
            return fn(int(params[0]) if params else DEFAULT_PROBIT_LEVELS)
        if len(params) != 1:
            raise GraphLimError(f"{name} takes one parameter")
        return fn(params[0])
    if name in SAMPLERS:
        if n is None:
            raise GraphLimError(f"{name} needs a size n")
        if name == "colored":
            return colored(params, n, seed)
        if name == "gauss_probit":
            return gauss_probit(int(params[0]) if params else DEFAULT_PROBIT_LEVELS, n, seed)
        if len(params) != 1:
            raise GraphLimError(f"{name} takes one parameter")
        return SAMPLERS[name](params[0], n, seed)
    raise GraphLimError(f"unknown generator {name!r}; known: {sorted(LIMITS) + sorted(SAMPLERS)}")
