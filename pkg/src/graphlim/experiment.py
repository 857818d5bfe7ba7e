"""Convergence experiments: distances from sampled graphs to a reference limit.

A run samples one graph per size from a generator, compares it with a
reference P-variable under the requested metrics, and checks that each
metric's upper value does not grow by more than a slack between
consecutive sizes.
"""
from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .errors import GraphLimError
from .generators import LIMITS, SAMPLERS, generate, parse_call
from .graphon_ops import heuristic, quotient_set_distance, unlabeled_cut_distance
from .profiles import Strategy, dm_estimate
from .pvariable import StepPVariable, blowup, from_matrix, seed_for
from .realgraphon import avq_set_distance, normalized, real_cut_distance

METRICS = ("dm", "cut", "quotient", "avq", "real_cut")
DEFAULT_SLACK = {"dm": 0.1, "cut": 0.1, "quotient": 0.1, "avq": 0.1, "real_cut": 0.05}
CUT_EXHAUSTIVE_MAX = 6
HEADER = "n,metric,lower,upper,seconds"


@dataclass
class ExperimentSpec:
    """Everything that determines an experiment's report.

    ``generator`` and ``reference`` are call strings such as ``"er(0.5)"``
    and ``"indicator(0.5)"``; a reference may also be a path to a P-variable
    file.  A limit used as generator yields a constant sequence.  ``cut_mode`` is ``auto`` (exhaustive up to 6 points), ``exhaustive``
    or ``heuristic``.  ``expect`` is ``decreasing`` (check trends) or
    ``none`` (report only).
    """

    generator: str
    reference: str
    sizes: Sequence[int]
    seed: int
    metrics: Sequence[str] = ("dm",)
    k_max: int = 2
    strategy: str = "exhaustive"
    k: int = 2
    cut_mode: str = "auto"
    restarts: int = 8
    normalize: bool = False
    expect: str = "decreasing"
    slack: dict = field(default_factory=dict)
    timing: bool = True

    def __post_init__(self):
        self.sizes = [int(n) for n in self.sizes]
        if not self.sizes or any(n < 1 for n in self.sizes):
            raise GraphLimError("sizes must be positive")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise GraphLimError("sizes must be strictly increasing")
        self.metrics = [m.strip() for m in self.metrics]
        bad = [m for m in self.metrics if m not in METRICS]
        if bad or not self.metrics:
            raise GraphLimError(f"unknown metrics {bad}; choose from {METRICS}")
        if self.expect not in ("decreasing", "none"):
            raise GraphLimError("expect must be 'decreasing' or 'none'")
        if self.cut_mode not in ("auto", "exhaustive", "heuristic"):
            raise GraphLimError("cut_mode must be auto, exhaustive or heuristic")
        name, _ = parse_call(self.generator)
        if name not in SAMPLERS and name not in LIMITS:
            raise GraphLimError(f"unknown generator {name!r}; known: {sorted(SAMPLERS) + sorted(LIMITS)}")
        Strategy.parse(self.strategy)
        self.slack = {**DEFAULT_SLACK, **{k: float(v) for k, v in dict(self.slack).items()}}

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentSpec":
        if "seed" not in obj:
            raise GraphLimError("experiment spec needs a seed")
        known = set(cls.__dataclass_fields__)
        extra = set(obj) - known
        if extra:
            raise GraphLimError(f"unknown experiment fields: {sorted(extra)}")
        return cls(**obj)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class Row:
    n: int
    metric: str
    lower: float
    upper: float
    seconds: float


@dataclass
class Report:
    rows: list[Row]
    trends: dict[str, tuple[str, float]]

    @property
    def ok(self) -> bool:
        return all(verdict != "fails" for verdict, _ in self.trends.values())

    def to_csv(self) -> str:
        lines = [HEADER]
        for r in self.rows:
            lines.append(f"{r.n},{r.metric},{r.lower!r},{r.upper!r},{r.seconds:.6f}")
        for metric, (verdict, slack) in self.trends.items():
            lines.append(f"trend,{metric},{verdict},{slack!r},")
        return "\n".join(lines) + "\n"


def load_reference(text: str) -> StepPVariable:
    if os.path.exists(text):
        from .io import read_pvariable

        return read_pvariable(text)
    name, params = parse_call(text)
    if name not in LIMITS:
        raise GraphLimError(f"reference {text!r} is neither a file nor a limit generator")
    return generate(name, params)


def sample_pvariable(spec: ExperimentSpec, n: int) -> StepPVariable:
    """The size-``n`` member of the sequence; a limit generator is blown up to ``n`` points."""
    name, params = parse_call(spec.generator)
    if name in LIMITS:
        w = generate(name, params)
        return blowup(w, n // w.n) if n % w.n == 0 else w
    m = generate(name, params, n, seed_for(spec.seed, n))
    return normalized(m) if spec.normalize else from_matrix(m)


def _measure(spec: ExperimentSpec, n: int, metric: str) -> Row:
    start = time.perf_counter()
    u = sample_pvariable(spec, n)
    w = load_reference(spec.reference)
    strategy = Strategy.parse(spec.strategy, seed=spec.seed)
    exhaustive = spec.cut_mode == "exhaustive" or (spec.cut_mode == "auto" and n <= CUT_EXHAUSTIVE_MAX)
    mode = "exhaustive" if exhaustive else heuristic(spec.restarts, spec.seed)
    if metric == "dm":
        lo, hi = dm_estimate(u, w, spec.k_max, strategy)
    elif metric == "cut":
        res = unlabeled_cut_distance(u, w, mode)
        lo, hi = (res, res) if exhaustive else res
    elif metric == "quotient":
        lo, hi = quotient_set_distance(u, w, spec.k, strategy)
    elif metric == "avq":
        lo, hi = avq_set_distance(u, w, spec.k, strategy)
    else:
        res = real_cut_distance(u, w, mode)
        lo, hi = (res, res) if exhaustive else res
    seconds = time.perf_counter() - start if spec.timing else 0.0
    return Row(n, metric, float(lo), float(hi), seconds)


def _trend(values: list[float], slack: float) -> str:
    if len(values) < 2:
        return "holds"
    ok = all(b <= a + slack for a, b in zip(values, values[1:]))
    return "holds" if ok else "fails"


def run_experiment(spec: ExperimentSpec, threads: int = 1) -> Report:
    """Compute every (size, metric) row; rows come out sorted by size then metric."""
    load_reference(spec.reference)  # fail early on a bad reference
    tasks = [(n, m) for n in spec.sizes for m in spec.metrics]
    if threads > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_measure, [spec] * len(tasks), *zip(*tasks)))
    else:
        rows = [_measure(spec, n, m) for n, m in tasks]
    rows.sort(key=lambda r: (r.n, r.metric))
    trends = {}
    for metric in spec.metrics:
        if spec.expect == "none":
            trends[metric] = ("reported", spec.slack[metric])
            continue
        ups = [r.upper for r in rows if r.metric == metric]
        trends[metric] = (_trend(ups, spec.slack[metric]), spec.slack[metric])
    return Report(rows, trends)


def upper_values(report: Report, metric: str) -> np.ndarray:
    return np.array([r.upper for r in report.rows if r.metric == metric])
