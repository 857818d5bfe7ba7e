"""Command-line interface: ``graphlim <command> ...``."""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import io
from .errors import GraphLimError
from .experiment import ExperimentSpec, run_experiment
from .generators import LIMITS, SAMPLERS, generate, parse_call
from .graphon_ops import (
    DecoratedGraph,
    cut_semidistance,
    heuristic,
    hom_density,
    quotient_set_distance,
    unlabeled_cut_distance,
)
from .measures import hausdorff_distance, lp_distance
from .profiles import Strategy, dm_estimate
from .pvariable import StepPVariable, from_matrix, sample_matrix
from .realgraphon import avq_set_distance, cut_norm, lp_norm


def _pvariable(text: str) -> StepPVariable:
    """A P-variable from a file, or from a limit call such as ``indicator(0.5)``."""
    if os.path.exists(text):
        return io.read_pvariable(text)
    name, params = parse_call(text)
    if name in LIMITS:
        return generate(name, params)
    raise GraphLimError(f"no such file and not a limit generator: {text!r}")


def _emit(args, value, label: str) -> None:
    if isinstance(value, dict):
        print(io.dumps(value))
    elif args.json:
        print(io.dumps({label: value}))
    else:
        print(repr(float(value)))


def _mode(text: str, seed: int):
    name, _, rest = text.partition(":")
    if name == "exhaustive" and not rest:
        return "exhaustive"
    if name == "heuristic":
        try:
            return heuristic(int(rest) if rest else 8, seed)
        except ValueError as exc:
            raise GraphLimError(f"bad restart count in {text!r}") from exc
    raise GraphLimError(f"unknown mode {text!r}")


def cmd_lp(args) -> int:
    _emit(args, lp_distance(io.read_measure(args.a), io.read_measure(args.b)), "lp")
    return 0


def cmd_hausdorff(args) -> int:
    _emit(args, hausdorff_distance(io.read_measure_set(args.a), io.read_measure_set(args.b)), "hausdorff")
    return 0


def cmd_dm(args) -> int:
    est = dm_estimate(_pvariable(args.a), _pvariable(args.b), args.k_max, Strategy.parse(args.strategy, args.seed))
    print(io.dumps(est.to_json()))
    return 0


def cmd_cutdist(args) -> int:
    u, w = _pvariable(args.a), _pvariable(args.b)
    mode = _mode(args.mode, args.seed)
    fn = unlabeled_cut_distance if args.unlabeled else cut_semidistance
    res = fn(u, w, mode)
    _emit(args, res._asdict() if mode != "exhaustive" else res, "cut")
    return 0


def cmd_cutnorm(args) -> int:
    _emit(args, cut_norm(io.read_matrix(args.a), args.mode), "cut_norm")
    return 0


def cmd_homdensity(args) -> int:
    g = DecoratedGraph.from_json(io.read_json(args.graph))
    _emit(args, hom_density(g, _pvariable(args.w)), "hom_density")
    return 0


def cmd_quotients(args) -> int:
    res = quotient_set_distance(
        _pvariable(args.a),
        _pvariable(args.b),
        args.k,
        Strategy.parse(args.strategy, args.seed),
        label_invariant=args.label_invariant,
    )
    print(io.dumps(res.to_json()))
    return 0


def cmd_avq(args) -> int:
    res = avq_set_distance(_pvariable(args.a), _pvariable(args.b), args.k, Strategy.parse(args.strategy, args.seed))
    print(io.dumps(res.to_json()))
    return 0


def cmd_lpnorm(args) -> int:
    _emit(args, lp_norm(_pvariable(args.w), float(args.p)), "lp_norm")
    return 0


def cmd_sample(args) -> int:
    m = sample_matrix(_pvariable(args.w), args.m, args.seed, symmetrize=args.symmetrize)
    io.write_text(args.out, io.dumps(m.tolist()) + "\n" if args.json else io.matrix_to_csv(m))
    return 0


def cmd_generate(args) -> int:
    name, params = parse_call(args.spec)
    if name in SAMPLERS and args.n is None:
        raise GraphLimError(f"{name} needs --n")
    obj = generate(name, params, args.n, args.seed)
    if isinstance(obj, StepPVariable):
        text = io.dumps(obj.to_json()) + "\n"
    elif args.as_kernel:
        text = io.dumps(from_matrix(obj).to_json()) + "\n"
    elif args.json:
        text = io.dumps(np.asarray(obj).tolist()) + "\n"
    else:
        text = io.matrix_to_csv(obj)
    io.write_text(args.out, text)
    return 0


def cmd_experiment(args) -> int:
    if args.spec:
        obj = io.read_json(args.spec)
        if args.seed_given:
            obj["seed"] = args.seed
        spec = ExperimentSpec.from_json(obj)
    else:
        if not (args.generator and args.reference and args.sizes):
            raise GraphLimError("experiment needs --spec or --generator, --reference and --sizes")
        if not args.seed_given:
            raise GraphLimError("experiment needs an explicit --seed")
        slack = {}
        for item in args.slack or []:
            key, _, val = item.partition("=")
            slack[key] = float(val)
        spec = ExperimentSpec(
            generator=args.generator,
            reference=args.reference,
            sizes=[int(x) for x in args.sizes.split(",")],
            seed=args.seed,
            metrics=args.metrics.split(","),
            k_max=args.k_max,
            strategy=args.strategy,
            k=args.k,
            cut_mode=args.cut_mode,
            normalize=args.normalize,
            expect=args.expect,
            slack=slack,
            timing=not args.no_timing,
        )
    report = run_experiment(spec, threads=args.threads)
    io.write_text(args.out, report.to_csv())
    return 0 if report.ok else 1


def build_parser() -> argparse.ArgumentParser:
    def globals_parser(top: bool) -> argparse.ArgumentParser:
        # subcommand copies use SUPPRESS so they never overwrite a value given before the command
        p = argparse.ArgumentParser(add_help=False)
        seed, threads, flag = (None, 1, False) if top else (argparse.SUPPRESS,) * 3
        p.add_argument("--seed", type=int, default=seed, help="64-bit seed for all randomness (default 0)")
        p.add_argument("--threads", type=int, default=threads, help="worker processes for experiments")
        p.add_argument("--json", action="store_true", default=flag, help="print results as JSON")
        return p

    parser = argparse.ArgumentParser(
        prog="graphlim",
        description="Distances and constructions for probability graphons and P-variables.",
        parents=[globals_parser(True)],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    common = globals_parser(False)

    def add(name, fn, help_text):
        p = sub.add_parser(name, help=help_text, parents=[common])
        p.set_defaults(func=fn)
        return p

    p = add("lp", cmd_lp, "Levy-Prokhorov distance between two measure JSON files")
    p.add_argument("a")
    p.add_argument("b")

    p = add("hausdorff", cmd_hausdorff, "Hausdorff distance between two measure-set JSON files")
    p.add_argument("a")
    p.add_argument("b")

    p = add("dm", cmd_dm, "interval for the truncated P-variables metric")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--k-max", type=int, default=4)
    p.add_argument("--strategy", default="exhaustive", help="exhaustive | random:M | local:M")

    p = add("cutdist", cmd_cutdist, "cut semidistance (labeled) or unlabeled cut distance")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--unlabeled", action="store_true")
    p.add_argument("--mode", default="exhaustive", help="exhaustive | heuristic:R")

    p = add("cutnorm", cmd_cutnorm, "cut norm of a real matrix (CSV or JSON)")
    p.add_argument("a")
    p.add_argument("--mode", default="exhaustive_rows", choices=["exhaustive_rows", "bruteforce"])

    p = add("homdensity", cmd_homdensity, "homomorphism density of a decorated graph")
    p.add_argument("graph")
    p.add_argument("w")

    p = add("quotients", cmd_quotients, "Hausdorff distance between quotient sets")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--strategy", default="exhaustive")
    p.add_argument("--label-invariant", action="store_true")

    p = add("avq", cmd_avq, "distance between averaged-quotient families")
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--strategy", default="exhaustive")

    p = add("lpnorm", cmd_lpnorm, "L^p norm of a P-variable")
    p.add_argument("w")
    p.add_argument("--p", default="2", help="exponent >= 1 or 'inf'")

    p = add("sample", cmd_sample, "sample an m x m matrix from a P-variable")
    p.add_argument("w")
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--symmetrize", action="store_true")
    p.add_argument("--out", default=None)

    p = add("generate", cmd_generate, "build a limit P-variable or sample a random graph")
    p.add_argument("spec", help="e.g. er(0.5), onoff(0.5), colored(0.2,0.8), indicator(0.5)")
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--as-kernel", action="store_true", help="write samples as kernel JSON")
    p.add_argument("--out", default=None)

    p = add("experiment", cmd_experiment, "convergence experiment with a CSV report")
    p.add_argument("--spec", help="experiment spec JSON")
    p.add_argument("--generator")
    p.add_argument("--reference")
    p.add_argument("--sizes", help="comma-separated, strictly increasing")
    p.add_argument("--metrics", default="dm")
    p.add_argument("--k-max", type=int, default=2)
    p.add_argument("--strategy", default="exhaustive")
    p.add_argument("--k", type=int, default=2)
    p.add_argument("--cut-mode", default="auto", choices=["auto", "exhaustive", "heuristic"])
    p.add_argument("--normalize", action="store_true", help="rescale samples by their mean absolute entry")
    p.add_argument("--expect", default="decreasing", choices=["decreasing", "none"])
    p.add_argument("--slack", action="append", help="metric=value, repeatable")
    p.add_argument("--no-timing", action="store_true", help="write 0 seconds so reports are byte-identical")
    p.add_argument("--out", default=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.seed_given = args.seed is not None
    if args.seed is None:
        args.seed = 0
    try:
        return args.func(args)
    except GraphLimError as exc:
        print(f"graphlim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
