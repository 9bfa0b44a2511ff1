"""Command line entry point: ``artifact prove FILE`` and ``artifact simulate FILE --start TERM``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .engine import Config, prove
from .oracle import ExplosionGuard, SimConfig, bounded_mass, estimate_termination
from .parser import parse_ptrs, parse_term, signature
from .ptrs import InputError
from .render import render_proof

EXIT_YES, EXIT_MAYBE, EXIT_INPUT = 0, 1, 2


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be at least 1")
    return n


def _natural(text: str) -> int:
    n = int(text)
    if n < 0:
        raise argparse.ArgumentTypeError("must be non-negative")
    return n


def build_parser() -> argparse.ArgumentParser:
    shared = argparse.ArgumentParser(add_help=False)
    shared.add_argument("--max-coeff", type=_positive, default=2)
    shared.add_argument("--transform-depth", type=_natural, default=8)
    shared.add_argument("--timeout", type=float, default=300.0, help="seconds")
    shared.add_argument("--no-transforms", action="store_true")
    shared.add_argument("--proof-format", choices=("text", "machine"), default="text")
    shared.add_argument("--jobs", type=_positive, default=1)
    shared.add_argument("--seed", type=int, default=0)
    shared.add_argument("--trials", type=_positive, default=1000)
    shared.add_argument("--step-cap", type=_positive, default=10_000)
    shared.add_argument("--depth", type=_natural, default=None,
                        help="also compute the exact leaf mass up to this depth")

    ap = argparse.ArgumentParser(
        prog="artifact",
        description="Prove almost-sure innermost termination of probabilistic rewrite systems.",
    )
    sub = ap.add_subparsers(dest="command", required=True)
    p = sub.add_parser("prove", parents=[shared], help="search for an iAST proof")
    p.add_argument("file", type=Path)
    s = sub.add_parser("simulate", parents=[shared], help="estimate termination by sampling")
    s.add_argument("file", type=Path)
    s.add_argument("--start", required=True, help="start term, e.g. 'g(a)'")
    s.add_argument("--size-cap", type=_positive, default=2_000)
    s.add_argument("--rule-policy", choices=("first", "uniform"), default="first")
    return ap


def _config(args: argparse.Namespace) -> Config:
    return Config(
        max_coeff=args.max_coeff,
        transform_depth=args.transform_depth,
        timeout=args.timeout,
        enable_transforms=not args.no_transforms,
        seed=args.seed,
        proof_format=args.proof_format,
    )


def run_prove(args: argparse.Namespace) -> int:
    R = parse_ptrs(args.file.read_text(encoding="utf-8"))
    cfg = _config(args)
    verdict = prove(R, cfg)
    sys.stdout.write(render_proof(verdict, cfg.proof_format))
    return EXIT_YES if verdict.yes else EXIT_MAYBE


def run_simulate(args: argparse.Namespace) -> int:
    R = parse_ptrs(args.file.read_text(encoding="utf-8"))
    start = parse_term(args.start, arities=signature(R))
    cfg = SimConfig(
        trials=args.trials,
        step_cap=args.step_cap,
        size_cap=args.size_cap,
        seed=args.seed,
        rule_policy=args.rule_policy,
    )
    est = estimate_termination(R, start, cfg, jobs=args.jobs)
    print(f"terminated: {est.terminated}/{est.trials}")
    print(f"estimate: {float(est.point):.4f}")
    print(f"95% Wilson interval: [{est.low:.4f}, {est.high:.4f}]")
    if est.policy_relative:
        print(f"note: overlapping rules, estimate is relative to rule policy '{cfg.rule_policy}'")
    if args.depth is not None:
        try:
            mass = bounded_mass(R, start, args.depth)
        except ExplosionGuard as exc:
            print(f"exact leaf mass up to depth {args.depth}: not computed ({exc})")
        else:
            print(f"exact leaf mass up to depth {args.depth}: {mass}")
    return EXIT_YES


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "prove":
            return run_prove(args)
        return run_simulate(args)
    except (InputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
