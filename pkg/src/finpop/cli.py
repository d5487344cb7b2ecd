"""Command-line entry point.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 enumeration
budget exceeded, 5 an experiment check failed, 6 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from enum import IntEnum
from pathlib import Path

from .errors import BudgetError, FinPopError, ParseError
from .scenario import (
    ExperimentAssertionError,
    Scenario,
    ValidationError,
    emit_report,
    load_scenario,
    output_paths,
    run_experiment,
    validate_scenario,
)

log = logging.getLogger("finpop")


class ExitCode(IntEnum):
    OK = 0
    PARSE = 2
    VALIDATION = 3
    BUDGET = 4
    ASSERTION = 5
    IO = 6


def _csv_ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip()]


def _csv_strs(text: str) -> list[str]:
    return [t.strip() for t in text.split(",") if t.strip()]


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, help="master seed (required for monte-carlo and synthetic data)")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--budget", type=int, help="exhaustive enumeration budget")
    p.add_argument("--out", help="output directory (default: $FINPOP_OUT or the current directory)")
    p.add_argument("--csv", action="store_true", help="also write the CSV table")


def _add_population(p: argparse.ArgumentParser) -> None:
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--population", help="population CSV file")
    g.add_argument("--corpus", type=int, help="built-in corpus population of this size")
    g.add_argument("--synthetic", type=int, metavar="N", help="synthetic population of N points (needs --pop-seed)")
    p.add_argument("--pop-seed", type=int)
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--dim", type=int, default=1)
    p.add_argument("--class", dest="cls", help="threshold-1d, interval-1d, axis-rectangle, or a CSV of explicit labelings")
    p.add_argument("--declared-vc", type=int)


def _add_mode(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mode", choices=["exhaustive", "monte-carlo"], default="exhaustive")
    p.add_argument("--trials", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="finpop", description="Learning-theory experiments on finite populations.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario")
    _add_common(p)

    p = sub.add_parser("bound", help="theorem bound sweep")
    p.add_argument("--l", type=_csv_ints, required=True)
    p.add_argument("--k", type=_csv_ints, required=True)
    p.add_argument("--h", type=_csv_ints, required=True)
    p.add_argument("--eps", type=_csv_strs, required=True)
    _add_common(p)

    p = sub.add_parser("lemma", help="symmetrisation lemma check")
    _add_population(p)
    _add_mode(p)
    p.add_argument("--l", type=_csv_ints, required=True)
    p.add_argument("--eps", type=_csv_strs, required=True)
    p.add_argument("--version", dest="versions", type=_csv_strs, default=["v1", "v2"])
    _add_common(p)

    p = sub.add_parser("measure", help="counting measure of a generalisation statistic")
    _add_population(p)
    _add_mode(p)
    p.add_argument("--l", type=_csv_ints, required=True)
    p.add_argument("--eps", type=_csv_strs, required=True)
    p.add_argument("--statistic", type=_csv_strs, default=["u_minus_vtr", "uprime_minus_vtr"])
    _add_common(p)

    p = sub.add_parser("meng", help="error decomposition for given errors and inclusion")
    g = p.add_mutually_exclusive_group(required=True)
    g.add_argument("--errors", type=_csv_strs)
    g.add_argument("--randomized", type=_csv_ints, metavar="N,...", help="random instances of these sizes")
    p.add_argument("--inclusion", type=_csv_ints)
    p.add_argument("--instances", type=int)
    _add_common(p)

    p = sub.add_parser("growth", help="growth function against the polynomial bound")
    _add_population(p)
    p.add_argument("--l", type=_csv_ints, required=True)
    _add_common(p)

    p = sub.add_parser("halfsplit", help="half-split label-ratio concentration")
    p.add_argument("--labels", type=_csv_ints, required=True)
    p.add_argument("--eps", type=_csv_strs, required=True)
    _add_common(p)
    return parser


def _population_block(args) -> dict:
    if args.population:
        return {"file": str(Path(args.population).resolve())}
    if args.corpus is not None:
        return {"corpus": args.corpus}
    if args.pop_seed is None:
        raise ValidationError("--synthetic needs --pop-seed")
    return {"synthetic": {"N": args.synthetic, "seed": args.pop_seed, "noise": args.noise, "dim": args.dim}}


def _class_block(args) -> dict | None:
    if args.cls is None:
        return None
    if args.cls in ("threshold-1d", "interval-1d", "axis-rectangle"):
        block = {"kind": args.cls}
    else:
        block = {"kind": "explicit-finite", "file": str(Path(args.cls).resolve())}
    if args.declared_vc is not None:
        block["declared_vc"] = args.declared_vc
    return block


def scenario_from_args(args) -> Scenario:
    """Translate a subcommand's flags into the equivalent scenario."""
    raw: dict = {"name": args.command, "seed": args.seed if args.seed is not None else 0}
    if getattr(args, "mode", "exhaustive") == "monte-carlo":
        if args.seed is None:
            raise ValidationError("monte-carlo mode needs --seed")
        raw.update(mode="monte-carlo", trials=args.trials)
    if args.budget is not None:
        raw["budget"] = args.budget
    raw["workers"] = args.workers
    cmd = args.command
    if cmd == "bound":
        raw["experiment"] = {"kind": "theorem_bound_sweep", "l": args.l, "k": args.k, "h": args.h, "epsilon": args.eps}
    elif cmd == "lemma":
        raw.update(population=_population_block(args), **{"class": _class_block(args)})
        raw["experiment"] = {"kind": "lemma_check", "l": args.l, "epsilon": args.eps, "version": args.versions}
    elif cmd == "measure":
        raw.update(population=_population_block(args), **{"class": _class_block(args)})
        raw["experiment"] = {"kind": "counting_measure", "l": args.l, "epsilon": args.eps, "statistic": args.statistic}
    elif cmd == "growth":
        raw.update(population=_population_block(args), **{"class": _class_block(args)})
        raw["experiment"] = {"kind": "growth", "l": args.l}
    elif cmd == "meng":
        if args.errors is not None:
            if args.inclusion is None:
                raise ValidationError("--errors needs --inclusion")
            raw["experiment"] = {"kind": "meng", "errors": args.errors, "inclusion": args.inclusion}
        else:
            if args.instances is None or args.seed is None:
                raise ValidationError("--randomized needs --instances and --seed")
            raw["experiment"] = {"kind": "meng", "randomized": {"N": args.randomized, "instances": args.instances}}
    elif cmd == "halfsplit":
        raw["experiment"] = {"kind": "half_split", "labels": args.labels, "epsilon": args.eps}
    if getattr(args, "csv", False):
        raw["output"] = {"json": f"{cmd}.json", "csv": f"{cmd}.csv"}
    return validate_scenario(raw, Path.cwd())


def _summary(report) -> str:
    status = "ok" if report.ok else f"{len(report.failures)} check(s) failed"
    return f"{report.kind}: {len(report.results)} result(s), {status}"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        sc = load_scenario(args.scenario) if args.command == "run" else scenario_from_args(args)
        if args.command == "run":
            if args.workers != 1:
                sc.workers = args.workers
            if args.budget is not None:
                sc.budget = args.budget
        report = run_experiment(sc)
        paths = output_paths(sc, args.out)
        for fmt, path in paths.items():
            emit_report(report, fmt, path)
            log.info("wrote %s", path)
        print(_summary(report))
        for f in report.failures:
            print(f"FAILED: {f}", file=sys.stderr)
        if not report.ok:
            return ExitCode.ASSERTION
        return ExitCode.OK
    except BudgetError as exc:
        print(f"budget error: {exc}", file=sys.stderr)
        return ExitCode.BUDGET
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return ExitCode.PARSE
    except ExperimentAssertionError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return ExitCode.ASSERTION
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return ExitCode.IO
    except (ValidationError, FinPopError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return ExitCode.VALIDATION
