"""Command-line entry point: ``vrpga {solve,experiment,baseline,convert,gap}``.

Exit codes: 0 success, 1 usage error, 2 instance error, 3 internal error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .experiment import (
    BASELINES,
    CONFIGURATIONS,
    ExperimentSpec,
    baseline,
    compare_to_optimum,
    config_for,
    format_solution,
    parse_config_name,
    read_summary,
    run_experiment,
    write_run_csv,
)
from .genetic import GaConfig, evolve
from .instance_io import convert_file, load_instance
from .model import InstanceError

EXIT_OK, EXIT_USAGE, EXIT_INSTANCE, EXIT_INTERNAL = 0, 1, 2, 3

log = logging.getLogger("vrpga")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config_file(path) -> dict:
    """``key=value`` lines naming :class:`GaConfig` fields; ``#`` comments allowed."""
    values = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, _, value = line.partition("=")
        values[key.strip()] = value.strip()
    return values


def _base_config(args) -> GaConfig:
    values = read_config_file(args.config_file) if args.config_file else {}
    overrides = {
        "population_size": args.population,
        "max_generations": args.generations,
        "stall_generations": args.stall,
        "se_x": args.se_iterations,
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return GaConfig.from_mapping(values)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _add_ga_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config-file", help="key=value file of GA parameters")
    p.add_argument("--population", type=int, help="population size (default 50)")
    p.add_argument("--generations", type=int, help="maximum generations (default 100)")
    p.add_argument("--stall", type=int, help="stop after this many generations without improvement")
    p.add_argument("--se-iterations", type=int,
                   help="String Exchange trials per segment length (default 30000)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None,
                   help="worker cap (default: all cores); 1 runs everything in-process")
    p.add_argument("--timing", action="store_true",
                   help="add wall-clock columns to run logs (breaks byte-identical reruns)")


def cmd_solve(args) -> int:
    inst = load_instance(args.instance)
    letter = parse_config_name(args.config)
    cfg = config_for(letter, _base_config(args)).replace(rng_seed=args.seed)
    best, logs = evolve(inst, cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{inst.name}__{CONFIGURATIONS[letter][0]}__seed{args.seed}"
    write_run_csv(out / f"{stem}.csv", logs, best.objectives, timing=args.timing,
                  elapsed=logs[-1].elapsed if args.timing else None)
    (out / f"{stem}.sol").write_text(format_solution(best.solution, inst))
    o = best.objectives
    print(f"{inst.name} {CONFIGURATIONS[letter][0]} k={o.f2} length={o.f1} "
          f"stdev={o.f3:.6g} generations={logs[-1].generation}")
    return EXIT_OK


def cmd_experiment(args) -> int:
    try:
        spec = ExperimentSpec(
            instances=args.instance or [],
            configurations=args.config or list(CONFIGURATIONS),
            runs_per_config=args.runs,
            seed=args.seed,
            output_dir=args.out,
            base_config=_base_config(args),
            threads=args.threads,
            timing=args.timing,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    rows, failures = run_experiment(spec)
    for row in rows:
        print(f"{row.instance}: k={row.best_k} length={row.best_length} "
              f"winner={row.config_winner} time={row.total_time:.1f}s")
    for path, err in failures.items():
        print(f"FAILED {path}: {err}", file=sys.stderr)
    if failures and not rows:
        return EXIT_INSTANCE
    return EXIT_OK


def cmd_baseline(args) -> int:
    inst = load_instance(args.instance)
    sol = baseline(inst, args.method, seed=args.seed)
    o = sol.objectives(inst)
    print(f"{inst.name} {args.method} f1={o.f1} f2={o.f2} f3={o.f3}")
    if args.out:
        Path(args.out).write_text(format_solution(sol, inst))
    return EXIT_OK


def cmd_convert(args) -> int:
    text = convert_file(args.source, rmax=args.rmax)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_gap(args) -> int:
    report = compare_to_optimum(read_summary(args.summary), within=args.within)
    lines = report.lines()
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n")
    else:
        print("\n".join(lines))
    print(f"exact k: {report.exact}/{len(report.rows)}; "
          f"within {report.within - 1:.0%}: {report.within_bound}/{len(report.rows)}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vrpga", description="GA and heuristics for PostVRP and CVRP instances.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="one GA run on one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--config", default="bcr-ls",
                   help="bcr-ls, bcr-nols, ox-ls or ox-nols (or a-d)")
    p.add_argument("--out", default=".")
    _add_ga_options(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("experiment", help="seeded runs over instances x configurations")
    p.add_argument("--instance", nargs="*", action="extend")
    p.add_argument("--config", nargs="*", action="extend",
                   help="configurations to run (default: all four)")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--out", default="results")
    _add_ga_options(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("baseline", help="constructive heuristic solution")
    p.add_argument("--instance", required=True)
    p.add_argument("--method", choices=BASELINES, default="cws")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="write the solution file here")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("convert", help="generator JSON (or CVRPLib + RMAX) to .postvrp")
    p.add_argument("source")
    p.add_argument("--rmax", type=float)
    p.add_argument("--out")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("gap", help="best k versus name-encoded optimum from a summary CSV")
    p.add_argument("summary")
    p.add_argument("--within", type=float, default=1.10)
    p.add_argument("--out")
    p.set_defaults(func=cmd_gap)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help, or a usage error already reported
        return exc.code
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if getattr(args, "threads", None) is not None and args.threads < 1:
        print("vrpga: error: --threads must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"vrpga: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (InstanceError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"vrpga: instance error: {exc}", file=sys.stderr)
        return EXIT_INSTANCE
    except ValueError as exc:
        print(f"vrpga: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except Exception as exc:  # noqa: BLE001
        log.debug("internal error", exc_info=True)
        print(f"vrpga: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
