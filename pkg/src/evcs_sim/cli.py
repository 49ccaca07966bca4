"""Command-line entry point: ``evcs-sim {validate,run,sweep,report}``.

Exit codes: 0 success, 1 runtime failure, 2 bad arguments, 3 validation failed.
Standard output carries data only; diagnostics go to standard error as one
``error: <Kind>: <reason>`` line.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from ._toml import TOMLDecodeError, load_toml
from .errors import SimError, ValidationError
from .gridcore.case import LoadProfile, case_from_dict, validate_case

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_BAD_ARGS = 2
EXIT_VALIDATION = 3

log = logging.getLogger("evcs_sim")


class BadArguments(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise BadArguments(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="evcs-sim", description="EV charging ecosystem attack co-simulation")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    v = sub.add_parser("validate", help="check scenario, case and profile files")
    v.add_argument("paths", nargs="*", type=Path)
    v.add_argument("--scenario", action="append", type=Path, default=[])
    v.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")

    for name, helptext in (("run", "run one scenario"), ("sweep", "run the cartesian product of overrides")):
        r = sub.add_parser(name, help=helptext)
        r.add_argument("--scenario", required=True, type=Path)
        r.add_argument("--seed", type=int)
        r.add_argument("--out", type=Path)
        r.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        if name == "sweep":
            r.add_argument("--vary", action="append", default=[], metavar="KEY=V1,V2,...", required=True)
            r.add_argument("--jobs", type=int, default=1)

    rep = sub.add_parser("report", help="rebuild summary.txt from a run's CSV files")
    rep.add_argument("dirs", nargs="+", type=Path)
    return p


def _fail(code: int, kind: str, reason: str) -> int:
    print(f"error: {kind}: {reason}", file=sys.stderr)
    return code


def _overrides(args) -> list[str]:
    items = list(args.overrides)
    if getattr(args, "seed", None) is not None:
        if args.seed < 0 or args.seed >= 2**64:
            raise BadArguments("--seed must be a u64")
        items.append(f"sim.seed={args.seed}")
    return items


def _validate_file(path: Path, overrides) -> list[str]:
    from .scenario import load_spec

    try:
        data = load_toml(path)
    except FileNotFoundError:
        return [f"{path}: file not found"]
    except TOMLDecodeError as exc:
        return [f"{path}: {exc}"]
    if "scenario" in data:
        try:
            spec = load_spec(path, overrides)
        except ValidationError as exc:
            return [f"{path}: {p}" for p in exc.problems]
        problems = []
        for key in ("grid_case", "profile"):
            p = spec.path(key)
            if p is not None:
                problems += _validate_file(p, ())
        return problems
    if "bus" in data or "line" in data or "generator" in data:
        try:
            case = case_from_dict(data)
        except ValidationError as exc:
            return [f"{path}: {p}" for p in exc.problems]
        except (KeyError, TypeError, ValueError) as exc:
            return [f"{path}: malformed case: {exc}"]
        return [f"{path}: {p}" for p in validate_case(case)]
    if "hourly_mw" in data:
        try:
            LoadProfile([float(x) for x in data["hourly_mw"]], data.get("name", path.stem))
        except (ValidationError, TypeError, ValueError) as exc:
            return [f"{path}: {exc}"]
        return []
    return [f"{path}: not a scenario, case or profile file"]


def cmd_validate(args) -> int:
    paths = list(args.paths) + list(args.scenario)
    if not paths:
        raise BadArguments("validate needs at least one path")
    problems = []
    for p in paths:
        problems += _validate_file(p, args.overrides)
    for line in problems:
        print(line, file=sys.stderr)
    if problems:
        return _fail(EXIT_VALIDATION, "ValidationFailed", problems[0])
    for p in paths:
        print(f"ok {p}")
    return EXIT_OK


def _run_one(scenario: Path, overrides, out: Path | None):
    from .scenario import load_spec, run_scenario

    spec = load_spec(scenario, overrides)
    summary = run_scenario(spec, out)
    return str(summary.output_dir), summary.config_hash


def cmd_run(args) -> int:
    out_dir, digest = _run_one(args.scenario, _overrides(args), args.out)
    print(f"{out_dir}\t{digest}")
    return EXIT_OK


def _parse_vary(items):
    axes = []
    for item in items:
        if "=" not in item:
            raise BadArguments(f"--vary {item!r} is not KEY=V1,V2")
        key, values = item.split("=", 1)
        vals = [v for v in values.split(",") if v != ""]
        if not key or not vals:
            raise BadArguments(f"--vary {item!r} needs a key and at least one value")
        axes.append((key, vals))
    return axes


def _point_name(point) -> str:
    return "__".join(f"{k}={v}" for k, v in point).replace("/", "_")


def cmd_sweep(args) -> int:
    from .scenario import load_spec

    axes = _parse_vary(args.vary)
    if args.jobs < 1:
        raise BadArguments("--jobs must be >= 1")
    base_overrides = _overrides(args)
    base_out = args.out or load_spec(args.scenario, base_overrides).output_dir
    points = [tuple(zip([k for k, _ in axes], combo)) for combo in itertools.product(*[v for _, v in axes])]
    jobs = []
    for point in points:
        ov = base_overrides + [f"{k}={v}" for k, v in point]
        load_spec(args.scenario, ov)  # validate every point before running any
        jobs.append((args.scenario, ov, base_out / _point_name(point)))
    if args.jobs == 1:
        results = [_run_one(*j) for j in jobs]
    else:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_run_one, *zip(*jobs)))
    for (out_dir, digest) in results:
        print(f"{out_dir}\t{digest}")
    return EXIT_OK


def cmd_report(args) -> int:
    from .scenario import write_summary

    for d in args.dirs:
        path = write_summary(d)
        sys.stdout.write(path.read_text(encoding="utf-8"))
    return EXIT_OK


COMMANDS = {"validate": cmd_validate, "run": cmd_run, "sweep": cmd_sweep, "report": cmd_report}


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        if args.command is None:
            raise BadArguments("a command is required: validate, run, sweep or report")
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr)
        return COMMANDS[args.command](args)
    except BadArguments as exc:
        return _fail(EXIT_BAD_ARGS, "BadArguments", str(exc))
    except ValidationError as exc:
        for p in exc.problems[1:]:
            print(p, file=sys.stderr)
        return _fail(EXIT_VALIDATION, "ValidationFailed", exc.problems[0] if exc.problems else str(exc))
    except (SimError, OSError) as exc:
        return _fail(EXIT_RUNTIME, "RuntimeFailure", f"{type(exc).__name__}: {exc}".replace("\n", " "))


if __name__ == "__main__":
    sys.exit(main())
