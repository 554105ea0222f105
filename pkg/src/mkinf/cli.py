"""Command line front end.

    mkinf barycenter --curve curve.json --schedule 4,8 --out run/
    mkinf process    --curve curve.json --schedule 16 --out run/
    mkinf reroot     --curve curve.json --schedule 16 --t0 0.5 --out run/
    mkinf validate   [--instances tiny/] --seed 0 --out run/
    mkinf plot       --input run/process.json --out run/

Exit status is 0 on success, 1 on failure (an error JSON is printed and
written to ``<out>/error.json``) and 2 on usage errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import io as mio
from .instances import random_measure
from .barycenter import BarycenterNotConverged, BarycenterProblem, curve_barycenter, finite_barycenter
from .measures import DiscreteMeasure, MeasureCurve, TimeGrid
from .ot_core import NonInvertibleMapError, w2, w2_1d
from .oracle import (
    CapExceededError,
    MAX_ENUM_CELLS,
    MultiMarginalInstance,
    brute_force_w2,
    certification_residuals,
)
from .process import (
    average_map_residual,
    build_process,
    marginal_fidelity,
    mk_cost,
    reroot,
    sample_paths_csv,
)

COMMANDS = ("barycenter", "process", "reroot", "validate", "plot")

DEFAULT_TOLERANCES = {
    "certify": 1e-6,
    "fixed_point": 1e-6,
    "marginal": 1e-6,
    "identity": 1e-9,
    "enumeration": 1e-9,
    "w2_1d": 1e-9,
}


class CommandFailed(RuntimeError):
    pass


@dataclass
class RunConfig:
    command: str
    input_path: Path | None = None
    output_path: Path = Path("mkinf-out")
    N_schedule: list[int] = field(default_factory=list)
    strategy: str = "uniform"
    tolerances: dict[str, float] = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))
    seed: int = 0
    t0: float | None = None
    count: int = 20

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if any(not v > 0 for v in self.tolerances.values()):
            raise ValueError("tolerances must be positive")
        if self.command in ("barycenter", "process") and not self.N_schedule:
            raise ValueError("--schedule is required")


def _schedule(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad schedule {text!r}")
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("schedule needs positive integers")
    return values


def _tolerance(text: str) -> tuple[str, float]:
    name, sep, value = text.partition("=")
    if not sep:
        raise argparse.ArgumentTypeError(f"expected NAME=VALUE, got {text!r}")
    try:
        return name.strip(), float(value)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad tolerance value in {text!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mkinf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", type=Path, default=Path("mkinf-out"), help="output directory")
    common.add_argument("--tol", type=_tolerance, action="append", default=[], metavar="NAME=VALUE")
    common.add_argument("--seed", type=int, default=0)
    curve_opts = argparse.ArgumentParser(add_help=False)
    curve_opts.add_argument("--curve", type=Path)
    curve_opts.add_argument("--schedule", type=_schedule, default=[])
    curve_opts.add_argument("--strategy", choices=["uniform", "prefer_ak"], default="uniform")

    sub.add_parser("barycenter", parents=[common, curve_opts], help="curve barycenter")
    sub.add_parser("process", parents=[common, curve_opts], help="optimal process and its costs")
    p = sub.add_parser("reroot", parents=[common, curve_opts], help="re-root the process at t0")
    p.add_argument("--process", type=Path, help="process JSON (instead of --curve)")
    p.add_argument("--t0", type=float, required=True)
    p = sub.add_parser("validate", parents=[common], help="oracle cross-checks")
    p.add_argument("--instances", type=Path, help="directory of curve JSON files")
    p.add_argument("--count", type=int, default=20, help="random instances when no directory is given")
    p = sub.add_parser("plot", parents=[common], help="SVG of a process or measure file")
    p.add_argument("--input", type=Path, required=True)
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    tolerances = dict(DEFAULT_TOLERANCES)
    tolerances.update(dict(args.tol))
    input_path = None
    for name in ("curve", "process", "input", "instances"):
        input_path = input_path or getattr(args, name, None)
    return RunConfig(
        command=args.command,
        input_path=input_path,
        output_path=args.out,
        N_schedule=getattr(args, "schedule", []) or [],
        strategy=getattr(args, "strategy", "uniform"),
        tolerances=tolerances,
        seed=args.seed,
        t0=getattr(args, "t0", None),
        count=getattr(args, "count", 20),
    )


# --- commands ---------------------------------------------------------------


def _require_curve(config: RunConfig) -> MeasureCurve:
    if config.input_path is None:
        raise CommandFailed("--curve is required")
    return mio.load_curve(config.input_path)


def _solve_process(config: RunConfig):
    curve = _require_curve(config)
    if not config.N_schedule:
        raise CommandFailed("--schedule is required")
    result, trace, grid = curve_barycenter(curve, config.N_schedule, config.strategy)
    return curve, result, trace, grid, build_process(result, grid)


def cmd_barycenter(config: RunConfig) -> dict:
    curve = _require_curve(config)
    result, trace, _ = curve_barycenter(curve, config.N_schedule, config.strategy)
    out = config.output_path
    mio.write_json(mio.measure_to_dict(result.measure), out / "barycenter.json")
    (out / "convergence.csv").write_text(trace.to_csv())
    return {"objective": result.objective, "atoms": result.measure.size}


def cmd_process(config: RunConfig) -> dict:
    _, result, _, grid, proc = _solve_process(config)
    report = mk_cost(proc)
    out = config.output_path
    mio.write_json(mio.process_to_dict(proc), out / "process.json")
    costs = report.as_dict()
    costs["identity_gap"] = report.identity_gap
    costs["average_map_residual"] = average_map_residual(proc)
    mio.write_json(costs, out / "costs.json")
    (out / "paths.csv").write_text(sample_paths_csv(proc))
    return {"mk_cost": report.mk_cost}


def cmd_reroot(config: RunConfig) -> dict:
    if config.t0 is None:
        raise CommandFailed("--t0 is required")
    if config.input_path is not None and config.input_path.suffix == ".json" and _is_process_file(config.input_path):
        proc = mio.load_process(config.input_path)
    else:
        proc = _solve_process(config)[-1]
    try:
        new = reroot(proc, config.t0)
    except NonInvertibleMapError as exc:
        raise CommandFailed(f"cannot re-root at t0={config.t0}: {exc}") from exc
    mio.write_json(mio.process_to_dict(new), config.output_path / "rerooted.json")
    return {"mk_cost": mk_cost(new).mk_cost}


def _is_process_file(path: Path) -> bool:
    data = mio.read_json(path)
    return isinstance(data, dict) and "base" in data and "maps" in data


def _check(rows: list, instance: str, name: str, residual: float, tol: float) -> None:
    rows.append(
        {
            "instance": instance,
            "check": name,
            "residual": float(residual),
            "tolerance": tol,
            "passed": bool(residual <= tol),
        }
    )


def validate_instance(name: str, marginals: list[DiscreteMeasure], tol: dict, rows: list) -> None:
    """Run the oracle cross-checks on one family of marginals (uniform weights)."""
    inst = MultiMarginalInstance.uniform(marginals)
    bary = finite_barycenter(BarycenterProblem.uniform(marginals))
    cert = certification_residuals(inst, bary)
    _check(rows, name, "multimarginal_value", cert["value_gap"], tol["certify"])
    _check(rows, name, "average_law_w2", cert["law_w2"], tol["certify"])
    if bary.monge:
        _check(rows, name, "fixed_point", bary.fixed_point_residual, tol["fixed_point"])
    grid = TimeGrid(np.arange(1, len(marginals) + 1) / len(marginals), inst.weights)
    proc = build_process(bary, grid)
    report = mk_cost(proc)
    _check(rows, name, "cost_identity", report.identity_gap, tol["identity"])
    if proc.monge_certified:
        _check(rows, name, "average_map", average_map_residual(proc), tol["fixed_point"])
        _check(rows, name, "marginal_fidelity", float(marginal_fidelity(proc, marginals).max()), tol["marginal"])
    a, b = marginals[0], marginals[-1]
    if a.size * b.size <= MAX_ENUM_CELLS:
        _check(rows, name, "w2_vs_enumeration", abs(w2(a, b)[0] - brute_force_w2(a, b)), tol["enumeration"])
    if a.dim == 1:
        _check(rows, name, "w2_vs_w2_1d", abs(w2(a, b)[0] - w2_1d(a, b)[0]), tol["w2_1d"])


def cmd_validate(config: RunConfig) -> dict:
    rows: list[dict] = []
    if config.input_path is not None:
        files = sorted(Path(config.input_path).glob("*.json"))
        if not files:
            raise CommandFailed(f"no instance files in {config.input_path}")
        for f in files:
            curve = mio.load_curve(f)
            validate_instance(f.name, list(curve.measures), config.tolerances, rows)
    else:
        rng = np.random.default_rng(config.seed)
        for k in range(config.count):
            m = int(rng.integers(1, 4))
            n = int(rng.integers(1, 3))
            marginals = [random_measure(rng, int(rng.integers(1, 5)), n) for _ in range(m)]
            validate_instance(f"random-{k:03d}", marginals, config.tolerances, rows)
    passed = all(r["passed"] for r in rows)
    report = {"passed": passed, "checks": rows, "seed": config.seed}
    mio.write_json(report, config.output_path / "validation.json")
    if not passed:
        failed = [f"{r['instance']}:{r['check']}" for r in rows if not r["passed"]]
        raise CommandFailed(f"{len(failed)} check(s) failed: {', '.join(failed[:10])}")
    return {"checks": len(rows)}


def cmd_plot(config: RunConfig) -> dict:
    from .plotting import plot_file

    out = config.output_path / "plot.svg"
    plot_file(config.input_path, out)
    return {"svg": str(out)}


HANDLERS = {
    "barycenter": cmd_barycenter,
    "process": cmd_process,
    "reroot": cmd_reroot,
    "validate": cmd_validate,
    "plot": cmd_plot,
}


def run(config: RunConfig) -> int:
    config.output_path.mkdir(parents=True, exist_ok=True)
    try:
        summary = HANDLERS[config.command](config)
    except (
        mio.FormatError,
        BarycenterNotConverged,
        CommandFailed,
        CapExceededError,
        NonInvertibleMapError,
        FileNotFoundError,
        ValueError,
    ) as exc:
        error = {"command": config.command, "error": type(exc).__name__, "message": str(exc)}
        mio.write_json(error, config.output_path / "error.json")
        print(json.dumps(error, sort_keys=True))
        return 1
    (config.output_path / "error.json").unlink(missing_ok=True)
    print(json.dumps({"command": config.command, "status": "ok", **summary}, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = config_from_args(args)
    except ValueError as exc:
        print(f"mkinf: error: {exc}", file=sys.stderr)
        return 2
    return run(config)


if __name__ == "__main__":
    sys.exit(main())
