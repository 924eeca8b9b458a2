"""Command-line entry point: ``quenchsplit <mode> --config cfg.json --out dir/``.

Config layout::

    {"problem": {"a": 1.414, "N": 99, "grid": {"kind": "uniform"},
                 "nonlinearity": "kawarada", "delta": 0.1, ...},
     "run": {...}, "converge-time": {...}, "converge-space": {...},
     "critical-a": {...}, "validate": {...}}

Only the block of the selected mode is read. Exit codes: 0 success,
1 structure violation / invalid or missing config / usage error,
2 inconclusive study.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path

from quenchsplit import io
from quenchsplit.errors import Inconclusive, InvalidArgument, InvalidBracket, StructureViolation
from quenchsplit.grid import build_graded, build_uniform
from quenchsplit.model import NONLINEARITIES, ProblemSpec, lookup
from quenchsplit.semidiscrete import OracleConfig, integrate_oracle
from quenchsplit.splitting import run_to_quench
from quenchsplit.studies import (
    converge_space,
    converge_time,
    critical_a_study,
    default_validation_grids,
    validate_linalg,
)

MODES = ("run", "converge-time", "converge-space", "critical-a", "validate")
EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE = 0, 1, 2

log = logging.getLogger("quenchsplit")


@dataclass
class RunConfig:
    mode: str
    output_dir: Path
    spec: ProblemSpec | None = None
    params: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)

    @classmethod
    def from_json(cls, doc: dict, mode: str, output_dir) -> "RunConfig":
        if mode not in MODES:
            raise InvalidArgument(f"unknown mode {mode!r}")
        if not isinstance(doc, dict):
            raise InvalidArgument("config must be a JSON object")
        params = doc.get(mode) or {}
        if not isinstance(params, dict):
            raise InvalidArgument(f"config block {mode!r} must be an object")
        spec = None
        if "problem" in doc:
            spec = ProblemSpec.from_json(doc["problem"])
        elif mode in ("run", "converge-time", "converge-space"):
            raise InvalidArgument(f"mode {mode!r} needs a 'problem' block")
        return cls(mode=mode, output_dir=Path(output_dir), spec=spec, params=dict(params), raw=doc)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_FAIL, f"{self.prog}: error: {message}\n")


def _parser() -> argparse.ArgumentParser:
    p = _Parser(prog="quenchsplit", description="Operator-splitting solver for quenching problems.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="mode", metavar="{" + ",".join(MODES) + "}")
    helps = {
        "run": "single run to quench; writes trajectory.csv and summary.json",
        "converge-time": "temporal order study against the RK4 oracle",
        "converge-space": "spatial order study under mesh doubling",
        "critical-a": "bisection for the critical half-width",
        "validate": "linear-algebra invariant suite",
    }
    for mode in MODES:
        sp = sub.add_parser(mode, help=helps[mode])
        sp.add_argument("--config", type=Path, required=mode != "validate", help="JSON config file")
        sp.add_argument("--out", type=Path, required=True, help="output directory")
    return p


def _load_config(path: Path | None) -> dict:
    if path is None:
        return {}
    try:
        text = path.read_text()
    except OSError as exc:
        raise InvalidArgument(f"cannot read config file {str(path)!r}: {exc.strerror}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidArgument(f"config file {str(path)!r} is not valid JSON: {exc}") from None


def cli_main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.mode is None:
        parser.print_usage(sys.stderr)
        return EXIT_FAIL
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = RunConfig.from_json(_load_config(args.config), args.mode, args.out)
        return _DISPATCH[cfg.mode](cfg)
    except Inconclusive as exc:
        print(f"inconclusive: {exc}", file=sys.stderr)
        return EXIT_INCONCLUSIVE
    except (InvalidArgument, InvalidBracket) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except (KeyError, TypeError, ValueError) as exc:
        print(f"error: invalid config value: {exc}", file=sys.stderr)
        return EXIT_FAIL


def _mode_run(cfg: RunConfig) -> int:
    p = cfg.params
    out = cfg.output_dir
    code = EXIT_OK
    try:
        traj = run_to_quench(
            cfg.spec,
            float(p.get("tol", 1e-13)),
            max_time=p.get("max_time"),
            strict=bool(p.get("strict", True)),
        )
    except StructureViolation as exc:
        traj = exc.trajectory
        print(f"structure violation: {exc}", file=sys.stderr)
        code = EXIT_FAIL
    io.write_trajectory_csv(out / "trajectory.csv", traj)
    io.write_json(out / "summary.json", {"problem": cfg.spec.to_json(), "summary": traj.summary.to_json()})
    if p.get("oracle"):
        oc = OracleConfig(dt_safety=float(p.get("oracle_dt_safety", 1.0)),
                          quench_threshold=cfg.spec.quench_threshold,
                          save_every=int(p.get("oracle_save_every", 100)))
        io.write_oracle_csv(out / "oracle.csv", integrate_oracle(cfg.spec, oc))
    return code


def _write_order(cfg: RunConfig, report, name: str, extra: dict) -> int:
    io.write_json(cfg.output_dir / name, {"problem": cfg.spec.to_json(), **extra, "report": report.to_json()})
    header = ["resolution", "error"]
    io.write_csv(cfg.output_dir / name.replace(".json", ".csv"), header, report.levels)
    return EXIT_INCONCLUSIVE if report.degenerate else EXIT_OK


def _mode_converge_time(cfg: RunConfig) -> int:
    p = cfg.params
    t_star = float(p.get("t_star", 0.25))
    levels = int(p.get("levels", 4))
    report = converge_time(cfg.spec, t_star, levels, oracle_dt_safety=float(p.get("oracle_dt_safety", 0.05)))
    return _write_order(cfg, report, "converge_time.json", {"t_star": t_star, "levels": levels})


def _mode_converge_space(cfg: RunConfig) -> int:
    p = cfg.params
    t_star = float(p.get("t_star", 0.25))
    levels = int(p.get("levels", 4))
    report = converge_space(
        cfg.spec,
        t_star,
        levels,
        delta=float(p.get("delta", 5e-4)),
        richardson=bool(p.get("richardson", True)),
        ref_factor=int(p.get("ref_factor", 4)),
        reference=str(p.get("reference", "auto")),
    )
    return _write_order(cfg, report, "converge_space.json", {"t_star": t_star, "levels": levels})


def _mode_critical_a(cfg: RunConfig) -> int:
    p = cfg.params
    prob = cfg.raw.get("problem", {})
    f = lookup(NONLINEARITIES, prob.get("nonlinearity", "kawarada"), "nonlinearity")
    bracket = tuple(float(v) for v in p.get("bracket", (0.5, 1.2)))
    if len(bracket) != 2:
        raise InvalidArgument("bracket must have two entries")
    N = int(p.get("N", prob.get("N", 199)))
    kw = {"delta": float(p.get("delta", 0.005)), "grading": float(p.get("grading", 1.0))}
    params = {"bracket": list(bracket), "N": N, "budget_time": float(p.get("budget_time", 300.0)),
              "tol_a": float(p.get("tol_a", 0.005)), **kw}
    try:
        res = critical_a_study(f, bracket, N, params["budget_time"], params["tol_a"], **kw)
    except Inconclusive as exc:
        io.write_json(cfg.output_dir / "critical_a.json", {"params": params, "inconclusive_a": exc.a})
        raise
    io.write_json(cfg.output_dir / "critical_a.json", {"params": params, **res.to_json()})
    return EXIT_OK


def _mode_validate(cfg: RunConfig) -> int:
    p = cfg.params
    N_list = [int(n) for n in p.get("N_list", (3, 8, 16))]
    grids = []
    for g in p.get("grids", []):
        a, N, grading = float(g.get("a", 1.0)), int(g["N"]), float(g.get("grading", 1.0))
        grids.append(build_graded(a, N, grading) if grading != 1.0 else build_uniform(a, N))
    if not p:
        grids = default_validation_grids()
    kw = {}
    if "taus" in p:
        kw["taus"] = tuple(float(t) for t in p["taus"])
    if "n_random" in p:
        kw["n_random"] = int(p["n_random"])
    report = validate_linalg(N_list, grids, a=float(p.get("a", 1.0)), **kw)
    io.write_json(cfg.output_dir / "validation.json", report)
    return EXIT_OK


_DISPATCH = {
    "run": _mode_run,
    "converge-time": _mode_converge_time,
    "converge-space": _mode_converge_space,
    "critical-a": _mode_critical_a,
    "validate": _mode_validate,
}


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
