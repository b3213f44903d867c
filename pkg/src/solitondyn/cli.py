"""Command line entry point: ``solitondyn <subcommand> --config <file|preset:name>``.

Exit codes: 0 success, 2 usage error, otherwise the ``exit_code`` of the
raised error class (see ``solitondyn.errors.EXIT_CODES``). Failures also
print one JSON object on standard error.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import config as config_mod
from . import harness, io, spectral
from .errors import ConfigError, SolitonError, TimeMismatch
from .model import validate_nonlinearity, validate_potential
from .newton import NewtonTrajectory, trajectory_distance


def _load_config(args) -> config_mod.ExperimentConfig:
    if not args.config:
        raise ConfigError("--config is required")
    cfg = config_mod.load(args.config)
    if args.h is not None:
        cfg = cfg.with_h(args.h)
    if args.out is not None:
        cfg = cfg.with_output(args.out)
    return cfg


def _emit(obj) -> None:
    print(json.dumps(obj, sort_keys=True))


def cmd_ground_state(args) -> int:
    cfg = _load_config(args)
    gs = harness.ground_state(cfg)
    out = Path(cfg.output.directory)
    path = out / "ground_state.field"
    harness.save_ground_state(gs, path)
    from .groundstate import check_strauss_decay
    strauss = check_strauss_decay(gs)
    _emit({"file": str(path), "omega": gs.omega, "m": gs.m, "residual": gs.residual,
           "iterations": gs.iterations, "decay_check": strauss.status})
    return 0


def cmd_evolve(args) -> int:
    cfg = _load_config(args)
    h = cfg.model.h[0]
    res = harness.run_experiment(cfg, h, out=cfg.output.directory, resume=args.resume)
    _emit({"h": h, "status": res.status, "directory": str(res.directory), **res.summary})
    return 0


def cmd_sweep(args) -> int:
    cfg = _load_config(args)
    report = harness.run_sweep(cfg, cfg.output.directory, threads=args.threads)
    for r in report.runs:
        _emit({"h": r.h, "status": r.status, "error": r.error, **r.summary})
    _emit({"verdicts": report.verdicts, "notes": report.notes})
    return 0


def cmd_validate(args) -> int:
    cfg = _load_config(args)
    grid = cfg.build_grid()
    checks = validate_nonlinearity(cfg.build_nonlinearity(), grid.dim)
    if cfg.potential.check:
        checks += validate_potential(cfg.build_potential(), grid)
    for c in checks:
        _emit({"check": c.name, "passed": c.passed, "detail": c.detail})
    # raise the first failing family with the documented error class
    harness.check_assumptions(cfg)
    gs = harness.ground_state(cfg)
    for h in cfg.model.h:
        rep = harness.admissibility(cfg, h, gs)
        _emit({"h": h, "admissible": rep.in_set, "conditions": rep.conditions, "values": rep.values,
               "bounds": rep.bounds})
    return 0


def _trajectory_files(paths: list[str]) -> list[Path]:
    files = []
    for p in paths:
        p = Path(p)
        if p.is_dir():
            files += sorted(p.glob("h_*/trajectory.csv")) or sorted(p.glob("trajectory.csv"))
        else:
            files.append(p)
    if not files:
        raise ConfigError("no trajectory CSV found")
    return files


def cmd_compare(args) -> int:
    paths = list(args.paths) or ([args.out] if args.out else [])
    cfg = config_mod.load(args.config) if args.config else None
    for path in _trajectory_files(paths):
        cols = io.read_trajectory(path)
        t = cols["t"]
        q = io.stack_vector(cols, "q")
        if cfg is not None:
            V = cfg.build_potential()
            n = t.size - 1
            plan = harness.TimePlan(cfg.time.T / n, 1, n)
            newton = harness.newton_reference(cfg, V, plan)
            if newton.t.size != t.size:
                raise TimeMismatch(f"{path}: {t.size} samples vs {newton.t.size} reference samples")
            newton.t = t.copy()  # same sample instants by construction
        else:
            nq = io.stack_vector(cols, "newton_q")
            newton = NewtonTrajectory(t, nq, io.stack_vector(cols, "newton_p"), np.zeros(t.size))
        dist = trajectory_distance(newton, t, q)
        summary = harness.summarize(cols)
        _emit({"file": str(path), "dist_newton": dist, "sup_H": summary["sup_H"]})
    return 0


COMMANDS = {
    "ground-state": cmd_ground_state,
    "evolve": cmd_evolve,
    "sweep": cmd_sweep,
    "validate": cmd_validate,
    "compare": cmd_compare,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="solitondyn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in [("ground-state", "solve for the ground state and save it"),
                            ("evolve", "run one propagation (first h of the config)"),
                            ("sweep", "run all h values and write the decay report"),
                            ("validate", "check config, assumptions and initial data only"),
                            ("compare", "Newton vs measured distances from trajectory CSVs")]:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", help="INI file or preset:<name>")
        p.add_argument("--out", help="output directory (overrides [output] directory)")
        p.add_argument("--h", type=float, help="run a single h value")
        p.add_argument("--resume", help="checkpoint field file to continue from")
        p.add_argument("--threads", type=int, default=os.cpu_count() or 1,
                       help="worker processes / FFT threads (default: available CPUs)")
        if name == "compare":
            p.add_argument("paths", nargs="*", help="trajectory CSVs or run directories")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command != "sweep":
        spectral.set_workers(args.threads)
    try:
        return COMMANDS[args.command](args)
    except SolitonError as exc:
        print(json.dumps(exc.as_record(), sort_keys=True), file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
