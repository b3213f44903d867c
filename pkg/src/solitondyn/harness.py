"""Runs, h-sweeps and their reports.

One run: ground state -> initial datum -> Strang propagation with a record
every sample interval -> trajectory CSV + summary. A sweep repeats this over
the configured h values and judges whether ``sup_t |H_h|`` and the distance
to the Newton trajectory decay as h decreases.
"""

from __future__ import annotations

import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from . import io, spectral
from .config import ExperimentConfig, to_string
from .diagnostics import Recorder, calibrate_radius, boundedness_monitors, TrajectoryRecord
from .errors import ConfigError, InsufficientPoints, SolitonError
from .groundstate import GroundState, SolverOptions, minimize_on_sphere
from .initial import (InitialDatumSpec, PerturbationRecipe, build_initial_datum, make_perturbation,
                      validate_admissibility)
from .model import Check, ModelParams, Potential, validate_nonlinearity, validate_potential
from .newton import NewtonTrajectory, integrate_newton
from .propagator import PropagatorState, default_dt, evolve_to_step

log = logging.getLogger(__name__)

SUMMARY_COLUMNS = ["h", "status", "error", "monitor", "failed_step", "sup_H", "dist_newton",
                   "max_energy_drift", "max_charge_drift", "max_boundary_mass",
                   "max_conc_fraction", "max_abs_q", "max_q_minus_q_hat",
                   "max_potential_moment_alpha", "max_potential_moment_gamma",
                   "conc_radius", "dt", "steps", "samples", "runtime_s"]


# ------------------------------------------------------------------ setup


def check_assumptions(cfg: ExperimentConfig, raise_on_fail: bool = True) -> list[Check]:
    """Probe the nonlinearity and (if enabled) the potential contracts."""
    grid = cfg.build_grid()
    checks = validate_nonlinearity(cfg.build_nonlinearity(), grid.dim, raise_on_fail=raise_on_fail)
    if cfg.potential.check:
        checks += validate_potential(cfg.build_potential(), grid, raise_on_fail=raise_on_fail)
    return checks


def ground_state(cfg: ExperimentConfig) -> GroundState:
    """Solve for (or load) the reference ground state of the config."""
    gsc = cfg.ground_state
    W = cfg.build_nonlinearity()
    if gsc.file:
        from .groundstate import lagrange_multiplier, stationarity_residual, energy
        ff = io.read_field(gsc.file)
        U = ff.values.real
        omega = lagrange_multiplier(U, ff.grid, W)
        return GroundState(U=U, grid=ff.grid, omega=omega, m=energy(U, ff.grid, W),
                           sigma=cfg.model.sigma, residual=stationarity_residual(U, ff.grid, W, omega))
    opts = SolverOptions(tau=gsc.tau, tol=gsc.tol, max_iter=gsc.max_iter)
    return minimize_on_sphere(W, cfg.model.sigma, cfg.build_reference_grid(), opts)


def save_ground_state(gs: GroundState, path) -> None:
    io.write_field(path, gs.grid, gs.U, sigma=gs.sigma, omega=gs.omega, m=gs.m,
                   residual=gs.residual, iterations=gs.iterations)


def initial_spec(cfg: ExperimentConfig, gs: GroundState, params: ModelParams, V: Potential) -> InitialDatumSpec:
    ic = cfg.initial_data
    w0 = None
    if ic.amplitude_fraction > 0:
        recipe = PerturbationRecipe(ic.bump_width, ic.bump_offset, ic.amplitude_fraction)
        w0 = make_perturbation(recipe, gs, params, ic.K, V, strict=True)
    return InitialDatumSpec(ic.q0, ic.v, params, gs, ic.K, w0, ic.boundary_margin)


@dataclass
class TimePlan:
    dt: float
    stride: int
    steps: int

    @property
    def samples(self) -> int:
        return self.steps // self.stride + 1


def plan_time(cfg: ExperimentConfig, h: float, psi0=None, params=None, W=None, V=None) -> TimePlan:
    """Nominal dt from the configured rule, then shrunk so that the horizon
    is an exact multiple of the sampling stride.
    """
    tc = cfg.time
    if tc.dt_rule == "auto":
        if psi0 is None:
            raise ValueError("the auto dt rule needs the initial field")
        dt = default_dt(psi0, params, W, V)
    elif tc.dt_rule == "fixed":
        dt = tc.dt
    else:
        dt = tc.dt * (h / tc.dt_ref_h) ** 2
    stride = max(1, int(round(tc.sample_interval / dt)))
    steps = max(1, math.ceil(tc.T / dt - 1e-9))
    steps = stride * math.ceil(steps / stride)
    return TimePlan(tc.T / steps, stride, steps)


def _newton_bounds(cfg: ExperimentConfig) -> NDArray:
    margin = cfg.initial_data.boundary_margin
    return np.array([(0.5 - margin) * cfg.grid.length] * cfg.grid.dim)


def newton_reference(cfg: ExperimentConfig, V: Potential, plan: TimePlan) -> NewtonTrajectory:
    ic = cfg.initial_data
    dim = cfg.grid.dim
    q0 = np.broadcast_to(np.asarray(ic.q0, float), (dim,))
    v = np.broadcast_to(np.asarray(ic.v, float), (dim,))
    interval = cfg.time.T / (plan.steps // plan.stride)
    substeps = max(1, math.ceil(interval / 0.005))
    return integrate_newton(V, q0, v, cfg.time.T, interval, substeps=substeps, bounds=_newton_bounds(cfg))


# ------------------------------------------------------------------ runs


def record_row(rec: TrajectoryRecord, params: ModelParams, newton: NewtonTrajectory, index: int) -> list:
    N, b, h = params.dim, params.beta, params.h
    return [rec.step, rec.t, *rec.q, *rec.qdot, *rec.qddot, *rec.H, *rec.H_position,
            *rec.H_averaging, rec.charge, rec.E, rec.J, rec.G, *rec.q_hat, rec.conc_fraction,
            rec.boundary_mass, rec.potential_moment,
            rec.potential_moment / h ** (N * b - 2 * params.alpha),
            rec.potential_moment / h ** (N * b - 2 * params.gamma),
            *newton.q[index], *newton.p[index]]


def summarize(columns: dict[str, NDArray]) -> dict[str, float]:
    """Sup-norm summary computed from trajectory columns alone."""
    def vec(name):
        return io.stack_vector(columns, name)

    if columns["t"].size == 0:
        return {}
    H = np.linalg.norm(vec("H"), axis=1)
    dist = np.linalg.norm(vec("q") - vec("newton_q"), axis=1)
    E, J, G, ch = columns["E"], columns["J"], columns["G"], columns["charge"]
    return {
        "sup_H": float(np.max(H)),
        "dist_newton": float(np.max(dist)),
        "max_energy_drift": float(np.max(np.abs(E - E[0])) / (abs(J[0]) + abs(G[0]))),
        "max_charge_drift": float(np.max(np.abs(ch - ch[0])) / ch[0]),
        "max_boundary_mass": float(np.max(columns["boundary_mass"])),
        "max_conc_fraction": float(np.max(columns["conc_fraction"])),
        "max_abs_q": float(np.max(np.linalg.norm(vec("q"), axis=1))),
        "max_q_minus_q_hat": float(np.max(np.linalg.norm(vec("q") - vec("q_hat"), axis=1))),
        "max_potential_moment_alpha": float(np.max(columns["potential_moment_alpha"])),
        "max_potential_moment_gamma": float(np.max(columns["potential_moment_gamma"])),
    }


@dataclass
class RunResult:
    h: float
    status: str  # "valid" or "invalid"
    summary: dict = field(default_factory=dict)
    error: str = ""
    monitor: str = ""
    failed_step: int | None = None
    conc_radius: float = float("nan")
    plan: TimePlan | None = None
    runtime: float = 0.0
    records: list[TrajectoryRecord] = field(default_factory=list, repr=False)
    directory: Path | None = None

    @property
    def valid(self) -> bool:
        return self.status == "valid"

    def summary_row(self) -> list:
        s = self.summary
        keys = SUMMARY_COLUMNS[5:15]
        return [self.h, self.status, self.error, self.monitor,
                "" if self.failed_step is None else self.failed_step,
                *[s.get(k, float("nan")) for k in keys], self.conc_radius,
                self.plan.dt if self.plan else float("nan"),
                self.plan.steps if self.plan else 0,
                len(self.records), round(self.runtime, 3)]


def run_directory(out: Path, h: float) -> Path:
    return Path(out) / f"h_{h!r}"


def run_experiment(cfg: ExperimentConfig, h: float, gs: GroundState | None = None,
                   out: str | Path | None = None, resume: str | Path | None = None,
                   raise_errors: bool = True) -> RunResult:
    """Single propagation at one value of h.

    Writes ``trajectory.csv``, ``summary.csv`` and the effective config to
    ``<out>/h_<h>/`` when ``out`` is given. With ``raise_errors`` any
    module error propagates (after the partial trajectory is written);
    otherwise the run comes back marked invalid.
    """
    t_start = time.perf_counter()
    out_dir = None if out is None else run_directory(Path(out), h)
    result = RunResult(h=float(h), status="invalid", directory=out_dir)
    rows: list[list] = []
    params = cfg.params(h)
    try:
        check_assumptions(cfg)
        W, V = cfg.build_nonlinearity(), cfg.build_potential()
        gs = ground_state(cfg) if gs is None else gs
        grid = cfg.build_grid()
        spec = initial_spec(cfg, gs, params, V)
        psi0 = build_initial_datum(spec, grid)
        plan = plan_time(cfg, h, psi0, params, W, V)
        result.plan = plan
        conc_R = calibrate_radius(psi0, cfg.tolerance.conc_eps, params.width)
        result.conc_radius = conc_R
        newton = newton_reference(cfg, V, plan)
        state = PropagatorState(psi0, params, W, V, plan.dt, cfg.thresholds(), cfg.grid.dealias)
        if resume is not None:
            state, rows = _load_checkpoint(resume, state, out_dir)
        recorder = Recorder(grid, params, W, V, conc_R * params.width)

        def sink(st, snap):
            rec = recorder.measure(st.psi, st.step)
            result.records.append(rec)
            rows.append(record_row(rec, params, newton, st.step // plan.stride))

        ck_every = cfg.output.checkpoint_every if out_dir is not None else 0
        evolve_to_step(state, plan.steps, plan.stride, sink,
                       checkpoint=lambda st: _write_checkpoint(out_dir, st, rows),
                       checkpoint_every=ck_every)
        result.status = "valid"
    except SolitonError as exc:
        result.error = type(exc).__name__
        result.monitor = exc.monitor or ""
        result.failed_step = exc.step
        log.warning("run h=%g invalid: %s", h, exc)
        if raise_errors:
            _finish(result, rows, cfg, out_dir, t_start)
            raise
    _finish(result, rows, cfg, out_dir, t_start)
    return result


def _columns_from_rows(rows: list[list], dim: int) -> dict[str, NDArray]:
    names = io.trajectory_columns(dim)
    data = np.array(rows, dtype=float) if rows else np.zeros((0, len(names)))
    return {n: data[:, j] for j, n in enumerate(names)}


def _finish(result: RunResult, rows, cfg: ExperimentConfig, out_dir: Path | None, t_start: float) -> None:
    result.runtime = time.perf_counter() - t_start
    # summaries are computed from exactly what the CSV holds
    result.summary = summarize(_columns_from_rows(rows, cfg.grid.dim))
    if out_dir is None:
        return
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "config.ini").write_text(to_string(cfg.with_h(result.h)))
    if cfg.output.trajectory:
        write_trajectory(out_dir / "trajectory.csv", rows, cfg.grid.dim)
    if cfg.output.summary:
        io.write_table(out_dir / "summary.csv", SUMMARY_COLUMNS, [result.summary_row()])


def write_trajectory(path, rows, dim: int) -> None:
    io.write_table(path, io.trajectory_columns(dim), rows,
                   magic=f"{io.TRAJECTORY_MAGIC} {io.TRAJECTORY_VERSION}")


def _write_checkpoint(out_dir: Path, st: PropagatorState, rows) -> None:
    io.write_field(out_dir / "checkpoint.field", st.psi.grid, st.psi.values,
                   time=st.psi.time, step=st.step, h=st.params.h, dt=st.dt,
                   charge0=st.charge0, energy0=st.energy0, energy_scale=st.energy_scale,
                   max_modulus0=st.max_modulus0)
    write_trajectory(out_dir / "trajectory.partial.csv", rows, st.psi.grid.dim)


def _load_checkpoint(path, state: PropagatorState, out_dir: Path | None):
    from .grid import WaveField

    ff = io.read_field(path)
    if ff.grid != state.psi.grid:
        raise ConfigError("checkpoint grid differs from the configured grid")
    if float(ff.meta["h"]) != state.params.h or float(ff.meta["dt"]) != state.dt:
        raise ConfigError("checkpoint was written with a different h or dt")
    state.psi = WaveField(ff.grid, ff.values, float(ff.meta["time"]))
    state.step = int(ff.meta["step"])
    state.charge0 = float(ff.meta["charge0"])
    state.energy0 = float(ff.meta["energy0"])
    state.energy_scale = float(ff.meta["energy_scale"])
    state.max_modulus0 = float(ff.meta["max_modulus0"])
    rows = []
    partial = Path(path).with_name("trajectory.partial.csv")
    if partial.is_file():
        cols = io.read_trajectory(partial)
        names = list(cols)
        for j in range(cols["step"].size):
            if cols["step"][j] < state.step:
                rows.append([int(cols[n][j]) if n == "step" else float(cols[n][j]) for n in names])
    return state, rows


# ------------------------------------------------------------------ sweeps


@dataclass
class SweepReport:
    runs: list[RunResult]
    verdicts: dict[str, bool]
    notes: dict[str, str]

    @property
    def valid_runs(self) -> list[RunResult]:
        return [r for r in self.runs if r.valid]

    def write(self, out: str | Path) -> None:
        out = Path(out)
        io.write_table(out / "sweep.csv", SUMMARY_COLUMNS, [r.summary_row() for r in self.runs])
        io.write_table(out / "verdicts.csv", ["verdict", "value", "note"],
                       [[k, v, self.notes.get(k, "")] for k, v in self.verdicts.items()])


def decay_verdict(values: list[float], slack: float, floor: float) -> tuple[bool, str]:
    """Each value below ``(1 + slack)`` times its predecessor; vacuous at the floor."""
    if len(values) < 2:
        return False, "fewer than two valid runs"
    if all(v <= floor for v in values):
        return True, f"floor: all values <= {floor:g}"
    ok = all(b < (1.0 + slack) * a for a, b in zip(values, values[1:]))
    ratios = ", ".join(f"{b / a:.3g}" if a > 0 else "inf" for a, b in zip(values, values[1:]))
    return ok, f"successive ratios {ratios}"


def assemble_report(runs: list[RunResult], cfg: ExperimentConfig) -> SweepReport:
    valid = [r for r in runs if r.valid]
    tol = cfg.tolerance
    verdicts, notes = {}, {}
    for key, col in (("decay_sup_H", "sup_H"), ("decay_dist_newton", "dist_newton")):
        ok, note = decay_verdict([r.summary[col] for r in valid], tol.decay_slack,
                                 tol.floor if col == "sup_H" else 0.0)
        verdicts[key], notes[key] = ok, note
    eps = tol.conc_eps
    verdicts["concentration"] = bool(valid) and all(r.summary["max_conc_fraction"] < 2 * eps for r in valid)
    notes["concentration"] = f"max conc_fraction < {2 * eps:g} on every valid run"
    verdicts["monitors_clean"] = len(valid) == len(runs)
    invalid = [f"h={r.h:g}: {r.error} ({r.monitor or 'n/a'})" for r in runs if not r.valid]
    notes["monitors_clean"] = "; ".join(invalid) if invalid else "all runs valid"
    return SweepReport(runs, verdicts, notes)


def _sweep_worker(args):
    cfg, h, gs, out = args
    spectral.set_workers(1)
    res = run_experiment(cfg, h, gs, out, raise_errors=False)
    res.records = []  # keep the inter-process payload small; rows live in the CSV
    return res


def run_sweep(cfg: ExperimentConfig, out: str | Path | None = None, threads: int = 1,
              gs: GroundState | None = None, raise_insufficient: bool = True) -> SweepReport:
    """Run every configured h (in parallel processes when ``threads > 1``)."""
    hs = cfg.model.h
    if len(hs) < 3:
        raise InsufficientPoints(f"a sweep needs at least 3 h values, got {len(hs)}")
    check_assumptions(cfg)
    gs = ground_state(cfg) if gs is None else gs
    jobs = [(cfg, h, gs, out) for h in hs]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=min(threads, len(hs))) as ex:
            runs = list(ex.map(_sweep_worker, jobs))
    else:
        runs = [run_experiment(cfg, h, gs, out, raise_errors=False) for h in hs]
    report = assemble_report(runs, cfg)
    if out is not None:
        report.write(out)
    if raise_insufficient and len(report.valid_runs) < 3:
        raise InsufficientPoints(f"only {len(report.valid_runs)} valid runs in the sweep; need 3")
    return report


def boundedness_report(result: RunResult, params: ModelParams, grid_spacing: float):
    return boundedness_monitors(result.records, params, length_floor=grid_spacing)


def admissibility(cfg: ExperimentConfig, h: float, gs: GroundState):
    params = cfg.params(h)
    V = cfg.build_potential()
    spec = initial_spec(cfg, gs, params, V)
    psi0 = build_initial_datum(spec, cfg.build_grid())
    return validate_admissibility(psi0, spec, cfg.initial_data.K, V)
