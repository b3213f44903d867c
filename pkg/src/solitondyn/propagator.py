"""Strang-split time stepping with conservation and boundary monitors.

The potential-plus-nonlinear flow only rotates the phase pointwise (the
modulus is invariant under it), so it is integrated exactly; the kinetic
flow is exact in Fourier space. Adjacent potential half-steps are fused
into one full step, which is exact for the same reason.
"""

from __future__ import annotations

import copy
import logging
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.fft as sfft
from numpy.typing import NDArray

from . import spectral
from .errors import (BlowupDetected, BoundaryMassExceeded, ChargeDrift, EnergyDrift,
                     SpectralTailExceeded)
from .grid import WaveField
from .model import ModelParams, Nonlinearity, Potential, energy_parts
from .spectral import plan_for

log = logging.getLogger(__name__)

MAX_PHASE_PER_SUBSTEP = 0.5


@dataclass(frozen=True)
class MonitorThresholds:
    """Run-time guards; all relative to the initial state.

    ``energy_drift`` is measured as ``|E - E0| / (|J0| + |G0|)`` because the
    total energy itself can be close to zero.
    """

    charge_drift: float = 1e-8
    energy_drift: float = 1e-4
    boundary_mass: float = 1e-6
    spectral_tail: float = 1e-8
    blowup_factor: float = 10.0
    shell_fraction: float = 0.1


@dataclass
class MonitorSnapshot:
    step: int
    time: float
    charge: float
    charge_drift: float
    energy: float
    internal: float
    dynamical: float
    energy_drift: float
    boundary_mass: float
    spectral_tail: float
    max_modulus: float


@dataclass
class PropagatorState:
    psi: WaveField
    params: ModelParams
    W: Nonlinearity
    V: Potential
    dt: float
    thresholds: MonitorThresholds = field(default_factory=MonitorThresholds)
    dealias: bool = False
    step: int = 0
    charge0: float = float("nan")
    energy0: float = float("nan")
    energy_scale: float = float("nan")
    max_modulus0: float = float("nan")

    def __post_init__(self):
        if not self.dt or not math.isfinite(self.dt):
            raise ValueError("dt must be finite and nonzero")
        if self.psi.grid.dim != self.params.dim:
            raise ValueError("field and model dimensions differ")
        self._V_grid = self.V.on_grid(self.psi.grid)
        if math.isnan(self.charge0):
            self.reset_monitors()

    def reset_monitors(self) -> None:
        """Take the current field as the reference for all drift monitors."""
        E, J, G = energy_parts(self.psi, self.params, self.W, self.V, self._V_grid)
        self.charge0 = self.psi.charge()
        self.energy0 = E
        self.energy_scale = abs(J) + abs(G)
        self.max_modulus0 = float(np.max(self.psi.modulus))

    @property
    def V_grid(self) -> NDArray:
        return self._V_grid

    @property
    def time(self) -> float:
        return self.psi.time

    def reversed(self) -> "PropagatorState":
        """Same state and monitors, stepping backwards in time."""
        out = copy.copy(self)
        out.psi = self.psi.copy()
        out.dt = -self.dt
        return out


def phase_rate(psi_values: NDArray, V_grid: NDArray, params: ModelParams, W: Nonlinearity) -> NDArray:
    """``V + (1/(2 h^alpha)) W'(h^gamma |psi|) / |psi|``, zero nonlinear part where ``psi = 0``."""
    h, a, g = params.h, params.alpha, params.gamma
    s2 = psi_values.real**2 + psi_values.imag**2
    # W'(h^g r)/r = h^g * (W'(s)/s) at s = h^g r
    nl = W.dW_over_s_sq(h ** (2 * g) * s2)
    return V_grid + (0.5 * h ** (g - a)) * nl


def _apply_phase(values: NDArray, rate: NDArray, tau: float, h: float) -> None:
    ang = (-tau / h) * rate
    values *= np.cos(ang) + 1j * np.sin(ang)


def _apply_kinetic(values: NDArray, factor: NDArray) -> NDArray:
    workers = spectral._WORKERS
    F = sfft.fftn(values, workers=workers, overwrite_x=True)
    F *= factor
    return sfft.ifftn(F, workers=workers, overwrite_x=True)


def step_strang(state: PropagatorState) -> PropagatorState:
    """One full Strang step: half phase, full kinetic, half phase."""
    return advance(state, 1)


def advance(state: PropagatorState, nsteps: int) -> PropagatorState:
    """``nsteps`` Strang steps with the interior phase half-steps fused.

    Returns a new state; the input state is not modified.
    """
    if nsteps < 0:
        raise ValueError("nsteps must be non-negative")
    psi = state.psi
    out = copy.copy(state)
    out.psi = psi.copy()
    if nsteps == 0:
        return out
    p = state.params
    h, dt = p.h, state.dt
    plan = plan_for(psi.grid, state.dealias)
    factor = plan.kinetic_factor(dt, h)
    vals = out.psi.values
    _apply_phase(vals, phase_rate(vals, state.V_grid, p, state.W), 0.5 * dt, h)
    for i in range(nsteps):
        vals = _apply_kinetic(vals, factor)
        tau = dt if i < nsteps - 1 else 0.5 * dt
        _apply_phase(vals, phase_rate(vals, state.V_grid, p, state.W), tau, h)
    out.psi = WaveField(psi.grid, vals, psi.time + nsteps * dt)
    out.step = state.step + nsteps
    return out


def default_dt(psi: WaveField, params: ModelParams, W: Nonlinearity, V: Potential,
               max_phase: float = MAX_PHASE_PER_SUBSTEP) -> float:
    """Largest dt keeping every per-substep phase increment below ``max_phase`` radians.

    Both the potential-plus-nonlinear rate ``max|rate| dt/h`` and the kinetic
    rotation ``h k_max^2 dt / 2`` of the highest mode are bounded.
    """
    plan = plan_for(psi.grid)
    rate = float(np.max(np.abs(phase_rate(psi.values, V.on_grid(psi.grid), params, W))))
    k2max = float(np.max(plan.k2))
    limits = [max_phase * params.h / rate if rate > 0 else math.inf,
              2.0 * max_phase / (params.h * k2max)]
    return min(limits)


def inspect(state: PropagatorState) -> MonitorSnapshot:
    psi = state.psi
    grid = psi.grid
    th = state.thresholds
    ch = psi.charge()
    E, J, G = energy_parts(psi, state.params, state.W, state.V, state.V_grid)
    rho = psi.density
    shell = grid.integrate(rho[grid.outer_shell_mask(th.shell_fraction)]) / ch
    tail = plan_for(grid).top_octave_fraction(psi.values)
    return MonitorSnapshot(
        step=state.step, time=psi.time, charge=ch,
        charge_drift=abs(ch - state.charge0) / state.charge0,
        energy=E, internal=J, dynamical=G,
        energy_drift=abs(E - state.energy0) / state.energy_scale,
        boundary_mass=shell, spectral_tail=tail,
        max_modulus=float(np.sqrt(np.max(rho))),
    )


def check_monitors(state: PropagatorState) -> MonitorSnapshot:
    """Inspect the state and raise the first monitor that trips."""
    snap = inspect(state)
    th = state.thresholds
    s, t = snap.step, snap.time
    if snap.max_modulus > th.blowup_factor * state.max_modulus0 or not math.isfinite(snap.max_modulus):
        raise BlowupDetected(
            f"max |psi| = {snap.max_modulus:.4g} grew beyond {th.blowup_factor:g}x its initial value "
            f"at step {s} (t = {t:.6g})", step=s, monitor="blowup")
    if snap.charge_drift > th.charge_drift:
        raise ChargeDrift(f"relative charge drift {snap.charge_drift:.3e} > {th.charge_drift:.1e} "
                          f"at step {s} (t = {t:.6g})", step=s, monitor="charge")
    if snap.boundary_mass > th.boundary_mass:
        raise BoundaryMassExceeded(
            f"charge fraction {snap.boundary_mass:.3e} in the outer {th.shell_fraction:g} shell exceeds "
            f"{th.boundary_mass:.1e} at step {s} (t = {t:.6g}); enlarge the box", step=s, monitor="boundary_mass")
    if snap.spectral_tail > th.spectral_tail:
        raise SpectralTailExceeded(
            f"top-octave spectral mass {snap.spectral_tail:.3e} > {th.spectral_tail:.1e} at step {s} "
            f"(t = {t:.6g}); refine the grid", step=s, monitor="spectral_tail")
    if snap.energy_drift > th.energy_drift:
        raise EnergyDrift(f"relative energy drift {snap.energy_drift:.3e} > {th.energy_drift:.1e} "
                          f"at step {s} (t = {t:.6g}); reduce dt", step=s, monitor="energy")
    return snap


Sink = Callable[[PropagatorState, MonitorSnapshot], None]


def step_count(T: float, dt: float) -> int:
    """``ceil(T/|dt|)`` with a guard against roundoff in ``T/dt``."""
    return max(1, math.ceil(abs(T) / abs(dt) - 1e-9))


def evolve(state: PropagatorState, T: float, sample_stride: int = 1, sink: Sink | None = None,
           *, checkpoint: Callable[[PropagatorState], None] | None = None,
           checkpoint_every: int = 0, monitor: bool = True) -> PropagatorState:
    """Advance by ``ceil(T/|dt|)`` steps in the direction of ``dt``.

    The sink sees the state at step 0 and after every ``sample_stride``
    steps (and at the final step). Monitors run at the same instants and
    raise with the step index at which they tripped.
    """
    if not T > 0:
        raise ValueError("T must be positive")
    if sample_stride < 1:
        raise ValueError("sample_stride must be >= 1")
    total = state.step + step_count(T, state.dt)
    return evolve_to_step(state, total, sample_stride, sink, checkpoint=checkpoint,
                          checkpoint_every=checkpoint_every, monitor=monitor)


def evolve_to_step(state: PropagatorState, final_step: int, sample_stride: int = 1,
                   sink: Sink | None = None, *, checkpoint: Callable[[PropagatorState], None] | None = None,
                   checkpoint_every: int = 0, monitor: bool = True) -> PropagatorState:
    """Advance until ``state.step == final_step``; sampling is aligned to multiples of the stride."""
    cur = state

    def visit(st):
        snap = check_monitors(st) if monitor else inspect(st)
        if sink is not None:
            sink(st, snap)

    visit(cur)
    while cur.step < final_step:
        nxt = (cur.step // sample_stride + 1) * sample_stride
        if checkpoint_every:
            nxt = min(nxt, (cur.step // checkpoint_every + 1) * checkpoint_every)
        nxt = min(nxt, final_step)
        cur = advance(cur, nxt - cur.step)
        if cur.step % sample_stride == 0 or cur.step == final_step:
            visit(cur)
        if checkpoint is not None and checkpoint_every and cur.step % checkpoint_every == 0:
            checkpoint(cur)
    log.debug("evolved to step %d, t = %.6g", cur.step, cur.time)
    return cur
