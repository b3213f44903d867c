"""h-scaled soliton initial data and the admissible-data check."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import BoundUnachievable, PhaseUnderResolved, TooCloseToBoundary
from .grid import Grid, WaveField
from .groundstate import GroundState, l2_norm
from .model import ModelParams, Potential, rescale_profile
from .spectral import plan_for


@dataclass
class PerturbationRecipe:
    """Smooth radial bump ``exp(-|x - offset|^2 / (2 width^2))``.

    ``amplitude_fraction`` is the target ``||w0||_H1`` as a fraction of the
    bound ``K h^(alpha - gamma)``. The bump is off-centre by default so that
    it is not parallel to ``U`` and survives the mass renormalisation.
    """

    width: float = 0.5
    offset: tuple[float, ...] = (0.5,)
    amplitude_fraction: float = 0.0


@dataclass
class InitialDatumSpec:
    q0: NDArray
    v: NDArray
    params: ModelParams
    ground_state: GroundState
    K: float = 1.0
    w0: NDArray | None = None
    boundary_margin: float = 0.1

    def __post_init__(self):
        dim = self.ground_state.grid.dim
        self.q0 = np.broadcast_to(np.asarray(self.q0, dtype=float), (dim,)).copy()
        self.v = np.broadcast_to(np.asarray(self.v, dtype=float), (dim,)).copy()
        if self.w0 is not None:
            self.w0 = np.asarray(self.w0, dtype=float)
            if self.w0.shape != self.ground_state.U.shape:
                raise ValueError("w0 must live on the ground-state grid")

    @property
    def profile(self) -> NDArray:
        U = self.ground_state.U
        return U if self.w0 is None else U + self.w0


def h1_norm(f: NDArray, grid: Grid) -> float:
    plan = plan_for(grid)
    return float(np.sqrt(grid.integrate(np.abs(f) ** 2) + plan.gradient_energy(f)))


def _bump(grid: Grid, recipe: PerturbationRecipe) -> NDArray:
    off = np.broadcast_to(np.asarray(recipe.offset, dtype=float), (grid.dim,))
    r2 = 0.0
    for x, o in zip(grid.coords, off):
        r2 = r2 + (x - o) ** 2
    return np.exp(-0.5 * r2 / recipe.width**2)


def _renormalised(U: NDArray, bump: NDArray, amp: float, sigma: float, grid: Grid) -> NDArray:
    prof = U + amp * bump
    return prof * (sigma / l2_norm(prof, grid)) - U


def make_perturbation(recipe: PerturbationRecipe, ground_state: GroundState, params: ModelParams,
                      K: float, V: Potential | None = None, *, strict: bool = True) -> NDArray:
    """Build ``w0`` on the ground-state grid with ``||U + w0|| = sigma``.

    The bump amplitude is solved for so that ``||w0||_H1`` equals the requested
    fraction of ``K h^(alpha-gamma)``. With ``strict`` the result must also
    satisfy the H1 bound and ``int V |w0|^2 <= K h^(alpha-gamma)``, otherwise
    :class:`BoundUnachievable` is raised.
    """
    gs = ground_state
    grid = gs.grid
    U = gs.U
    frac = float(recipe.amplitude_fraction)
    if frac == 0.0:
        return np.zeros_like(U)
    bound = K * params.h ** (params.alpha - params.gamma)
    target = frac * bound
    bump = _bump(grid, recipe)

    def norm_at(a):
        return h1_norm(_renormalised(U, bump, a, gs.sigma, grid), grid)

    hi = target / max(h1_norm(bump, grid), 1e-300)
    grow = 0
    while norm_at(hi) < target:
        hi *= 2.0
        grow += 1
        if grow > 60:
            raise BoundUnachievable("bump recipe cannot reach the requested H1 size")
    lo = 0.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if norm_at(mid) < target:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-15 * hi:
            break
    w0 = _renormalised(U, bump, 0.5 * (lo + hi), gs.sigma, grid)
    if strict:
        if h1_norm(w0, grid) > bound:
            raise BoundUnachievable(
                f"||w0||_H1 = {h1_norm(w0, grid):.3g} exceeds K h^(alpha-gamma) = {bound:.3g}; "
                "shrink the amplitude fraction")
        if V is not None:
            moment = grid.integrate(V.on_grid(grid) * w0 * w0)
            if moment > bound:
                raise BoundUnachievable(
                    f"int V |w0|^2 = {moment:.3g} exceeds K h^(alpha-gamma) = {bound:.3g}")
    return w0


def _check_placement(spec: InitialDatumSpec, grid: Grid) -> None:
    for j, (q, L) in enumerate(zip(spec.q0, grid.extent)):
        if abs(q) > L / 2 - spec.boundary_margin * L:
            raise TooCloseToBoundary(
                f"q0[{j}] = {q:g} lies within {spec.boundary_margin:g} L of the box boundary (L = {L:g})")
    h = spec.params.h
    for j, (vj, dx) in enumerate(zip(spec.v, grid.spacing)):
        if vj != 0.0:
            wavelength = 2 * np.pi * h / abs(vj)
            if wavelength / dx < 8:
                raise PhaseUnderResolved(
                    f"phase wavelength 2 pi h/|v| = {wavelength:.3g} spans {wavelength / dx:.2f} points on axis {j} (< 8)")


def _plane_phase(grid: Grid, v: NDArray, h: float) -> NDArray:
    phase = 0.0
    for x, vj in zip(grid.coords, v):
        phase = phase + vj * x
    return np.broadcast_to(np.exp(1j * np.asarray(phase) / h), grid.shape)


def build_initial_datum(spec: InitialDatumSpec, grid: Grid) -> WaveField:
    """``psi(0, x) = h^-gamma (U + w0)((x - q0)/h^beta) exp(i v.x / h)``."""
    _check_placement(spec, grid)
    u = rescale_profile(spec.profile, spec.ground_state.grid, spec.params, grid, center=spec.q0)
    return WaveField(grid, u * _plane_phase(grid, spec.v, spec.params.h), 0.0)


def soliton_energy(spec: InitialDatumSpec) -> float:
    """``E = |v|^2/2 + omega / h^(alpha - gamma)``."""
    p = spec.params
    return 0.5 * float(spec.v @ spec.v) + spec.ground_state.omega / p.h ** (p.alpha - p.gamma)


def exact_free_soliton(spec: InitialDatumSpec, t: float, grid: Grid) -> WaveField:
    """Travelling soliton solving the V = 0 problem exactly for unperturbed data."""
    p = spec.params
    center = spec.q0 + spec.v * t
    _check_placement(InitialDatumSpec(center, spec.v, p, spec.ground_state, spec.K,
                                      boundary_margin=spec.boundary_margin), grid)
    u = rescale_profile(spec.ground_state.U, spec.ground_state.grid, p, grid, center=center)
    phase = _plane_phase(grid, spec.v, p.h) * np.exp(-1j * soliton_energy(spec) * t / p.h)
    return WaveField(grid, u * phase, float(t))


@dataclass
class AdmissibilityReport:
    """Per-condition verdicts for membership in the admissible set.

    ``in_set`` combines the four conditions that define the set. The
    ``potential_moment_w0`` entry is the smallness condition stated for the
    perturbation itself, with bound ``K h^(alpha-gamma)``; its exponent
    differs from the set's ``h^(N beta - 2 alpha)``, so both are kept.
    """

    conditions: dict[str, bool]
    values: dict[str, float]
    bounds: dict[str, float]
    notes: list[str] = field(default_factory=list)

    SET_CONDITIONS = ("mass_equality", "h1_bound", "phase_gradient", "potential_moment")

    @property
    def in_set(self) -> bool:
        return all(self.conditions[k] for k in self.SET_CONDITIONS)

    def failed(self) -> list[str]:
        return [k for k, ok in self.conditions.items() if not ok]


def validate_admissibility(psi0: WaveField, spec: InitialDatumSpec, K: float,
                           V: Potential, mass_rtol: float = 1e-10) -> AdmissibilityReport:
    gs = spec.ground_state
    p = spec.params
    ref = gs.grid
    w0 = np.zeros_like(gs.U) if spec.w0 is None else spec.w0
    mass = l2_norm(gs.U + w0, ref)
    h1 = h1_norm(w0, ref)
    h1_bound = K * p.h ** (p.alpha - p.gamma)
    # S = v.x, so the sup of the phase gradient is |v|
    grad_s = float(np.linalg.norm(spec.v))
    moment = psi0.grid.integrate(V.on_grid(psi0.grid) * psi0.density)
    moment_bound = K * p.h ** (p.dim * p.beta - 2 * p.alpha)
    w0_moment = ref.integrate(V.on_grid(ref) * w0 * w0)
    conditions = {
        "mass_equality": abs(mass - gs.sigma) <= mass_rtol * gs.sigma,
        "h1_bound": h1 <= h1_bound,
        "phase_gradient": grad_s <= K,
        "potential_moment": moment <= moment_bound,
        "potential_moment_w0": w0_moment <= h1_bound,
    }
    values = {"mass": mass, "h1": h1, "phase_gradient": grad_s,
              "potential_moment": moment, "potential_moment_w0": w0_moment}
    bounds = {"mass": gs.sigma, "h1": h1_bound, "phase_gradient": K,
              "potential_moment": moment_bound, "potential_moment_w0": h1_bound}
    notes = ["potential moment of u_h is bounded by K h^(N beta - 2 alpha); "
             "the perturbation moment int V |w0|^2 by K h^(alpha - gamma)"]
    return AdmissibilityReport(conditions, values, bounds, notes)
