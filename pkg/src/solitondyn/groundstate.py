"""Constrained ground states of ``J(u) = int |grad u|^2/2 + W(u)`` on ``||u|| = sigma``.

The solver is a normalized gradient flow: a descent step that treats the
Laplacian implicitly (a diagonal solve in Fourier space) and ``W'`` explicitly,
followed by projection back onto the L2 sphere.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import CollapseDetected, NoConvergence
from .grid import Grid
from .model import ModelParams, Nonlinearity, internal_energy, validate_nonlinearity
from .spectral import plan_for

log = logging.getLogger(__name__)

_UNIT = ModelParams(h=1.0, alpha=0.0, gamma=0.0, sigma=1.0)


@dataclass
class SolverOptions:
    """Knobs of the gradient flow.

    ``tau`` is the pseudo-time step of the semi-implicit update and is halved
    whenever a step would raise the energy. ``shift`` is added to the
    implicit operator; ``None`` picks ``max(-2*omega, 0.1)`` each iteration.
    """

    tau: float = 1.0
    max_iter: int = 100_000
    tol: float = 1e-8
    shift: float | None = None
    min_width_cells: float = 4.0
    energy_slack: float = 1e-12
    recenter: bool = True
    check_assumptions: bool = True
    record_history: bool = False


@dataclass
class GroundState:
    U: NDArray
    grid: Grid
    omega: float
    m: float
    sigma: float
    residual: float
    iterations: int = 0
    radial_center: tuple[float, ...] = ()
    history: list[tuple[float, float]] = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.radial_center:
            self.radial_center = (0.0,) * self.grid.dim

    @property
    def dim(self) -> int:
        return self.grid.dim


def l2_norm(f: NDArray, grid: Grid) -> float:
    return float(np.sqrt(grid.integrate(np.abs(f) ** 2)))


def energy(u: NDArray, grid: Grid, W: Nonlinearity) -> float:
    """The unscaled functional ``J`` (all exponents at ``h = 1``)."""
    return internal_energy(u, grid, _UNIT, W)


def lagrange_multiplier(U: NDArray, grid: Grid, W: Nonlinearity) -> float:
    """``omega = <U, -Lap U + W'(U)> / (2 ||U||^2)``; defined for any nonzero U."""
    plan = plan_for(grid)
    g = -plan.laplacian(U) + W.dW(np.abs(U)) * np.sign(U)
    return grid.integrate(U * g) / (2.0 * grid.integrate(U * U))


def stationarity_residual(U: NDArray, grid: Grid, W: Nonlinearity, omega: float | None = None) -> float:
    """``||-Lap U + W'(U) - 2 omega U|| / ||U||`` with a spectral Laplacian."""
    if omega is None:
        omega = lagrange_multiplier(U, grid, W)
    plan = plan_for(grid)
    r = -plan.laplacian(U) + W.dW(np.abs(U)) * np.sign(U) - 2.0 * omega * U
    return l2_norm(r, grid) / l2_norm(U, grid)


def fd_laplacian(U: NDArray, grid: Grid) -> NDArray:
    """Fourth-order centred finite-difference Laplacian (periodic)."""
    out = np.zeros_like(U)
    for axis, dx in enumerate(grid.spacing):
        r1 = np.roll(U, 1, axis) + np.roll(U, -1, axis)
        r2 = np.roll(U, 2, axis) + np.roll(U, -2, axis)
        out += (-r2 + 16.0 * r1 - 30.0 * U) / (12.0 * dx * dx)
    return out


def stationarity_residual_fd(U: NDArray, grid: Grid, W: Nonlinearity, omega: float) -> float:
    r = -fd_laplacian(U, grid) + W.dW(np.abs(U)) * np.sign(U) - 2.0 * omega * U
    return l2_norm(r, grid) / l2_norm(U, grid)


def rms_width(u: NDArray, grid: Grid) -> float:
    rho = u * u
    mass = float(np.sum(rho))
    var = 0.0
    for x in grid.coords:
        mean = float(np.sum(x * rho)) / mass
        var += float(np.sum((x - mean) ** 2 * rho)) / mass
    return float(np.sqrt(var))


def density_barycenter(u: NDArray, grid: Grid) -> NDArray:
    """Barycenter of ``u**2`` with the unpaired node at ``-L/2`` weighted as 0.

    That node is its own mirror image on the periodic grid, so giving it the
    mean of its two images keeps the barycenter of symmetric data exactly 0.
    """
    rho = u * u
    mass = float(np.sum(rho))
    out = []
    for x in grid.coords:
        xs = np.where(np.isclose(x, x.min()), 0.0, x) if x.size % 2 == 0 else x
        out.append(float(np.sum(np.broadcast_to(xs, grid.shape) * rho)) / mass)
    return np.array(out)


def radial_asymmetry(U: NDArray, grid: Grid) -> float:
    """Largest relative change of U under axis flips and (square grids) axis swaps."""
    scale = float(np.max(np.abs(U)))
    worst = 0.0
    for axis in range(grid.dim):
        # x -> -x maps node j to node (n - j) mod n
        flipped = np.roll(np.flip(U, axis), 1, axis)
        worst = max(worst, float(np.max(np.abs(U - flipped))) / scale)
    for i in range(grid.dim):
        for j in range(i + 1, grid.dim):
            if grid.points[i] == grid.points[j] and grid.extent[i] == grid.extent[j]:
                worst = max(worst, float(np.max(np.abs(U - np.swapaxes(U, i, j)))) / scale)
    return worst


def initial_guess(grid: Grid, sigma: float) -> NDArray:
    u = np.exp(-0.5 * grid.radius_squared)
    return u * (sigma / l2_norm(u, grid))


def minimize_on_sphere(W: Nonlinearity, sigma: float, grid: Grid,
                       opts: SolverOptions | None = None, initial: NDArray | None = None) -> GroundState:
    """Normalized gradient flow for the ground state of mass ``sigma**2``.

    Each iteration forms the constrained gradient ``r = -Lap u + W'(u) - 2 omega u``,
    takes the step ``u - tau (1 + tau (c - Lap))^{-1} r`` and rescales the
    result to norm ``sigma``. A step that would raise ``J`` is retried with
    half the step size, so the accepted energies never increase.
    """
    opts = opts or SolverOptions()
    if opts.check_assumptions:
        validate_nonlinearity(W, grid.dim, raise_on_fail=True)
    plan = plan_for(grid)
    k2 = plan.k2
    min_dx = min(grid.spacing)

    u = initial_guess(grid, sigma) if initial is None else np.array(initial, dtype=float)
    u *= sigma / l2_norm(u, grid)
    J = energy(u, grid, W)
    tau = float(opts.tau)
    history = [(J, np.nan)] if opts.record_history else []

    it = 0
    while True:
        lap = plan.laplacian(u)
        g = -lap + W.dW(np.abs(u)) * np.sign(u)
        omega = grid.integrate(u * g) / (2.0 * sigma**2)
        r = g - 2.0 * omega * u
        res = l2_norm(r, grid) / sigma
        if opts.record_history:
            history[-1] = (history[-1][0], res)
        if res <= opts.tol:
            break
        if it >= opts.max_iter:
            raise NoConvergence(f"ground state residual {res:.3e} above tol {opts.tol:.1e} "
                                f"after {it} iterations")
        c = max(-2.0 * omega, 0.1) if opts.shift is None else opts.shift
        R = plan.forward(r)
        while True:
            step = plan.inverse(R * (tau / (1.0 + tau * (c + k2)))).real
            cand = u - step
            cand *= sigma / l2_norm(cand, grid)
            J_new = energy(cand, grid, W)
            if J_new <= J + opts.energy_slack * max(1.0, abs(J)):
                break
            tau *= 0.5
            if tau < 1e-14:
                raise NoConvergence(f"step size underflow at iteration {it}, residual {res:.3e}")
        u, J = cand, J_new
        it += 1
        if opts.record_history:
            history.append((J, np.nan))
        width = rms_width(u, grid)
        if width < opts.min_width_cells * min_dx:
            raise CollapseDetected(
                f"iterate width {width:.3g} below {opts.min_width_cells:g} grid cells at iteration {it}; "
                f"the nonlinearity is probably mass-supercritical")

    if opts.recenter:
        shift = density_barycenter(u, grid)
        if np.max(np.abs(shift)) > 1e-6 * min_dx:
            u = plan.translate(u, -shift)
            u *= sigma / l2_norm(u, grid)
            J = energy(u, grid, W)
            omega = lagrange_multiplier(u, grid, W)
            res = stationarity_residual(u, grid, W, omega)
    log.info("ground state: %d iterations, residual %.2e, omega %.12g, m %.12g", it, res, omega, J)
    return GroundState(U=u, grid=grid, omega=float(omega), m=float(J), sigma=float(sigma),
                       residual=float(res), iterations=it, history=history)


@dataclass
class StraussReport:
    status: str  # "pass", "fail" or "skipped"
    envelope_max: float = float("nan")
    monotone: bool = False
    notice: str = ""
    radii: NDArray | None = field(default=None, repr=False)
    envelope: NDArray | None = field(default=None, repr=False)

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def check_strauss_decay(gs: GroundState, rel_tol: float = 1e-10) -> StraussReport:
    """Check that ``U(x) |x|^((N-1)/2)`` stays bounded and decays outwards.

    Samples run along the positive first axis from ``|x| = 1`` to ``0.8 L/2``;
    the monotonicity test looks at the outer half of that range.
    """
    grid = gs.grid
    N = grid.dim
    if N < 2:
        return StraussReport("skipped", notice="decay bound needs N >= 2; skipped for N = 1")
    x = grid.axes[0]
    r_max = 0.8 * grid.extent[0] / 2
    sel = (x >= 1.0) & (x <= r_max)
    idx = [grid.points[j] // 2 if j else slice(None) for j in range(N)]
    # the origin sits at index n/2 on each axis
    line = gs.U[tuple(idx)][sel]
    radii = x[sel]
    env = line * radii ** ((N - 1) / 2.0)
    finite = bool(np.all(np.isfinite(env)))
    outer = radii >= 0.5 * (1.0 + r_max)
    tail = env[outer]
    scale = float(np.max(np.abs(env))) if env.size else 0.0
    monotone = bool(np.all(np.diff(tail) <= rel_tol * scale)) if tail.size > 1 else False
    status = "pass" if finite and monotone and tail.size > 1 else "fail"
    return StraussReport(status, float(np.max(env)) if env.size else float("nan"), monotone,
                         radii=radii, envelope=env)
