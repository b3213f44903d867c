"""Measured quantities along a run: barycenter and its derivatives, energies,
concentration, the residual ``H_h`` and running bounds of the trajectory.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from numpy.typing import NDArray

from .errors import BoundaryMassExceeded
from .grid import Grid, WaveField
from .model import ModelParams, Nonlinearity, Potential, energy_parts
from .spectral import plan_for

DEFAULT_BOUNDARY_THRESHOLD = 1e-6


def boundary_mass(psi: WaveField, fraction: float = 0.1) -> float:
    """Charge fraction within ``fraction*L`` of the box boundary."""
    grid = psi.grid
    rho = psi.density
    return grid.integrate(rho[grid.outer_shell_mask(fraction)]) / grid.integrate(rho)


def _guard(psi: WaveField, threshold: float | None) -> float:
    ch = psi.charge()
    if not ch > 0:
        raise ValueError("field has zero charge")
    if threshold is not None:
        bm = boundary_mass(psi)
        if bm > threshold:
            raise BoundaryMassExceeded(
                f"boundary charge fraction {bm:.3e} exceeds {threshold:.1e}; "
                "the periodic barycenter is ambiguous", monitor="boundary_mass")
    return ch


def barycenter(psi: WaveField, threshold: float | None = DEFAULT_BOUNDARY_THRESHOLD) -> NDArray:
    """``sum x |psi|^2 / sum |psi|^2`` in box coordinates."""
    ch = _guard(psi, threshold)
    rho = psi.density
    g = psi.grid
    return np.array([g.integrate(x * rho) for x in g.coords]) / ch


def barycenter_velocity(psi: WaveField, h: float, threshold: float | None = DEFAULT_BOUNDARY_THRESHOLD) -> NDArray:
    """``Im(h sum conj(psi) grad psi) / charge`` with a spectral gradient."""
    ch = _guard(psi, threshold)
    g = psi.grid
    grads = plan_for(g).gradient(psi.values)
    conj = np.conj(psi.values)
    return np.array([h * g.integrate((conj * d).imag) for d in grads]) / ch


def ehrenfest_acceleration(psi: WaveField, V: Potential, grad_V: list[NDArray] | None = None,
                           threshold: float | None = DEFAULT_BOUNDARY_THRESHOLD) -> NDArray:
    """``-sum grad V |psi|^2 / charge``: the second time derivative of the barycenter."""
    ch = _guard(psi, threshold)
    g = psi.grid
    grad_V = V.gradient_on_grid(g) if grad_V is None else grad_V
    rho = psi.density
    return -np.array([g.integrate(dv * rho) for dv in grad_V]) / ch


def potential_force_moment(psi: WaveField, V: Potential, V_grid: NDArray | None = None) -> NDArray:
    """``sum V grad |psi|^2 / charge``; equals the Ehrenfest acceleration after
    integration by parts.
    """
    g = psi.grid
    Vg = V.on_grid(g) if V_grid is None else V_grid
    rho = psi.density
    return np.array([g.integrate(Vg * d) for d in plan_for(g).gradient(rho)]) / g.integrate(rho)


# ------------------------------------------------------------- concentration


def _min_image(d: NDArray, L: float) -> NDArray:
    return d - L * np.round(d / L)


def _ball_indicator(grid: Grid, center, radius: float) -> NDArray:
    r2 = np.zeros(grid.shape)
    for x, c, L in zip(grid.coords, center, grid.extent):
        r2 = r2 + _min_image(x - c, L) ** 2
    return r2 <= radius * radius


def concentration_point(psi: WaveField, radius: float) -> NDArray:
    """Grid point maximising the charge in the ball of the given radius.

    The ball sums come from one spectral convolution. Near-ties (within
    ``1e-12`` of the maximum) go to the candidate closest to the origin.
    """
    if not radius > 0:
        raise ValueError("radius must be positive")
    g = psi.grid
    plan = plan_for(g)
    ball = _ball_indicator(g, np.zeros(g.dim), radius)
    # move the ball centre (the origin, index n/2) to index 0 for the convolution
    ball = np.roll(ball, tuple(-(n // 2) for n in g.points), axis=tuple(range(g.dim)))
    sums = plan.inverse(plan.forward(psi.density) * plan.forward(ball.astype(float))).real
    top = float(np.max(sums))
    cand = np.argwhere(sums >= top - 1e-12 * abs(top))
    pts = np.array([[g.axes[j][i[j]] for j in range(g.dim)] for i in cand])
    return pts[int(np.argmin(np.sum(pts * pts, axis=1)))]


def concentration_fraction(psi: WaveField, q_hat, radius: float) -> float:
    """Charge outside the ball ``B(q_hat, radius)`` over the total charge."""
    if not radius > 0:
        raise ValueError("radius must be positive")
    g = psi.grid
    rho = psi.density
    inside = _ball_indicator(g, np.atleast_1d(np.asarray(q_hat, dtype=float)), radius)
    total = float(np.sum(rho))
    return float(max(0.0, total - float(np.sum(rho[inside]))) / total)


def calibrate_radius(psi: WaveField, eps: float, width: float, r_max: float | None = None,
                     tol: float = 1e-6) -> float:
    """Smallest ``R`` (to ``tol``) with concentration fraction ``<= eps`` at radius ``R * width``.

    Searched by bisection; the fraction is non-increasing in the radius up
    to the tie-breaking of the concentration point.
    """
    if not 0 < eps < 1:
        raise ValueError("eps must lie in (0, 1)")
    g = psi.grid
    if r_max is None:
        r_max = 0.5 * float(np.sqrt(sum(L * L for L in g.extent))) / width

    def frac(R):
        rad = R * width
        return concentration_fraction(psi, concentration_point(psi, rad), rad)

    lo, hi = 0.0, float(r_max)
    if frac(hi) > eps:
        raise ValueError("even the whole box misses the requested fraction")
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if mid > 0 and frac(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


# ------------------------------------------------------------- residual


@dataclass
class ResidualSplit:
    """``H = q'' + grad V(q)`` and an attribution of it.

    With ``q''`` the Ehrenfest acceleration, ``H = grad V(q) - <grad V>``,
    which splits as ``(grad V(q) - grad V(q_hat)) + (grad V(q_hat) - <grad V>)``:
    the first part measures barycenter vs. concentration point, the second the
    averaged-force mismatch around the concentration point.
    """

    H: NDArray
    position_part: NDArray
    averaging_part: NDArray


def residual_H(qddot, q, V: Potential, q_hat=None) -> ResidualSplit:
    qddot = np.asarray(qddot, dtype=float)
    gq = V.grad_at(q)
    H = qddot + gq
    if q_hat is None:
        nan = np.full_like(H, np.nan)
        return ResidualSplit(H, nan, nan)
    gh = V.grad_at(q_hat)
    return ResidualSplit(H, gq - gh, gh + qddot)


# ------------------------------------------------------------- records


@dataclass
class TrajectoryRecord:
    t: float
    q: NDArray
    qdot: NDArray
    qddot: NDArray
    H: NDArray
    H_position: NDArray
    H_averaging: NDArray
    charge: float
    E: float
    J: float
    G: float
    q_hat: NDArray
    conc_fraction: float
    boundary_mass: float
    potential_moment: float
    step: int = 0

    def as_dict(self) -> dict:
        return asdict(self)


class Recorder:
    """Builds a :class:`TrajectoryRecord` from a field snapshot.

    Caches the potential and its gradient on the grid; otherwise stateless,
    so one recorder per run is enough and snapshots may be measured in any
    order.
    """

    def __init__(self, grid: Grid, params: ModelParams, W: Nonlinearity, V: Potential,
                 conc_radius: float, boundary_threshold: float | None = None):
        self.grid, self.params, self.W, self.V = grid, params, W, V
        self.conc_radius = float(conc_radius)
        self.boundary_threshold = boundary_threshold
        self.V_grid = V.on_grid(grid)
        self.grad_V = V.gradient_on_grid(grid)

    def measure(self, psi: WaveField, step: int = 0) -> TrajectoryRecord:
        th = self.boundary_threshold
        q = barycenter(psi, th)
        qdot = barycenter_velocity(psi, self.params.h, th)
        qddot = ehrenfest_acceleration(psi, self.V, self.grad_V, th)
        q_hat = concentration_point(psi, self.conc_radius)
        split = residual_H(qddot, q, self.V, q_hat)
        E, J, G = energy_parts(psi, self.params, self.W, self.V, self.V_grid)
        rho = psi.density
        return TrajectoryRecord(
            t=psi.time, q=q, qdot=qdot, qddot=qddot, H=split.H,
            H_position=split.position_part, H_averaging=split.averaging_part,
            charge=psi.charge(), E=E, J=J, G=G, q_hat=q_hat,
            conc_fraction=concentration_fraction(psi, q_hat, self.conc_radius),
            boundary_mass=boundary_mass(psi),
            potential_moment=self.grid.integrate(self.V_grid * rho), step=step,
        )


# ------------------------------------------------------------- running bounds


@dataclass
class RunningBound:
    name: str
    maximum: float
    first_half_max: float
    initial: float
    growing: bool


@dataclass
class BoundednessReport:
    bounds: dict[str, RunningBound] = field(default_factory=dict)

    @property
    def growing(self) -> list[str]:
        return [k for k, b in self.bounds.items() if b.growing]


def _running_bound(name: str, t: NDArray, vals: NDArray, floor: float) -> RunningBound:
    half = t <= t[0] + 0.5 * (t[-1] - t[0])
    m_all = float(np.max(vals))
    m_half = float(np.max(vals[half]))
    v0 = float(vals[0])
    # unbounded growth doubles the excursion over the second half of the horizon
    excursion = m_all - v0
    growing = bool(excursion > floor and excursion >= 1.9 * (m_half - v0))
    return RunningBound(name, m_all, m_half, v0, growing)


def boundedness_monitors(records: list[TrajectoryRecord], params: ModelParams,
                         length_floor: float = 0.0) -> BoundednessReport:
    """Running maxima of quantities that should stay bounded along a trapped run.

    The potential moment is normalised by both ``h^(N beta - 2 alpha)`` and
    ``h^(N beta - 2 gamma)``. A quantity is flagged as growing when its
    excursion from the initial value roughly doubles over the final half of
    the run; ``length_floor`` suppresses flags on grid-scale jitter.
    """
    if len(records) < 2:
        raise ValueError("need at least two records")
    t = np.array([r.t for r in records])
    if t[-1] < t[0]:
        t = -t
    h, N, b = params.h, params.dim, params.beta
    pm = np.array([r.potential_moment for r in records])
    q = np.array([np.linalg.norm(r.q) for r in records])
    d = np.array([np.linalg.norm(r.q - r.q_hat) for r in records])
    rel = 1e-8 * max(1.0, float(np.max(np.abs(pm))))
    series = {
        "potential_moment_alpha": (pm / h ** (N * b - 2 * params.alpha), rel / h ** (N * b - 2 * params.alpha)),
        "potential_moment_gamma": (pm / h ** (N * b - 2 * params.gamma), rel / h ** (N * b - 2 * params.gamma)),
        "barycenter_norm": (q, length_floor),
        "barycenter_to_concentration": (d, length_floor),
    }
    return BoundednessReport({k: _running_bound(k, t, v, f) for k, (v, f) in series.items()})
