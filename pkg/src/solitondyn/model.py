"""Scaling parameters, nonlinearity and potential contracts, energies.

The evolution problem is

    i h psi_t = -(h^2/2) Lap psi + (1/(2 h^alpha)) W'(h^gamma |psi|) psi/|psi| + V psi

with ``beta = 1 + (alpha - gamma)/2`` tying the width scale of the soliton to
its amplitude scale.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray

from .errors import AssumptionViolation, UnderResolved
from .grid import Grid, WaveField
from .spectral import interpolate, plan_for

ZERO_TOL = 1e-12
MIN_POINTS_PER_WIDTH = 8


def derive_beta(alpha: float, gamma: float) -> float:
    return 1.0 + (alpha - gamma) / 2.0


@dataclass(frozen=True)
class ModelParams:
    h: float
    alpha: float
    gamma: float
    sigma: float
    dim: int = 1

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be positive")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if int(self.dim) < 1:
            raise ValueError("dim must be >= 1")

    @property
    def beta(self) -> float:
        return derive_beta(self.alpha, self.gamma)

    @property
    def semiclassical_regime(self) -> bool:
        return self.alpha > self.gamma

    @property
    def width(self) -> float:
        """Length scale ``h**beta`` of the rescaled soliton core."""
        return self.h**self.beta

    @property
    def charge_exponent(self) -> float:
        return self.dim * self.beta - 2 * self.gamma

    @property
    def energy_exponent(self) -> float:
        return self.dim * self.beta - self.alpha - self.gamma

    def with_h(self, h: float) -> "ModelParams":
        return dataclasses.replace(self, h=h)


@dataclass
class Check:
    """Outcome of one assumption probe."""

    name: str
    passed: bool
    detail: str = ""

    def __bool__(self) -> bool:
        return self.passed


def _raise_failed(checks: Sequence[Check], what: str) -> None:
    failed = [c for c in checks if not c.passed]
    if failed:
        names = ", ".join(f"({c.name})" for c in failed)
        details = "; ".join(f"{c.name}: {c.detail}" for c in failed)
        raise AssumptionViolation(f"{what} violates {names}: {details}")


# ---------------------------------------------------------------- nonlinearity


class Nonlinearity:
    """Local nonlinearity ``W`` acting on the modulus ``s >= 0``.

    Subclasses implement ``W``, ``dW`` and ``d2W``. The metadata records the
    growth exponents ``(q, p)``, the lower-bound exponent ``nu`` and a point
    ``s0`` where ``W`` is negative. The constants ``c1, c2, c`` are stored but
    never used by any computation.
    """

    name = "custom"

    def __init__(self, q: float, p: float, nu: float, s0: float,
                 c1: float | None = None, c2: float | None = None, c: float | None = None):
        self.q, self.p, self.nu, self.s0 = float(q), float(p), float(nu), float(s0)
        self.c1, self.c2, self.c = c1, c2, c

    def W(self, s):
        raise NotImplementedError

    def dW(self, s):
        raise NotImplementedError

    def d2W(self, s):
        raise NotImplementedError

    def dW_over_s(self, s: NDArray) -> NDArray:
        """``W'(s)/s`` with the ``s -> 0`` limit (zero under W0) at ``s = 0``."""
        s = np.asarray(s, dtype=float)
        safe = np.maximum(s, 1e-300)
        return np.where(s > 0, self.dW(safe) / safe, 0.0)

    def dW_over_s_sq(self, s2: NDArray) -> NDArray:
        """Same as :meth:`dW_over_s` but fed the squared modulus."""
        return self.dW_over_s(np.sqrt(s2))

    def params(self) -> dict:
        return {"name": self.name}


class PowerNonlinearity(Nonlinearity):
    """Focusing power law ``W(s) = -s**p / p``."""

    name = "power"

    def __init__(self, p: float = 4.0):
        p = float(p)
        super().__init__(q=p, p=p, nu=p, s0=1.0, c1=p - 1.0, c2=0.0, c=1.0 / p)
        self.power = p

    def W(self, s):
        return -np.power(s, self.power) / self.power

    def dW(self, s):
        return -np.power(s, self.power - 1.0)

    def d2W(self, s):
        return -(self.power - 1.0) * np.power(s, self.power - 2.0)

    def dW_over_s(self, s):
        return -np.power(np.asarray(s, dtype=float), self.power - 2.0)

    def dW_over_s_sq(self, s2):
        e = 0.5 * (self.power - 2.0)
        if e == 1.0:
            return -np.asarray(s2, dtype=float)
        return -np.power(s2, e)

    def params(self) -> dict:
        return {"name": self.name, "p": self.power}


class ShiftedQuartic(Nonlinearity):
    """``W(s) = s**2/2 - s**4/4``: a mass term at the origin, so W0 fails.

    Shipped only as a negative control for the assumption validators.
    """

    name = "broken_w0"

    def __init__(self):
        super().__init__(q=4.0, p=4.0, nu=4.0, s0=2.0)

    def W(self, s):
        s = np.asarray(s, dtype=float)
        return 0.5 * s**2 - 0.25 * s**4

    def dW(self, s):
        s = np.asarray(s, dtype=float)
        return s - s**3

    def d2W(self, s):
        s = np.asarray(s, dtype=float)
        return 1.0 - 3.0 * s**2

    def dW_over_s(self, s):
        s = np.asarray(s, dtype=float)
        return 1.0 - s**2


def validate_nonlinearity(W: Nonlinearity, dim: int, *, raise_on_fail: bool = False) -> list[Check]:
    at0 = [float(W.W(0.0)), float(W.dW(0.0)), float(W.d2W(0.0))]
    checks = [
        Check("W0", all(abs(v) <= ZERO_TOL for v in at0),
              f"W(0), W'(0), W''(0) = {at0[0]:.3g}, {at0[1]:.3g}, {at0[2]:.3g}"),
    ]
    crit = np.inf if dim <= 2 else 2.0 * dim / (dim - 2.0)
    checks.append(Check("W1", 2.0 < W.q <= W.p < crit,
                        f"need 2 < q <= p < 2* = {crit:g}, got q={W.q:g}, p={W.p:g}"))
    ok_nu = 2.0 < W.nu < 2.0 + 4.0 / dim
    detail = f"need 2 < nu < {2 + 4 / dim:g}, got nu={W.nu:g}"
    if ok_nu and W.c is not None:
        s = np.geomspace(1.0, 1e3, 64)
        lower = -W.c * s**W.nu
        ok_nu = bool(np.all(W.W(s) >= lower - 1e-12 * np.abs(lower)))
        if not ok_nu:
            detail += "; sampled W(s) >= -c s^nu fails"
    checks.append(Check("W2", ok_nu, detail))
    w_s0 = float(W.W(W.s0))
    checks.append(Check("W3", w_s0 < 0.0, f"W(s0={W.s0:g}) = {w_s0:.3g}"))
    if raise_on_fail:
        _raise_failed(checks, f"nonlinearity '{W.name}'")
    return checks


# ------------------------------------------------------------------- potential


class Potential:
    """External potential with the large-|x| metadata ``R1``, ``a``, ``b``.

    ``value`` and ``gradient`` take one coordinate array per axis; the arrays
    only need to broadcast against each other. A constant ``offset`` may be
    added; it changes the solution by a global phase only.
    """

    name = "custom"

    def __init__(self, R1: float, a: float, b: float, offset: float = 0.0):
        self.R1, self.a, self.b, self.offset = float(R1), float(a), float(b), float(offset)

    def _value(self, coords):
        raise NotImplementedError

    def _gradient(self, coords):
        raise NotImplementedError

    def value(self, *coords) -> NDArray:
        return self._value(coords) + self.offset

    def gradient(self, *coords) -> list[NDArray]:
        return list(self._gradient(coords))

    def at(self, point) -> float:
        return float(self.value(*np.atleast_1d(np.asarray(point, dtype=float))))

    def grad_at(self, point) -> NDArray:
        pt = np.atleast_1d(np.asarray(point, dtype=float))
        return np.array([float(np.broadcast_to(g, ())) for g in self.gradient(*pt)])

    def on_grid(self, grid: Grid) -> NDArray:
        return np.broadcast_to(self.value(*grid.coords), grid.shape).copy()

    def gradient_on_grid(self, grid: Grid) -> list[NDArray]:
        return [np.broadcast_to(g, grid.shape).copy() for g in self.gradient(*grid.coords)]

    def params(self) -> dict:
        return {"name": self.name}


def _r2(coords):
    r2 = 0.0
    for x in coords:
        r2 = r2 + np.asarray(x, dtype=float) ** 2
    return r2


def _radial_threshold(Vr, dVr, a: float, b: float, r_max: float = 1e4) -> float:
    """Smallest radius beyond which the radial profile meets V1 and V2."""
    r = np.geomspace(1.0 + 1e-9, r_max, 200001)
    v = Vr(r)
    ok = (np.abs(dVr(r)) <= np.maximum(v, 0.0) ** b) & (v >= r**a)
    if ok.all():
        return 1.0 + 1e-9
    last_bad = np.nonzero(~ok)[0].max()
    if last_bad == r.size - 1:
        return float("inf")
    return float(r[last_bad + 1])


class ZeroPotential(Potential):
    name = "zero"

    def __init__(self, offset: float = 0.0):
        super().__init__(R1=2.0, a=2.0, b=0.5, offset=offset)

    def _value(self, coords):
        return np.zeros(np.broadcast(*coords).shape) if coords else 0.0

    def _gradient(self, coords):
        shape = np.broadcast(*coords).shape
        return [np.zeros(shape) for _ in coords]


class HarmonicPotential(Potential):
    """``V = (kappa/2) |x|^2``."""

    name = "harmonic"

    def __init__(self, kappa: float = 1.0, offset: float = 0.0,
                 a: float = 1.5, b: float = 0.75, R1: float | None = None):
        self.kappa = float(kappa)
        if R1 is None:
            R1 = _radial_threshold(lambda r: 0.5 * self.kappa * r**2, lambda r: self.kappa * r, a, b)
        super().__init__(R1=R1, a=a, b=b, offset=offset)

    def _value(self, coords):
        return 0.5 * self.kappa * _r2(coords)

    def _gradient(self, coords):
        shape = np.broadcast(*coords).shape
        return [np.broadcast_to(self.kappa * np.asarray(x, dtype=float), shape) for x in coords]

    def params(self) -> dict:
        return {"name": self.name, "kappa": self.kappa}


class QuarticPotential(Potential):
    """``V = c2 |x|^2 + c4 |x|^4``: quartic growth, nonzero third derivative."""

    name = "quartic"

    def __init__(self, c2: float = 0.5, c4: float = 0.05, offset: float = 0.0,
                 a: float = 1.5, b: float = 0.95, R1: float | None = None):
        self.c2, self.c4 = float(c2), float(c4)
        if R1 is None:
            R1 = _radial_threshold(lambda r: self.c2 * r**2 + self.c4 * r**4,
                                   lambda r: 2 * self.c2 * r + 4 * self.c4 * r**3, a, b)
        super().__init__(R1=R1, a=a, b=b, offset=offset)

    def _value(self, coords):
        r2 = _r2(coords)
        return self.c2 * r2 + self.c4 * r2 * r2

    def _gradient(self, coords):
        r2 = _r2(coords)
        fac = 2 * self.c2 + 4 * self.c4 * r2
        shape = np.broadcast(*coords).shape
        return [np.broadcast_to(fac * np.asarray(x, dtype=float), shape) for x in coords]

    def params(self) -> dict:
        return {"name": self.name, "c2": self.c2, "c4": self.c4}


def _probe_points(dim: int, R1: float, r_max: float, n_radii: int = 64, seed: int = 0) -> NDArray:
    if dim == 1:
        dirs = np.array([[1.0], [-1.0]])
    else:
        rng = np.random.default_rng(seed)
        rand = rng.normal(size=(16, dim))
        rand /= np.linalg.norm(rand, axis=1, keepdims=True)
        eye = np.eye(dim)
        dirs = np.vstack([eye, -eye, rand])
    radii = np.geomspace(R1 * (1 + 1e-9), max(r_max, 10 * R1), n_radii)
    return (radii[:, None, None] * dirs[None, :, :]).reshape(-1, dim)


def validate_potential(V: Potential, grid: Grid, *, raise_on_fail: bool = False,
                       fd_probes: int = 32, seed: int = 0) -> list[Check]:
    """Sampled probes of V0, V1, V2 and of the analytic gradient.

    V1 and V2 are asymptotic statements, so besides the grid nodes beyond
    ``R1`` the probes include radial rays reaching well past the box.
    """
    dim = grid.dim
    checks = []
    checks.append(Check("meta", V.R1 > 1.0 and 0.0 < V.b < 1.0 and V.a > 1.0,
                        f"need R1 > 1, b in (0,1), a > 1; got R1={V.R1:g}, b={V.b:g}, a={V.a:g}"))
    vg = V.on_grid(grid)
    checks.append(Check("V0", bool(np.all(vg >= 0.0)), f"min V on grid = {vg.min():.3g}"))

    half_diag = 0.5 * float(np.sqrt(sum(L * L for L in grid.extent)))
    pts = _probe_points(dim, V.R1, 4 * half_diag) if np.isfinite(V.R1) else np.zeros((0, dim))
    r_grid = np.sqrt(grid.radius_squared)
    outside = r_grid > V.R1
    grid_pts = np.stack([np.broadcast_to(x, grid.shape)[outside] for x in grid.coords], axis=1)
    pts = np.vstack([grid_pts, pts])
    if pts.shape[0] == 0:
        checks.append(Check("V1", False, "no probe points beyond R1"))
        checks.append(Check("V2", False, "no probe points beyond R1"))
    else:
        cols = [pts[:, j] for j in range(dim)]
        v = np.broadcast_to(V.value(*cols), (pts.shape[0],))
        g = np.stack([np.broadcast_to(gj, (pts.shape[0],)) for gj in V.gradient(*cols)], axis=1)
        gnorm = np.linalg.norm(g, axis=1)
        r = np.linalg.norm(pts, axis=1)
        bad1 = gnorm > np.maximum(v, 0.0) ** V.b
        bad2 = v < r**V.a
        checks.append(Check("V1", not bad1.any(),
                            f"|grad V| <= V^b fails at {int(bad1.sum())} of {bad1.size} probes"
                            + (f", e.g. |x|={r[bad1][0]:.3g}" if bad1.any() else "")))
        checks.append(Check("V2", not bad2.any(),
                            f"V >= |x|^a fails at {int(bad2.sum())} of {bad2.size} probes"
                            + (f", e.g. |x|={r[bad2][0]:.3g}" if bad2.any() else "")))

    rng = np.random.default_rng(seed)
    lo = np.array([-0.45 * L for L in grid.extent])
    probes = rng.uniform(lo, -lo, size=(fd_probes, dim))
    worst = 0.0
    for p in probes:
        step = 1e-5 * max(1.0, float(np.linalg.norm(p)))
        ga = V.grad_at(p)
        for j in range(dim):
            e = np.zeros(dim)
            e[j] = step
            fd = (V.at(p + e) - V.at(p - e)) / (2 * step)
            worst = max(worst, abs(fd - ga[j]) / max(1.0, abs(ga[j])))
    checks.append(Check("gradV", bool(worst <= 1e-6), f"max relative FD mismatch {worst:.3g}"))
    if raise_on_fail:
        _raise_failed(checks, f"potential '{V.name}'")
    return checks


# ------------------------------------------------------------------ rescaling


def rescale_profile(v: NDArray, ref_grid: Grid, params: ModelParams,
                    grid: Grid | None = None, center=None) -> NDArray:
    """Sample ``u(x) = h^-gamma v((x - center)/h^beta)`` on ``grid``.

    ``v`` lives on ``ref_grid``; off-node values come from its trigonometric
    interpolant, which realises off-lattice centres as spectral translations.
    """
    grid = ref_grid if grid is None else grid
    if grid.dim != ref_grid.dim:
        raise ValueError("reference and target grids differ in dimension")
    width = params.width
    if min(width / dx for dx in grid.spacing) < MIN_POINTS_PER_WIDTH:
        raise UnderResolved(
            f"rescaled core width h^beta={width:.4g} spans "
            f"{min(width / dx for dx in grid.spacing):.2f} grid points (< {MIN_POINTS_PER_WIDTH})")
    center = np.zeros(grid.dim) if center is None else np.broadcast_to(np.asarray(center, float), (grid.dim,))
    targets = tuple((ax - c) / width for ax, c in zip(grid.axes, center))
    same = all(t.shape == r.shape and np.allclose(t, r, rtol=0, atol=1e-12 * dx)
               for t, r, dx in zip(targets, ref_grid.axes, ref_grid.spacing))
    if same:
        return params.h ** (-params.gamma) * np.array(v, dtype=float, copy=True)
    return params.h ** (-params.gamma) * interpolate(np.asarray(v, dtype=float), ref_grid, targets)


# -------------------------------------------------------------------- energies


def nonlinear_density(s: NDArray, params: ModelParams, W: Nonlinearity) -> NDArray:
    """``W_h(s) = h^(-alpha-gamma) W(h^gamma s)``."""
    h = params.h
    return h ** (-params.alpha - params.gamma) * W.W(h**params.gamma * np.abs(s))


def internal_energy(u: NDArray, grid: Grid, params: ModelParams, W: Nonlinearity) -> float:
    """``J_h(u) = int (h^2/2)|grad u|^2 + W_h(u)``."""
    plan = plan_for(grid)
    u = np.asarray(u, dtype=float)
    return 0.5 * params.h**2 * plan.gradient_energy(u) + grid.integrate(nonlinear_density(u, params, W))


def energy_parts(psi: WaveField, params: ModelParams, W: Nonlinearity, V: Potential,
                 V_grid: NDArray | None = None) -> tuple[float, float, float]:
    """Return ``(E_h, J_h, G)`` sharing the transforms between the pieces.

    The phase kinetic term of ``G`` is the full gradient energy minus the
    amplitude gradient energy, which avoids unwrapping the phase.
    """
    grid = psi.grid
    plan = plan_for(grid)
    h2 = 0.5 * params.h**2
    u = psi.modulus
    grad_u = plan.gradient_energy(u)
    grad_psi = plan.gradient_energy(psi.values)
    Vg = V.on_grid(grid) if V_grid is None else V_grid
    J = h2 * grad_u + grid.integrate(nonlinear_density(u, params, W))
    G = h2 * (grad_psi - grad_u) + grid.integrate(Vg * psi.density)
    return J + G, J, G


def dynamical_energy(psi: WaveField, params: ModelParams, V: Potential) -> float:
    grid = psi.grid
    plan = plan_for(grid)
    h2 = 0.5 * params.h**2
    kinetic = h2 * (plan.gradient_energy(psi.values) - plan.gradient_energy(psi.modulus))
    return kinetic + grid.integrate(V.on_grid(grid) * psi.density)


def total_energy(psi: WaveField, params: ModelParams, W: Nonlinearity, V: Potential) -> float:
    return internal_energy(psi.modulus, psi.grid, params, W) + dynamical_energy(psi, params, V)


def total_energy_direct(psi: WaveField, params: ModelParams, W: Nonlinearity, V: Potential) -> float:
    """``E_h = int (h^2/2)|grad psi|^2 + W_h(psi) + V|psi|^2`` without the split."""
    grid = psi.grid
    plan = plan_for(grid)
    return (0.5 * params.h**2 * plan.gradient_energy(psi.values)
            + grid.integrate(nonlinear_density(psi.modulus, params, W))
            + grid.integrate(V.on_grid(grid) * psi.density))
