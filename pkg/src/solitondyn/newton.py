"""Point-particle reference dynamics ``q'' = -grad V(q)`` and trajectory comparison."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.interpolate import CubicHermiteSpline

from .errors import EscapeDetected, TimeMismatch
from .model import Potential

# fourth-order symmetric composition of the leapfrog (Yoshida)
_W1 = 1.0 / (2.0 - 2.0 ** (1.0 / 3.0))
_W0 = 1.0 - 2.0 * _W1
_YOSHIDA = (_W1, _W0, _W1)


@dataclass
class NewtonTrajectory:
    t: NDArray
    q: NDArray  # (samples, dim)
    p: NDArray  # (samples, dim)
    energy: NDArray

    @property
    def dim(self) -> int:
        return self.q.shape[1]

    def energy_drift(self) -> float:
        e0 = self.energy[0]
        return float(np.max(np.abs(self.energy - e0)) / max(abs(e0), 1e-300))

    def at(self, times) -> NDArray:
        """Positions at arbitrary times by Hermite cubic interpolation (uses the velocities)."""
        times = np.asarray(times, dtype=float)
        if self.t.size == times.size and np.array_equal(self.t, times):
            return self.q.copy()
        return CubicHermiteSpline(self.t, self.q, self.p, axis=0)(times)


def _force(V: Potential, q: NDArray) -> NDArray:
    return -V.grad_at(q)


def _rk4(V, q, p, dt):
    k1q, k1p = p, _force(V, q)
    k2q, k2p = p + 0.5 * dt * k1p, _force(V, q + 0.5 * dt * k1q)
    k3q, k3p = p + 0.5 * dt * k2p, _force(V, q + 0.5 * dt * k2q)
    k4q, k4p = p + dt * k3p, _force(V, q + dt * k3q)
    return (q + dt / 6.0 * (k1q + 2 * k2q + 2 * k3q + k4q),
            p + dt / 6.0 * (k1p + 2 * k2p + 2 * k3p + k4p))


def _yoshida(V, q, p, dt):
    for w in _YOSHIDA:
        p = p + 0.5 * w * dt * _force(V, q)
        q = q + w * dt * p
        p = p + 0.5 * w * dt * _force(V, q)
    return q, p


_METHODS = {"rk4": _rk4, "yoshida4": _yoshida}


def integrate_newton(V: Potential, q0, v, T: float, dt: float, *, method: str = "rk4",
                     bounds=None, substeps: int = 1) -> NewtonTrajectory:
    """Fourth-order fixed-step integration from ``(q0, v)`` over ``[0, T]``.

    Samples are stored every ``dt``; each sample interval is split into
    ``substeps`` integrator steps. A negative ``T`` integrates backwards.
    ``bounds`` (per-axis half widths) raises :class:`EscapeDetected` when the
    particle leaves the region where a comparison with a boxed field makes
    sense.
    """
    if not dt > 0 or T == 0:
        raise ValueError("need dt > 0 and T != 0")
    step = _METHODS[method]
    q = np.atleast_1d(np.asarray(q0, dtype=float)).copy()
    p = np.broadcast_to(np.asarray(v, dtype=float), q.shape).copy()
    nsamp = max(1, math.ceil(abs(T) / dt - 1e-9))
    h = math.copysign(abs(T) / nsamp, T)
    sub = h / substeps
    lim = None if bounds is None else np.broadcast_to(np.asarray(bounds, dtype=float), q.shape)
    ts = h * np.arange(nsamp + 1)
    qs = np.empty((nsamp + 1, q.size))
    ps = np.empty_like(qs)
    qs[0], ps[0] = q, p
    for i in range(1, nsamp + 1):
        for _ in range(substeps):
            q, p = step(V, q, p, sub)
        if lim is not None and np.any(np.abs(q) > lim):
            raise EscapeDetected(f"particle left the comparison region at t = {ts[i]:.6g} (q = {q})")
        qs[i], ps[i] = q, p
    energy = 0.5 * np.sum(ps * ps, axis=1) + np.array([V.at(x) for x in qs])
    return NewtonTrajectory(ts, qs, ps, energy)


def trajectory_distance(newton: NewtonTrajectory, times, positions, rtol: float = 1e-9) -> float:
    """``sup_t |q_newton(t) - q_measured(t)|`` over the measured samples.

    Newton positions are resampled at the measured times when the grids
    differ; both records must span the same horizon.
    """
    times = np.asarray(times, dtype=float)
    positions = np.asarray(positions, dtype=float).reshape(times.size, -1)
    span = max(abs(newton.t[-1]), abs(times[-1]), 1.0)
    if abs(newton.t[0] - times[0]) > rtol * span or abs(newton.t[-1] - times[-1]) > rtol * span:
        raise TimeMismatch(f"measured horizon [{times[0]:g}, {times[-1]:g}] differs from "
                           f"reference horizon [{newton.t[0]:g}, {newton.t[-1]:g}]")
    ref = newton.at(times)
    return float(np.max(np.linalg.norm(ref - positions, axis=1)))
