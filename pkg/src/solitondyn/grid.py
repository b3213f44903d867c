"""Periodic grids and wavefields."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
from numpy.typing import NDArray


@dataclass(frozen=True)
class Grid:
    """Uniform periodic grid on the box ``[-L/2, L/2)`` along each axis.

    Sample ``j`` on an axis sits at ``-L/2 + j*dx``, so for even point counts
    the origin is a grid node and reflection ``x -> -x`` maps the grid onto
    itself (modulo the periodic wrap of the first node).
    """

    extent: tuple[float, ...]
    points: tuple[int, ...]

    def __post_init__(self):
        ext = tuple(float(v) for v in np.atleast_1d(self.extent))
        pts = tuple(int(v) for v in np.atleast_1d(self.points))
        if len(ext) != len(pts):
            raise ValueError("extent and points must have the same length")
        if any(v <= 0 for v in ext) or any(n < 4 for n in pts):
            raise ValueError("grid needs positive extents and at least 4 points per axis")
        object.__setattr__(self, "extent", ext)
        object.__setattr__(self, "points", pts)

    @classmethod
    def uniform(cls, dim: int, length: float, n: int) -> "Grid":
        return cls((length,) * dim, (n,) * dim)

    @property
    def dim(self) -> int:
        return len(self.points)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.points

    @property
    def size(self) -> int:
        return int(np.prod(self.points))

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.extent, self.points))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @cached_property
    def axes(self) -> tuple[NDArray, ...]:
        return tuple(-L / 2 + (L / n) * np.arange(n) for L, n in zip(self.extent, self.points))

    @cached_property
    def coords(self) -> tuple[NDArray, ...]:
        """Broadcastable coordinate arrays, one per axis (sparse meshgrid)."""
        return tuple(np.meshgrid(*self.axes, indexing="ij", sparse=True))

    @cached_property
    def radius_squared(self) -> NDArray:
        r2 = np.zeros(self.shape)
        for x in self.coords:
            r2 = r2 + x * x
        return r2

    def integrate(self, f: NDArray) -> float:
        return float(np.sum(f) * self.cell_volume)

    def outer_shell_mask(self, fraction: float = 0.1) -> NDArray:
        """Points within ``fraction*L`` of the box boundary along any axis."""
        mask = np.zeros(self.shape, dtype=bool)
        for x, L in zip(self.coords, self.extent):
            mask = mask | (np.abs(x) > (0.5 - fraction) * L)
        return mask


@dataclass
class WaveField:
    """Complex field on a grid at a given time. The values array is owned."""

    grid: Grid
    values: NDArray
    time: float = 0.0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"values shape {self.values.shape} does not match grid {self.grid.shape}")

    def copy(self) -> "WaveField":
        return WaveField(self.grid, self.values.copy(), self.time)

    @property
    def density(self) -> NDArray:
        v = self.values
        return v.real * v.real + v.imag * v.imag

    @property
    def modulus(self) -> NDArray:
        return np.abs(self.values)

    def charge(self) -> float:
        return self.grid.integrate(self.density)


def charge(psi: WaveField) -> float:
    return psi.charge()
