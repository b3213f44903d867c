import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solitondyn.diagnostics import (Recorder, barycenter, barycenter_velocity, calibrate_radius,
                                    concentration_fraction, concentration_point,
                                    ehrenfest_acceleration, boundedness_monitors, potential_force_moment,
                                    residual_H)
from solitondyn.errors import BoundaryMassExceeded
from solitondyn.grid import Grid, WaveField
from solitondyn.initial import InitialDatumSpec, build_initial_datum
from solitondyn.model import (HarmonicPotential, ModelParams, PowerNonlinearity,
                              QuarticPotential, ZeroPotential)
from solitondyn.propagator import PropagatorState, evolve

GRID = Grid.uniform(1, 20.0, 1024)
X = GRID.axes[0]


def _bump(c, width=0.3):
    return np.exp(-((X - c) ** 2) / (2 * width**2))


def test_barycenter_of_symmetric_bump():
    assert barycenter(WaveField(GRID, _bump(1.3)))[0] == pytest.approx(1.3, abs=1e-12)


def test_barycenter_is_weighted_mean():
    psi = WaveField(GRID, _bump(0.0) + np.sqrt(3.0) * _bump(4.0))
    assert barycenter(psi)[0] == pytest.approx(3.0, abs=1e-10)


def test_barycenter_refuses_boundary_mass():
    with pytest.raises(BoundaryMassExceeded):
        barycenter(WaveField(GRID, _bump(9.5)))


def test_velocity_of_plane_wave_packet():
    h, v = 0.3, 0.8
    psi = WaveField(GRID, _bump(0.0) * np.exp(1j * v * X / h))
    assert barycenter_velocity(psi, h)[0] == pytest.approx(v, abs=1e-10)
    assert barycenter_velocity(WaveField(GRID, _bump(0.5)), h)[0] == pytest.approx(0.0, abs=1e-14)


def test_ehrenfest_acceleration_cases():
    psi = WaveField(GRID, _bump(1.1, width=0.7))
    assert ehrenfest_acceleration(psi, ZeroPotential())[0] == 0.0
    np.testing.assert_allclose(ehrenfest_acceleration(psi, HarmonicPotential()), -barycenter(psi),
                               atol=1e-14)


@settings(max_examples=25, deadline=None)
@given(c=st.floats(-3, 3), w=st.floats(0.2, 1.0), k=st.floats(-3, 3))
def test_integration_by_parts_identity(c, w, k):
    psi = WaveField(GRID, _bump(c, w) * np.exp(1j * k * X))
    V = QuarticPotential()
    a = ehrenfest_acceleration(psi, V)
    b = potential_force_moment(psi, V)
    # scale: typical |grad V| over the packet
    scale = 1.0 + abs(c) ** 3
    assert np.allclose(a, b, rtol=1e-10, atol=1e-10 * scale)


def test_concentration_point_is_the_mode():
    psi = WaveField(GRID, np.sqrt(0.9) * _bump(-3.0) + np.sqrt(0.1) * _bump(5.0))
    q_hat = concentration_point(psi, 1.0)
    assert q_hat[0] == pytest.approx(-3.0, abs=GRID.spacing[0])
    assert abs(barycenter(psi)[0] - q_hat[0]) > 0.5


@settings(max_examples=20, deadline=None)
@given(theta=st.floats(0, 2 * np.pi), scale=st.floats(1e-3, 1e3), c=st.floats(-4, 4))
def test_concentration_point_invariances(theta, scale, c):
    base = WaveField(GRID, _bump(c, 0.5))
    ref = concentration_point(base, 0.8)
    moved = WaveField(GRID, scale * np.exp(1j * theta) * base.values)
    np.testing.assert_array_equal(concentration_point(moved, 0.8), ref)


def test_concentration_fraction_limits_and_sech_tail(gs_1d):
    psi = WaveField(GRID, _bump(0.0))
    assert concentration_fraction(psi, [0.0], 30.0) == 0.0
    fine = Grid.uniform(1, 40.0, 8192)
    sech = WaveField(fine, np.sqrt(2) / np.cosh(fine.axes[0]))
    frac = concentration_fraction(sech, concentration_point(sech, 3.0), 3.0)
    assert frac == pytest.approx(1 - np.tanh(3.0), rel=2e-3)


def test_radius_calibration(gs_1d):
    params = ModelParams(0.2, 1.0, 0.0, 2.0)
    psi = build_initial_datum(InitialDatumSpec(0.5, 0.0, params, gs_1d), Grid.uniform(1, 8.0, 4096))
    R = calibrate_radius(psi, 1e-2, params.width)
    rad = R * params.width
    assert concentration_fraction(psi, concentration_point(psi, rad), rad) <= 1e-2
    # the continuum answer for sech^2 is artanh(1 - eps)
    assert R == pytest.approx(np.arctanh(1 - 1e-2), rel=0.02)


def test_residual_cases():
    assert residual_H([-1.0], [1.0], HarmonicPotential()).H[0] == 0.0
    assert residual_H([0.0], [2.0], ZeroPotential()).H[0] == 0.0
    split = residual_H([-3.0], [1.0], QuarticPotential(), q_hat=[1.1])
    assert split.position_part + split.averaging_part == pytest.approx(split.H)


def _trapped_run(gs_1d, V, v, T=4.0, stride=10, dt=2e-3):
    params = ModelParams(0.4, 1.0, 0.0, 2.0)
    grid = Grid.uniform(1, 30.0, 4096)
    psi = build_initial_datum(InitialDatumSpec(0.0, v, params, gs_1d, boundary_margin=0.05), grid)
    rec = Recorder(grid, params, _w(), V, 2.6 * params.width)
    out = []
    st_ = PropagatorState(psi, params, _w(), V, dt)
    evolve(st_, T, stride, lambda s, snap: out.append(rec.measure(s.psi, s.step)))
    return params, grid, out


def _w():
    return PowerNonlinearity(4.0)


def test_boundedness_monitors_flag_free_drift(gs_1d):
    params, grid, recs = _trapped_run(gs_1d, ZeroPotential(), 1.0)
    rep = boundedness_monitors(recs, params, length_floor=grid.spacing[0])
    assert "barycenter_norm" in rep.growing
    assert "barycenter_to_concentration" not in rep.growing


def test_boundedness_monitors_quiet_in_trap(gs_1d):
    params, grid, recs = _trapped_run(gs_1d, HarmonicPotential(), 0.3, T=8.0)
    rep = boundedness_monitors(recs, params, length_floor=grid.spacing[0])
    assert rep.growing == []
    assert all(np.isfinite(b.maximum) for b in rep.bounds.values())
    assert max(np.linalg.norm(r.q - r.q_hat) for r in recs) <= grid.spacing[0]


def test_records_satisfy_energy_split_and_derivative_consistency(gs_1d):
    params, grid, recs = _trapped_run(gs_1d, QuarticPotential(), 0.5, T=1.0, stride=1, dt=1e-3)
    for r in recs:
        assert r.E == pytest.approx(r.J + r.G, rel=1e-10)
        assert 0.0 <= r.conc_fraction <= 1.0 and r.charge > 0
    t = np.array([r.t for r in recs])
    q = np.array([r.q[0] for r in recs])
    qdot = np.array([r.qdot[0] for r in recs])
    qddot = np.array([r.qddot[0] for r in recs])
    dt = t[1] - t[0]
    fd1 = (q[2:] - q[:-2]) / (2 * dt)
    fd2 = (q[2:] - 2 * q[1:-1] + q[:-2]) / dt**2
    assert np.max(np.abs(fd1 - qdot[1:-1])) < 1e-5
    assert np.max(np.abs(fd2 - qddot[1:-1])) < 1e-3
