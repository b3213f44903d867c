import numpy as np
import pytest

from solitondyn.errors import BlowupDetected, BoundaryMassExceeded, EnergyDrift
from solitondyn.grid import Grid, WaveField
from solitondyn.initial import InitialDatumSpec, build_initial_datum
from solitondyn.model import HarmonicPotential, ModelParams, Nonlinearity, QuarticPotential, ZeroPotential
from solitondyn.propagator import (MonitorThresholds, PropagatorState, advance, default_dt, evolve,
                                   step_count, step_strang)
from solitondyn.spectral import plan_for

PARAMS = ModelParams(h=0.4, alpha=1.0, gamma=0.0, sigma=2.0)
GRID = Grid.uniform(1, 8.0, 1024)


class _Linear(Nonlinearity):
    name = "linear"

    def __init__(self):
        super().__init__(q=4, p=4, nu=4, s0=1)

    def W(self, s):
        return 0.0 * np.asarray(s)

    def dW(self, s):
        return 0.0 * np.asarray(s)

    def d2W(self, s):
        return 0.0 * np.asarray(s)


def _l2(a, b, grid):
    return np.sqrt(grid.integrate(np.abs(a - b) ** 2) / grid.integrate(np.abs(b) ** 2))


@pytest.fixture
def soliton(gs_1d):
    return build_initial_datum(InitialDatumSpec(1.0, 0.5, PARAMS, gs_1d), GRID)


def test_degenerate_split_is_the_kinetic_flow():
    x = GRID.axes[0]
    psi = WaveField(GRID, np.exp(-x**2) * np.exp(1j * x))
    st = PropagatorState(psi, PARAMS, _Linear(), ZeroPotential(), 0.01)
    out = advance(st, 7)
    ref = plan_for(GRID).apply_kinetic(psi, 0.07, PARAMS.h)
    np.testing.assert_allclose(out.psi.values, ref.values, atol=1e-12)


def test_fused_steps_equal_single_steps(soliton, quartic_w):
    st = PropagatorState(soliton, PARAMS, quartic_w, QuarticPotential(), 1e-3)
    one = st
    for _ in range(5):
        one = step_strang(one)
    np.testing.assert_allclose(advance(st, 5).psi.values, one.psi.values, atol=1e-12)
    assert one.step == 5 and one.time == pytest.approx(5e-3)


def test_coherent_state_returns_after_one_period():
    # h = 1, W = 0, V = x^2/2: a displaced Gaussian oscillates rigidly with period 2 pi
    grid = Grid.uniform(1, 24.0, 256)
    x = grid.axes[0]
    params = ModelParams(1.0, 0.0, 0.0, 1.0)
    psi = WaveField(grid, np.exp(-(x - 2.0) ** 2 / 2))
    errs = []
    for n in (400, 800):
        st = PropagatorState(psi, params, _Linear(), HarmonicPotential(), 2 * np.pi / n)
        out = advance(st, n)
        rho = out.psi.density
        errs.append(abs(grid.integrate(x * rho) / grid.integrate(rho) - 2.0))
    assert errs[0] < 1e-3
    # at least second order; the full-period return is in fact super-convergent
    assert errs[0] / errs[1] >= 3.5


def test_charge_conserved_to_roundoff(soliton, quartic_w):
    st = PropagatorState(soliton, PARAMS, quartic_w, QuarticPotential(), 2e-3)
    out = advance(st, 500)
    assert abs(out.psi.charge() / soliton.charge() - 1) < 1e-12


def test_time_reversibility(soliton, quartic_w):
    st = PropagatorState(soliton, PARAMS, quartic_w, QuarticPotential(), 2e-3)
    fwd = evolve(st, 2.0)
    back = evolve(fwd.reversed(), 2.0)
    assert back.time == pytest.approx(0.0, abs=1e-12)
    assert _l2(back.psi.values, soliton.values, GRID) < 1e-6


def test_second_order_self_convergence(soliton, quartic_w):
    T, dt = 0.5, 4e-3
    sols = {}
    for k in (1, 2, 4, 8):
        st = PropagatorState(soliton, PARAMS, quartic_w, QuarticPotential(), dt / k)
        sols[k] = advance(st, step_count(T, dt / k)).psi.values
    # successive differences cancel the unknown exact solution
    successive = np.log2(_l2(sols[1], sols[2], GRID) / _l2(sols[2], sols[4], GRID))
    assert 1.8 <= successive <= 2.2
    against_finest = np.log2(_l2(sols[1], sols[8], GRID) / _l2(sols[2], sols[8], GRID))
    assert 1.8 <= against_finest <= 2.2


def test_gauge_covariance(soliton, quartic_w):
    c, T = 0.7, 0.5
    a = evolve(PropagatorState(soliton, PARAMS, quartic_w, QuarticPotential(), 1e-3), T)
    b = evolve(PropagatorState(soliton, PARAMS, quartic_w, QuarticPotential(offset=c), 1e-3), T)
    phase = np.exp(-1j * c * a.time / PARAMS.h)
    np.testing.assert_allclose(b.psi.values, a.psi.values * phase, atol=1e-10)
    np.testing.assert_allclose(b.psi.modulus, a.psi.modulus, atol=1e-12)


def test_tiny_box_trips_boundary_monitor(gs_1d, quartic_w):
    grid = Grid.uniform(1, 4.0, 512)
    spec = InitialDatumSpec(0.3, 0.0, ModelParams(0.6, 1.0, 0.0, 2.0), gs_1d)
    psi = build_initial_datum(spec, grid)
    st = PropagatorState(psi, spec.params, quartic_w, HarmonicPotential(), 1e-3)
    with pytest.raises(BoundaryMassExceeded) as info:
        evolve(st, 0.1)
    assert info.value.step == 0 and info.value.monitor == "boundary_mass"


def test_energy_and_blowup_monitors_report_step(soliton, quartic_w):
    st = PropagatorState(soliton, PARAMS, quartic_w, QuarticPotential(), 2e-2,
                         MonitorThresholds(energy_drift=1e-12))
    with pytest.raises(EnergyDrift) as info:
        evolve(st, 1.0, sample_stride=5)
    assert info.value.step == 5
    st = PropagatorState(soliton, PARAMS, quartic_w, QuarticPotential(), 2e-2,
                         MonitorThresholds(blowup_factor=0.5))
    with pytest.raises(BlowupDetected):
        evolve(st, 1.0)


def test_sampling_hits_stride_multiples_and_end(soliton, quartic_w):
    seen = []
    st = PropagatorState(soliton, PARAMS, quartic_w, QuarticPotential(), 1e-2)
    out = evolve(st, 0.25, sample_stride=10, sink=lambda s, snap: seen.append(s.step))
    assert seen == [0, 10, 20, 25] and out.step == 25


def test_default_dt_bounds_phase_increments(soliton, quartic_w):
    dt = default_dt(soliton, PARAMS, quartic_w, QuarticPotential())
    k2max = float(np.max(plan_for(GRID).k2))
    assert 0 < dt <= 1.0 / (PARAMS.h * k2max) + 1e-15


def test_dealias_filter_leaves_resolved_soliton_alone(soliton, quartic_w):
    plain = advance(PropagatorState(soliton, PARAMS, quartic_w, QuarticPotential(), 2e-3), 100)
    filt = advance(PropagatorState(soliton, PARAMS, quartic_w, QuarticPotential(), 2e-3,
                                   dealias=True), 100)
    assert _l2(filt.psi.values, plain.psi.values, GRID) < 1e-5
    # a field living only above the 2/3 cutoff is removed by the filtered kinetic step
    k = GRID.points[0] // 2 - 4
    noise = WaveField(GRID, 1e-3 * np.exp(2j * np.pi * k * np.arange(GRID.points[0]) / GRID.points[0]))
    out = plan_for(GRID, dealias=True).apply_kinetic(noise, 1e-3, PARAMS.h)
    assert np.max(np.abs(out.values)) < 1e-15
