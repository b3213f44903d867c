import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solitondyn.errors import AssumptionViolation, UnderResolved
from solitondyn.grid import Grid, WaveField
from solitondyn.model import (HarmonicPotential, ModelParams, PowerNonlinearity, QuarticPotential,
                              ShiftedQuartic, ZeroPotential, derive_beta, energy_parts,
                              internal_energy, rescale_profile, total_energy_direct,
                              validate_nonlinearity, validate_potential)


def test_beta_and_exponents():
    p = ModelParams(h=0.5, alpha=1.0, gamma=0.0, sigma=2.0, dim=1)
    assert p.beta == 1.5 == derive_beta(1.0, 0.0)
    assert p.semiclassical_regime
    assert p.charge_exponent == 1.5
    assert p.energy_exponent == 0.5
    assert not ModelParams(1.0, 0.0, 0.0, 1.0).semiclassical_regime


@pytest.mark.parametrize("bad", [dict(h=0.0), dict(h=-1.0), dict(sigma=0.0)])
def test_params_reject_nonpositive(bad):
    kw = dict(h=0.5, alpha=1.0, gamma=0.0, sigma=1.0) | bad
    with pytest.raises(ValueError):
        ModelParams(**kw)


def test_power_nonlinearity_passes_in_1d_and_2d():
    assert all(validate_nonlinearity(PowerNonlinearity(4.0), 1))
    assert all(validate_nonlinearity(PowerNonlinearity(3.0), 2))


def test_mass_supercritical_power_fails_lower_bound():
    checks = {c.name: c.passed for c in validate_nonlinearity(PowerNonlinearity(7.0), 1)}
    assert not checks["W2"]
    with pytest.raises(AssumptionViolation, match=r"\(W2\)"):
        validate_nonlinearity(PowerNonlinearity(7.0), 1, raise_on_fail=True)


def test_shifted_quartic_fails_w0():
    with pytest.raises(AssumptionViolation, match=r"\(W0\)"):
        validate_nonlinearity(ShiftedQuartic(), 1, raise_on_fail=True)


def test_dw_over_s_limit_is_zero():
    W = PowerNonlinearity(4.0)
    assert W.dW_over_s(np.array([0.0]))[0] == 0.0
    s = np.array([0.5, 2.0])
    np.testing.assert_allclose(W.dW_over_s_sq(s**2), W.dW(s) / s)


def test_harmonic_threshold_radius():
    V = HarmonicPotential()
    # |grad V| = r <= (r^2/2)^0.75 and r^2/2 >= r^1.5 both hold from r = 4 on
    assert V.R1 == pytest.approx(4.0, rel=1e-3)


@pytest.mark.parametrize("V", [HarmonicPotential(), QuarticPotential()])
def test_trap_potentials_pass_probes(V):
    grid = Grid.uniform(2, 8.0, 32)
    assert all(validate_potential(V, grid))


def test_zero_potential_fails_growth_probe():
    checks = {c.name: c.passed for c in validate_potential(ZeroPotential(), Grid.uniform(1, 8.0, 64))}
    assert not checks["V2"]
    assert checks["V0"] and checks["V1"]


def test_negative_potential_fails_v0():
    grid = Grid.uniform(1, 8.0, 64)
    checks = {c.name: c.passed for c in validate_potential(HarmonicPotential(offset=-1.0), grid)}
    assert not checks["V0"]


def test_gradient_matches_finite_differences():
    V = QuarticPotential()
    p = np.array([0.7, -1.3])
    e = 1e-6
    fd = [(V.at(p + e * d) - V.at(p - e * d)) / (2 * e) for d in np.eye(2)]
    np.testing.assert_allclose(V.grad_at(p), fd, rtol=1e-7)


def _coincident_grid(ref, params):
    return Grid(tuple(L * params.width for L in ref.extent), ref.points)


@settings(max_examples=25, deadline=None)
@given(h=st.floats(0.2, 1.0), alpha=st.floats(0.0, 2.0), gamma=st.floats(0.0, 1.0))
def test_rescaling_identities(gs_1d, quartic_w, h, alpha, gamma):
    params = ModelParams(h, alpha, gamma, 2.0)
    ref = gs_1d.grid
    grid = _coincident_grid(ref, params)
    u = rescale_profile(gs_1d.U, ref, params, grid)
    charge_ratio = grid.integrate(u * u) / ref.integrate(gs_1d.U**2)
    assert charge_ratio == pytest.approx(h**params.charge_exponent, rel=1e-10)
    J_ratio = internal_energy(u, grid, params, quartic_w) / internal_energy(
        gs_1d.U, ref, ModelParams(1.0, alpha, gamma, 2.0), quartic_w)
    assert J_ratio == pytest.approx(h**params.energy_exponent, rel=1e-10)


def test_rescale_refuses_underresolved_core(gs_1d):
    params = ModelParams(0.05, 1.0, 0.0, 2.0)
    with pytest.raises(UnderResolved):
        rescale_profile(gs_1d.U, gs_1d.grid, params, Grid.uniform(1, 8.0, 256))


def test_off_lattice_centre_is_a_translation(gs_1d):
    params = ModelParams(0.5, 1.0, 0.0, 2.0)
    grid = Grid.uniform(1, 16.0, 1024)
    u = rescale_profile(gs_1d.U, gs_1d.grid, params, grid, center=[0.3])
    x = grid.axes[0]
    np.testing.assert_allclose(u, np.sqrt(2) / np.cosh((x - 0.3) / params.width), atol=1e-7)


@settings(max_examples=20, deadline=None)
@given(v=st.floats(-2, 2), h=st.floats(0.3, 1.0))
def test_energy_split_matches_direct_sum(gs_1d, quartic_w, v, h):
    params = ModelParams(h, 1.0, 0.0, 2.0)
    grid = Grid.uniform(1, 20.0, 1024)
    u = rescale_profile(gs_1d.U, gs_1d.grid, params, grid, center=[0.5])
    psi = WaveField(grid, u * np.exp(1j * v * grid.axes[0] / h))
    V = HarmonicPotential()
    E, J, G = energy_parts(psi, params, quartic_w, V)
    assert E == pytest.approx(J + G, rel=1e-12, abs=1e-12)
    assert E == pytest.approx(total_energy_direct(psi, params, quartic_w, V), rel=1e-10, abs=1e-10)
