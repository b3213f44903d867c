import numpy as np
import pytest

from solitondyn.diagnostics import barycenter, barycenter_velocity
from solitondyn.errors import BoundUnachievable, PhaseUnderResolved, TooCloseToBoundary
from solitondyn.grid import Grid
from solitondyn.groundstate import l2_norm
from solitondyn.initial import (InitialDatumSpec, PerturbationRecipe, build_initial_datum,
                                exact_free_soliton, h1_norm, make_perturbation, soliton_energy,
                                validate_admissibility)
from solitondyn.model import ModelParams, QuarticPotential, ZeroPotential

PARAMS = ModelParams(h=0.4, alpha=1.0, gamma=0.0, sigma=2.0)
GRID = Grid.uniform(1, 8.0, 2048)


def test_datum_has_expected_charge_center_and_velocity(gs_1d):
    spec = InitialDatumSpec(1.0, 0.5, PARAMS, gs_1d)
    psi = build_initial_datum(spec, GRID)
    assert psi.charge() == pytest.approx(4.0 * PARAMS.h**PARAMS.charge_exponent, rel=1e-10)
    # the periodic reference profile has a ~1e-8 tail, hence the looser centre check
    assert barycenter(psi)[0] == pytest.approx(1.0, abs=1e-8)
    assert barycenter_velocity(psi, PARAMS.h)[0] == pytest.approx(0.5, abs=1e-10)


def test_gamma_scales_amplitude(gs_1d):
    p = ModelParams(0.5, 1.0, 0.5, 2.0)
    psi = build_initial_datum(InitialDatumSpec(0.0, 0.0, p, gs_1d), Grid.uniform(1, 16.0, 1024))
    assert np.max(psi.modulus) == pytest.approx(np.sqrt(2) * 0.5**-0.5, rel=1e-6)


def test_placement_errors(gs_1d):
    with pytest.raises(TooCloseToBoundary):
        build_initial_datum(InitialDatumSpec(3.5, 0.0, PARAMS, gs_1d), GRID)
    with pytest.raises(PhaseUnderResolved):
        build_initial_datum(InitialDatumSpec(0.0, 200.0, PARAMS, gs_1d), GRID)


def test_perturbation_hits_target_and_keeps_mass(gs_1d):
    recipe = PerturbationRecipe(amplitude_fraction=0.5)
    w0 = make_perturbation(recipe, gs_1d, PARAMS, K=1.0, V=QuarticPotential())
    assert h1_norm(w0, gs_1d.grid) == pytest.approx(0.5 * PARAMS.h, rel=1e-9)
    assert l2_norm(gs_1d.U + w0, gs_1d.grid) == pytest.approx(2.0, rel=1e-12)


def test_oversized_perturbation_is_rejected(gs_1d):
    with pytest.raises(BoundUnachievable):
        make_perturbation(PerturbationRecipe(amplitude_fraction=1.5), gs_1d, PARAMS, K=1.0)


def test_admissibility_report(gs_1d):
    V = QuarticPotential()
    w0 = make_perturbation(PerturbationRecipe(amplitude_fraction=0.5), gs_1d, PARAMS, 1.0, V)
    spec = InitialDatumSpec(1.0, 0.5, PARAMS, gs_1d, K=1.0, w0=w0)
    rep = validate_admissibility(build_initial_datum(spec, GRID), spec, 1.0, V)
    assert rep.in_set, rep.failed()
    fast = InitialDatumSpec(1.0, 1.5, PARAMS, gs_1d, K=1.0, w0=w0)
    rep = validate_admissibility(build_initial_datum(fast, GRID), fast, 1.0, V)
    assert rep.failed() == ["phase_gradient"]


def test_exact_free_soliton_energy_and_position(gs_1d):
    spec = InitialDatumSpec(-1.0, 1.0, PARAMS, gs_1d)
    psi = exact_free_soliton(spec, 2.0, GRID)
    assert barycenter(psi)[0] == pytest.approx(1.0, abs=1e-8)
    assert soliton_energy(spec) == pytest.approx(0.5 + gs_1d.omega / PARAMS.h)
    # at t = 0 it coincides with the initial datum
    psi0 = build_initial_datum(spec, GRID)
    np.testing.assert_allclose(exact_free_soliton(spec, 0.0, GRID).values, psi0.values, atol=1e-13)
    assert ZeroPotential().at([0.0]) == 0.0
