import numpy as np
import pytest

from solitondyn import config, harness
from solitondyn.grid import Grid
from solitondyn.groundstate import minimize_on_sphere
from solitondyn.model import PowerNonlinearity

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def report_criterion():
    """Record one pass/fail line per acceptance criterion for the terminal summary."""

    def report(number: int, passed: bool, detail: str) -> None:
        _CRITERIA[number] = (bool(passed), detail)
        print(f"criterion {number:2d}: {'PASS' if passed else 'FAIL'}  {detail}")

    return report


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")


@pytest.fixture(scope="session")
def quartic_w():
    return PowerNonlinearity(4.0)


@pytest.fixture(scope="session")
def ref_grid_1d():
    return Grid.uniform(1, 40.0, 2048)


@pytest.fixture(scope="session")
def gs_1d(quartic_w, ref_grid_1d):
    """Ground state of W = -s^4/4 at sigma = 2, i.e. sqrt(2) sech(x)."""
    return minimize_on_sphere(quartic_w, 2.0, ref_grid_1d)


@pytest.fixture(scope="session")
def gs_2d():
    cfg = config.load("preset:groundstate_2d")
    return harness.ground_state(cfg)


@pytest.fixture(scope="session")
def harmonic_sweep(tmp_path_factory):
    cfg = config.load("preset:harmonic_sweep_1d")
    out = tmp_path_factory.mktemp("harmonic_sweep")
    return cfg, out, harness.run_sweep(cfg, out)


@pytest.fixture(scope="session")
def quartic_sweep(tmp_path_factory):
    cfg = config.load("preset:quartic_sweep_1d")
    out = tmp_path_factory.mktemp("quartic_sweep")
    return cfg, out, harness.run_sweep(cfg, out)


def sech_profile(x):
    return np.sqrt(2.0) / np.cosh(x)
