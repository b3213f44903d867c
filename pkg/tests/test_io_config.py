import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from solitondyn import config, io
from solitondyn.errors import ConfigError
from solitondyn.grid import Grid


@pytest.mark.parametrize("complex_", [False, True])
def test_field_round_trip_is_exact(tmp_path, complex_):
    rng = np.random.default_rng(3)
    grid = Grid.uniform(2, 6.0, 16)
    vals = rng.standard_normal(grid.shape)
    if complex_:
        vals = vals + 1j * rng.standard_normal(grid.shape)
    path = tmp_path / "f.field"
    io.write_field(path, grid, vals, omega=-0.5, note="x")
    ff = io.read_field(path)
    assert ff.grid == grid
    np.testing.assert_array_equal(ff.values, vals)
    assert ff.float_meta("omega") == -0.5 and ff.meta["note"] == "x"
    first = path.read_bytes()
    io.write_field(path, ff.grid, ff.values, **ff.meta)
    assert path.read_bytes() == first


def test_field_rejects_foreign_file(tmp_path):
    p = tmp_path / "bad.field"
    p.write_text("hello\n")
    with pytest.raises(ConfigError):
        io.read_field(p)


def test_trajectory_round_trip(tmp_path):
    cols = io.trajectory_columns(2)
    rows = [[k] + [0.1 * k + j * 1e-17 for j in range(len(cols) - 1)] for k in range(4)]
    path = tmp_path / "t.csv"
    io.write_table(path, cols, rows, magic=f"{io.TRAJECTORY_MAGIC} {io.TRAJECTORY_VERSION}")
    back = io.read_trajectory(path)
    assert list(back) == cols
    assert back["q_1"][3] == rows[3][cols.index("q_1")]
    assert io.stack_vector(back, "newton_p").shape == (4, 2)


def test_trajectory_requires_header_line(tmp_path):
    path = tmp_path / "t.csv"
    io.write_table(path, ["step", "t"], [[0, 0.0]])
    with pytest.raises(ConfigError):
        io.read_trajectory(path)


def test_every_preset_loads_and_round_trips():
    names = config.preset_names()
    assert {"free_soliton_1d", "harmonic_sweep_1d", "quartic_sweep_1d", "groundstate_2d",
            "broken_w0", "broken_v2", "oversized_w0"} <= set(names)
    for name in names:
        cfg = config.load(f"preset:{name}")
        assert config.from_string(config.to_string(cfg)) == cfg


_floats = st.floats(0.01, 100.0, allow_nan=False)


@settings(max_examples=40, deadline=None)
@given(length=_floats, h0=_floats, ratio=st.floats(0.1, 0.9), T=_floats, q=_floats,
       rule=st.sampled_from(config.DT_RULES), pot=st.sampled_from(config.POTENTIALS))
def test_config_round_trip(length, h0, ratio, T, q, rule, pot):
    base = config.ExperimentConfig()
    cfg = dataclasses.replace(
        base,
        grid=dataclasses.replace(base.grid, length=length),
        model=dataclasses.replace(base.model, h=(h0, h0 * ratio, h0 * ratio**2)),
        potential=dataclasses.replace(base.potential, name=pot),
        initial_data=dataclasses.replace(base.initial_data, q0=(q,)),
        time=dataclasses.replace(base.time, T=T, dt_rule=rule),
    )
    assert config.from_string(config.to_string(cfg)) == cfg


@pytest.mark.parametrize("text", [
    "[grid]\nlenght = 4\n",
    "[gird]\nlength = 4\n",
    "[model]\nh = 0.1, 0.2, 0.4\n",
    "[model]\nh = 0.4, 0.4\n",
    "[potential]\nname = cubic\n",
    "[time]\nT = -1\n",
    "[grid]\npoints = many\n",
])
def test_bad_configs_raise(text):
    with pytest.raises(ConfigError):
        config.from_string(text)


def test_inline_comments_and_case_sensitive_keys():
    cfg = config.from_string("[initial_data]\nK = 2.5  # bound constant\n")
    assert cfg.initial_data.K == 2.5
    with pytest.raises(ConfigError):
        config.from_string("[initial_data]\nk = 2.5\n")


def test_unknown_preset_and_missing_file():
    with pytest.raises(ConfigError):
        config.load("preset:nope")
    with pytest.raises(ConfigError):
        config.load("/nonexistent/config.ini")
