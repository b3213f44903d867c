"""Experiment configuration: an INI file with one section per concern.

Every key of every section is listed in the dataclasses below together with
its default; unknown sections or keys are rejected. Vector values are comma
separated. ``preset:<name>`` loads one of the files shipped in
``solitondyn/presets``.
"""

from __future__ import annotations

import configparser
import dataclasses
import typing
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

from .errors import ConfigError
from .grid import Grid
from .model import (HarmonicPotential, ModelParams, Nonlinearity, Potential, PowerNonlinearity,
                    QuarticPotential, ShiftedQuartic, ZeroPotential)
from .propagator import MonitorThresholds


@dataclass(frozen=True)
class GridSection:
    dim: int = 1
    length: float = 40.0
    points: int = 2048
    dealias: bool = False  # 2/3-rule filter in the kinetic step


@dataclass(frozen=True)
class ModelSection:
    alpha: float = 1.0
    gamma: float = 0.0
    sigma: float = 2.0
    h: tuple[float, ...] = (0.4, 0.2, 0.1)


@dataclass(frozen=True)
class NonlinearitySection:
    name: str = "power"
    p: float = 4.0


@dataclass(frozen=True)
class PotentialSection:
    name: str = "harmonic"
    kappa: float = 1.0
    c2: float = 0.5
    c4: float = 0.05
    offset: float = 0.0
    check: bool = True


@dataclass(frozen=True)
class InitialDataSection:
    q0: tuple[float, ...] = (1.0,)
    v: tuple[float, ...] = (0.5,)
    K: float = 1.0
    amplitude_fraction: float = 0.0
    bump_width: float = 0.5
    bump_offset: tuple[float, ...] = (0.5,)
    boundary_margin: float = 0.1


@dataclass(frozen=True)
class TimeSection:
    """``dt_rule`` is ``auto`` (phase-increment rule), ``fixed`` (use ``dt``)
    or ``h_scaled`` (``dt * (h / dt_ref_h)**2``).
    """

    T: float = 10.0
    dt_rule: str = "h_scaled"
    dt: float = 2e-3
    dt_ref_h: float = 0.4
    sample_interval: float = 0.01


@dataclass(frozen=True)
class OutputSection:
    directory: str = "runs"
    trajectory: bool = True
    summary: bool = True
    checkpoint_every: int = 0


@dataclass(frozen=True)
class ToleranceSection:
    charge_drift: float = 1e-8
    energy_drift: float = 1e-4
    boundary_mass: float = 1e-6
    spectral_tail: float = 1e-8
    blowup_factor: float = 10.0
    conc_eps: float = 1e-2
    decay_slack: float = 0.05
    floor: float = 1e-6


@dataclass(frozen=True)
class GroundStateSection:
    """Reference grid (unscaled coordinates) and solver settings; ``file``
    loads a previously saved profile instead of solving.
    """

    length: float = 40.0
    points: int = 2048
    tau: float = 1.0
    tol: float = 1e-8
    max_iter: int = 100000
    file: str = ""


SECTIONS = {
    "grid": GridSection,
    "model": ModelSection,
    "nonlinearity": NonlinearitySection,
    "potential": PotentialSection,
    "initial_data": InitialDataSection,
    "time": TimeSection,
    "output": OutputSection,
    "tolerance": ToleranceSection,
    "ground_state": GroundStateSection,
}

NONLINEARITIES = ("power", "broken_w0")
POTENTIALS = ("zero", "harmonic", "quartic")
DT_RULES = ("auto", "fixed", "h_scaled")


@dataclass(frozen=True)
class ExperimentConfig:
    grid: GridSection = field(default_factory=GridSection)
    model: ModelSection = field(default_factory=ModelSection)
    nonlinearity: NonlinearitySection = field(default_factory=NonlinearitySection)
    potential: PotentialSection = field(default_factory=PotentialSection)
    initial_data: InitialDataSection = field(default_factory=InitialDataSection)
    time: TimeSection = field(default_factory=TimeSection)
    output: OutputSection = field(default_factory=OutputSection)
    tolerance: ToleranceSection = field(default_factory=ToleranceSection)
    ground_state: GroundStateSection = field(default_factory=GroundStateSection)

    def __post_init__(self):
        validate(self)

    # builders
    def build_grid(self) -> Grid:
        return Grid.uniform(self.grid.dim, self.grid.length, self.grid.points)

    def build_reference_grid(self) -> Grid:
        return Grid.uniform(self.grid.dim, self.ground_state.length, self.ground_state.points)

    def params(self, h: float) -> ModelParams:
        m = self.model
        return ModelParams(h=h, alpha=m.alpha, gamma=m.gamma, sigma=m.sigma, dim=self.grid.dim)

    def build_nonlinearity(self) -> Nonlinearity:
        nl = self.nonlinearity
        if nl.name == "power":
            return PowerNonlinearity(nl.p)
        return ShiftedQuartic()

    def build_potential(self) -> Potential:
        p = self.potential
        if p.name == "zero":
            return ZeroPotential(offset=p.offset)
        if p.name == "harmonic":
            return HarmonicPotential(kappa=p.kappa, offset=p.offset)
        return QuarticPotential(c2=p.c2, c4=p.c4, offset=p.offset)

    def thresholds(self) -> MonitorThresholds:
        t = self.tolerance
        return MonitorThresholds(charge_drift=t.charge_drift, energy_drift=t.energy_drift,
                                 boundary_mass=t.boundary_mass, spectral_tail=t.spectral_tail,
                                 blowup_factor=t.blowup_factor)

    def with_h(self, h: float) -> "ExperimentConfig":
        return dataclasses.replace(self, model=dataclasses.replace(self.model, h=(float(h),)))

    def with_output(self, directory: str) -> "ExperimentConfig":
        return dataclasses.replace(self, output=dataclasses.replace(self.output, directory=str(directory)))


def validate(cfg: ExperimentConfig) -> None:
    hs = cfg.model.h
    if not hs or any(not h > 0 for h in hs):
        raise ConfigError("model.h values must be positive")
    if any(b >= a for a, b in zip(hs, hs[1:])):
        raise ConfigError("model.h values must be strictly decreasing")
    if cfg.grid.dim < 1 or cfg.grid.points < 4 or not cfg.grid.length > 0:
        raise ConfigError("grid needs dim >= 1, points >= 4 and length > 0")
    if cfg.nonlinearity.name not in NONLINEARITIES:
        raise ConfigError(f"nonlinearity.name must be one of {NONLINEARITIES}")
    if cfg.potential.name not in POTENTIALS:
        raise ConfigError(f"potential.name must be one of {POTENTIALS}")
    if cfg.time.dt_rule not in DT_RULES:
        raise ConfigError(f"time.dt_rule must be one of {DT_RULES}")
    if not cfg.time.T > 0 or not cfg.time.dt > 0 or not cfg.time.sample_interval > 0:
        raise ConfigError("time.T, time.dt and time.sample_interval must be positive")
    dim = cfg.grid.dim
    for name in ("q0", "v", "bump_offset"):
        if len(getattr(cfg.initial_data, name)) not in (1, dim):
            raise ConfigError(f"initial_data.{name} needs 1 or {dim} components")
    if not 0 < cfg.tolerance.conc_eps < 1:
        raise ConfigError("tolerance.conc_eps must lie in (0, 1)")


# ------------------------------------------------------------- parse / dump


def _parse_value(raw: str, typ, where: str):
    raw = raw.strip()
    try:
        if typ is bool:
            low = raw.lower()
            if low in ("true", "yes", "on", "1"):
                return True
            if low in ("false", "no", "off", "0"):
                return False
            raise ValueError(raw)
        if typ is int:
            return int(raw)
        if typ is float:
            return float(raw)
        if typ is str:
            return raw
        if typing.get_origin(typ) is tuple:
            return tuple(float(x) for x in raw.split(",") if x.strip())
    except ValueError:
        raise ConfigError(f"{where}: cannot parse {raw!r}") from None
    raise ConfigError(f"{where}: unsupported type")


def _dump_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, tuple):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


def from_string(text: str, source: str = "<string>") -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (K vs k)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    unknown = set(cp.sections()) - set(SECTIONS)
    if unknown:
        raise ConfigError(f"{source}: unknown section(s) {sorted(unknown)}")
    parts = {}
    for name, cls in SECTIONS.items():
        if not cp.has_section(name):
            parts[name] = cls()
            continue
        hints = typing.get_type_hints(cls)
        known = {f.name for f in fields(cls)}
        kwargs = {}
        for key, raw in cp.items(name):
            if key not in known:
                raise ConfigError(f"{source}: unknown key '{key}' in section [{name}]")
            kwargs[key] = _parse_value(raw, hints[key], f"{source} [{name}] {key}")
        parts[name] = cls(**kwargs)
    return ExperimentConfig(**parts)


def to_string(cfg: ExperimentConfig) -> str:
    out = []
    for name in SECTIONS:
        sec = getattr(cfg, name)
        out.append(f"[{name}]")
        for f in fields(sec):
            out.append(f"{f.name} = {_dump_value(getattr(sec, f.name))}")
        out.append("")
    return "\n".join(out)


def preset_names() -> list[str]:
    root = resources.files("solitondyn") / "presets"
    return sorted(p.name[:-4] for p in root.iterdir() if p.name.endswith(".ini"))


def load(spec: str | Path) -> ExperimentConfig:
    """Read a config file, or a shipped preset given as ``preset:<name>``."""
    spec = str(spec)
    if spec.startswith("preset:"):
        name = spec.split(":", 1)[1]
        res = resources.files("solitondyn") / "presets" / f"{name}.ini"
        if not res.is_file():
            raise ConfigError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")
        return from_string(res.read_text(), source=spec)
    path = Path(spec)
    if not path.is_file():
        raise ConfigError(f"config file {spec} not found")
    return from_string(path.read_text(), source=spec)


def save(cfg: ExperimentConfig, path) -> None:
    Path(path).write_text(to_string(cfg))
