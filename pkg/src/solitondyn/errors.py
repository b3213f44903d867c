"""Exception hierarchy.

Every error carries an ``exit_code`` used by the command line tool, and
propagation-time errors additionally carry the step index at which the
failing monitor fired.
"""

from __future__ import annotations


class SolitonError(Exception):
    exit_code = 1

    def __init__(self, message: str, *, step: int | None = None, monitor: str | None = None):
        super().__init__(message)
        self.step = step
        self.monitor = monitor

    def as_record(self) -> dict:
        rec = {"error": type(self).__name__, "code": self.exit_code, "message": str(self)}
        if self.monitor is not None:
            rec["monitor"] = self.monitor
        if self.step is not None:
            rec["step"] = self.step
        return rec


class ConfigError(SolitonError, ValueError):
    exit_code = 3


class AssumptionViolation(SolitonError):
    exit_code = 4


class NoConvergence(SolitonError):
    exit_code = 5


class CollapseDetected(SolitonError):
    exit_code = 6


class InitialDataError(SolitonError):
    exit_code = 7


class UnderResolved(InitialDataError):
    pass


class TooCloseToBoundary(InitialDataError):
    pass


class PhaseUnderResolved(InitialDataError):
    pass


class BoundUnachievable(InitialDataError):
    pass


class MonitorError(SolitonError):
    """A propagation monitor tripped."""

    exit_code = 8


class ChargeDrift(MonitorError):
    exit_code = 8


class EnergyDrift(MonitorError):
    exit_code = 9


class BoundaryMassExceeded(MonitorError):
    exit_code = 10


class SpectralTailExceeded(MonitorError):
    exit_code = 11


class BlowupDetected(MonitorError):
    exit_code = 12


class EscapeDetected(SolitonError):
    exit_code = 13


class TimeMismatch(SolitonError):
    exit_code = 14


class InsufficientPoints(SolitonError):
    exit_code = 15


EXIT_CODES = {
    cls.__name__: cls.exit_code
    for cls in (
        ConfigError, AssumptionViolation, NoConvergence, CollapseDetected,
        UnderResolved, TooCloseToBoundary, PhaseUnderResolved, BoundUnachievable,
        ChargeDrift, EnergyDrift, BoundaryMassExceeded, SpectralTailExceeded,
        BlowupDetected, EscapeDetected, TimeMismatch, InsufficientPoints,
    )
}
