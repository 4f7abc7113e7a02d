"""Superdense logical time: tags, durations and duration parsing."""

import re
from dataclasses import dataclass

NSEC = 1
USEC = 1_000
MSEC = 1_000_000
SEC = 1_000_000_000

_UNITS = {"ns": NSEC, "us": USEC, "ms": MSEC, "s": SEC}
_DURATION_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*(ns|us|ms|s)?\s*$")

# Durations are plain non-negative integers of nanoseconds.
Duration = int


def ms(value: float) -> Duration:
    return int(round(value * MSEC))


def us(value: float) -> Duration:
    return int(round(value * USEC))


def parse_duration(text: str | int) -> Duration:
    """Parse "5ms", "250us", "1.5s" or a bare integer of nanoseconds."""
    if isinstance(text, int):
        if text < 0:
            raise ValueError(f"negative duration: {text}")
        return text
    match = _DURATION_RE.match(text)
    if not match:
        raise ValueError(f"invalid duration: {text!r}")
    number, unit = match.groups()
    return int(round(float(number) * _UNITS[unit or "ns"]))


def format_duration(value: Duration) -> str:
    for unit in ("s", "ms", "us"):
        if value and value % _UNITS[unit] == 0:
            return f"{value // _UNITS[unit]}{unit}"
    return f"{value}ns"


@dataclass(frozen=True, order=True, slots=True)
class Tag:
    """A (time, microstep) pair; dataclass ordering gives the lexicographic total order."""

    time: int
    microstep: int = 0

    def __post_init__(self):
        if self.time < 0 or self.microstep < 0:
            raise ValueError(f"tag fields must be non-negative: {self.time}, {self.microstep}")

    def delay(self, duration: Duration) -> "Tag":
        """Positive durations reset the microstep; zero advances it."""
        if duration < 0:
            raise ValueError(f"negative delay: {duration}")
        if duration == 0:
            return Tag(self.time, self.microstep + 1)
        return Tag(self.time + duration, 0)

    def __str__(self) -> str:
        return f"({format_duration(self.time)}, {self.microstep})"


ZERO = Tag(0, 0)
