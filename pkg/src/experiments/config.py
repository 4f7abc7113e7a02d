"""Experiment configuration: CLI flags layered over an optional key=value file."""

from pathlib import Path
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator

from src.config import settings
from src.errors import ConfigError
from src.middleware.transport import LatencyModel, parse_latency_model
from src.runtime.tag import Duration, ms, parse_duration
from src.runtime.timeline import ClockMode

DEFAULT_DEADLINES = (ms(5), ms(25), ms(25), ms(5))


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    demo: Literal["counter", "brake"] = "brake"
    mode: Literal["naive", "reactor"] = "reactor"
    frames: int = Field(default=1000, ge=1)
    trials: int = Field(default=1, ge=1)
    seed: int = 0
    period: Duration = Field(default=ms(50), gt=0)
    deadlines: tuple[Duration, Duration, Duration, Duration] = DEFAULT_DEADLINES
    max_latency: Duration = Field(default=ms(5), ge=0)
    max_skew: Duration = Field(default=0, ge=0)
    latency_model: str = "uniform:0ms:5ms"
    clock: ClockMode = Field(default_factory=lambda: settings.default_clock)
    out: Path | None = None
    executors: int = Field(default_factory=lambda: settings.default_executors, ge=1)

    @field_validator("period", "max_latency", "max_skew", mode="before")
    @classmethod
    def _duration(cls, value):
        return parse_duration(value) if isinstance(value, str) else value

    @field_validator("deadlines", mode="before")
    @classmethod
    def _deadlines(cls, value):
        if isinstance(value, str):
            value = [part for part in value.split(",") if part.strip()]
        items = tuple(parse_duration(v) if isinstance(v, str) else v for v in value)
        if len(items) != 4:
            raise ValueError(f"expected four deadlines, got {len(items)}")
        if any(d <= 0 for d in items):
            raise ValueError("deadlines must be positive")
        return items

    @field_validator("latency_model")
    @classmethod
    def _latency_model(cls, value: str) -> str:
        parse_latency_model(value)
        return value

    @property
    def latency(self) -> LatencyModel:
        return parse_latency_model(self.latency_model)


def _normalize(key: str) -> str:
    return key.strip().lstrip("-").replace("-", "_")


def read_config_file(path: Path) -> dict[str, str]:
    """Flat ``key=value`` lines; ``#`` starts a comment."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    values: dict[str, str] = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"{path}:{number}: expected key=value, got {raw!r}")
        values[_normalize(key)] = value.strip()
    return values


def parse_config(overrides: dict[str, Any] | None = None, config_file: Path | None = None) -> ExperimentConfig:
    """File values first, then every non-None override on top."""
    values: dict[str, Any] = read_config_file(config_file) if config_file else {}
    for key, value in (overrides or {}).items():
        if value is not None:
            values[_normalize(key)] = value
    try:
        return ExperimentConfig(**values)
    except ValidationError as exc:
        problems = "; ".join(
            f"{'.'.join(str(p) for p in err['loc']) or 'config'}: {err['msg']}" for err in exc.errors()
        )
        raise ConfigError(problems) from exc
