"""Runs seeded trials of a demo and aggregates them into CSV rows and a summary."""

from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import structlog

from src.apps.counter import counter_demo, reactor_counter
from src.apps.naive_pipeline import NaiveConfig, run_naive_pipeline
from src.apps.reactor_pipeline import ReactorConfig, run_reactor_pipeline
from src.apps.stages import CSV_HEADER
from src.config import settings
from src.experiments.config import ExperimentConfig
from src.runtime.tag import Duration
from src.runtime.trace import Trace

logger = structlog.get_logger(__name__)

COUNTER_CSV_HEADER = "trial,seed,value"
EXPECTED_COUNTER_VALUE = 3


@dataclass
class TrialResult:
    trial: int
    seed: int
    row: str
    error_rate: float = 0.0
    errors: dict[str, int] = field(default_factory=dict)
    value: int | None = None
    worst_latency: Duration | None = None


@dataclass
class Summary:
    trials: int
    min_rate: float
    mean_rate: float
    max_rate: float
    # error counter -> total over every trial
    composition: dict[str, int]
    values: dict[int, int] = field(default_factory=dict)

    @property
    def dominant(self) -> str | None:
        if not self.composition or not max(self.composition.values()):
            return None
        return max(self.composition.items(), key=lambda item: item[1])[0]

    def line(self) -> str:
        if self.values:
            dist = " ".join(f"{v}:{n}" for v, n in sorted(self.values.items()))
            return f"trials={self.trials} values {dist}"
        return (
            f"trials={self.trials} error_rate min={self.min_rate:.6f} "
            f"mean={self.mean_rate:.6f} max={self.max_rate:.6f}"
        )


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    trials: list[TrialResult]
    summary: Summary
    exit_code: int

    @property
    def header(self) -> str:
        return COUNTER_CSV_HEADER if self.config.demo == "counter" else CSV_HEADER

    def csv(self) -> str:
        return "".join(line + "\n" for line in [self.header, *(t.row for t in self.trials)])


# ── single trials ──

def reactor_config(config: ExperimentConfig, seed: int) -> ReactorConfig:
    return ReactorConfig(
        frames=config.frames,
        period=config.period,
        seed=seed,
        deadlines=config.deadlines,
        max_latency=config.max_latency,
        max_skew=config.max_skew,
        latency=config.latency,
        executors=config.executors,
        clock=config.clock,
    )


def naive_config(config: ExperimentConfig, seed: int) -> NaiveConfig:
    return NaiveConfig(
        frames=config.frames, period=config.period, seed=seed, latency=config.latency, clock=config.clock
    )


def run_trial(config: ExperimentConfig, trial: int) -> TrialResult:
    """One independent trial; its seed is ``config.seed + trial``."""
    seed = config.seed + trial
    if config.demo == "counter":
        value = counter_demo(config.mode, seed, executors=config.executors, clock=config.clock)
        return TrialResult(trial, seed, f"{trial},{seed},{value}", value=value)

    if config.mode == "naive":
        stats = run_naive_pipeline(naive_config(config, seed))
        latency = None
    else:
        result = run_reactor_pipeline(reactor_config(config, seed))
        stats, latency = result.stats, result.worst_latency
    errors = {name: count for name, count in stats.counters.items() if count}
    return TrialResult(
        trial, seed, stats.csv_row(trial, seed), stats.error_rate, errors, worst_latency=latency
    )


def trial_trace(config: ExperimentConfig) -> Trace:
    """Merged trace of one reactor-mode trial at ``config.seed``."""
    if config.mode != "reactor":
        raise ValueError("traces are only recorded in reactor mode")
    if config.demo == "counter":
        _, swcs = reactor_counter(config.seed, executors=config.executors, clock=config.clock)
        return Trace.merge([swc.trace for swc in swcs])
    return run_reactor_pipeline(reactor_config(config, config.seed)).trace


# ── batches ──

def summarize(config: ExperimentConfig, trials: Sequence[TrialResult]) -> Summary:
    rates = np.array([t.error_rate for t in trials], dtype=float)
    composition: Counter[str] = Counter()
    for t in trials:
        composition.update(t.errors)
    values = Counter(t.value for t in trials if t.value is not None)
    return Summary(
        trials=len(trials),
        min_rate=float(rates.min()),
        mean_rate=float(rates.mean()),
        max_rate=float(rates.max()),
        composition=dict(composition),
        values=dict(values),
    )


def exit_code(config: ExperimentConfig, trials: Sequence[TrialResult]) -> int:
    """Errors are the expected outcome in naive mode; in reactor mode any error fails the run."""
    if config.mode == "naive":
        return 0
    if config.demo == "counter":
        return 0 if all(t.value == EXPECTED_COUNTER_VALUE for t in trials) else 1
    return 0 if all(not t.errors for t in trials) else 1


def _run_all(config: ExperimentConfig, workers: int) -> list[TrialResult]:
    indices = range(config.trials)
    if workers > 1 and config.trials > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(run_trial, [config] * config.trials, indices))
    return [run_trial(config, i) for i in indices]


def run_experiments(config: ExperimentConfig, workers: int | None = None) -> ExperimentReport:
    """Run every trial, write the CSV when ``config.out`` is set and summarize."""
    workers = settings.trial_workers if workers is None else workers
    logger.info(
        "experiments_start", demo=config.demo, mode=config.mode, trials=config.trials, frames=config.frames
    )
    trials = _run_all(config, workers)
    for t in trials:
        logger.debug("trial_done", trial=t.trial, seed=t.seed, error_rate=t.error_rate, value=t.value)

    report = ExperimentReport(config, trials, summarize(config, trials), exit_code(config, trials))
    if config.out is not None:
        write_csv(report, config.out)
    logger.info("experiments_done", summary=report.summary.line(), exit_code=report.exit_code)
    return report


def resolve_output(path: Path) -> Path:
    """Relative output paths live under the configured output directory."""
    path = Path(path)
    return path if path.is_absolute() else settings.output_path / path


def write_csv(report: ExperimentReport, path: Path) -> Path:
    path = resolve_output(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(report.csv(), encoding="utf-8")
    logger.info("csv_written", path=str(path), rows=len(report.trials))
    return path


# ── deadline sweep ──

@dataclass
class SweepPoint:
    factor: float
    deadlines: tuple[Duration, ...]
    worst_latency: Duration | None
    mean_error_rate: float
    errors: dict[str, int]


def scale_deadlines(deadlines: Sequence[Duration], factor: float) -> tuple[Duration, ...]:
    if factor <= 0:
        raise ValueError(f"scale factor must be positive, got {factor}")
    return tuple(max(1, int(round(d * factor))) for d in deadlines)


def sweep(config: ExperimentConfig, factors: Sequence[float]) -> list[SweepPoint]:
    """Reactor brake pipeline at scaled deadlines: end-to-end latency against error rate."""
    points = []
    for factor in factors:
        scaled = config.model_copy(
            update={"deadlines": scale_deadlines(config.deadlines, factor), "demo": "brake", "mode": "reactor"}
        )
        trials = [run_trial(scaled, i) for i in range(scaled.trials)]
        summary = summarize(scaled, trials)
        latencies = [t.worst_latency for t in trials if t.worst_latency is not None]
        point = SweepPoint(
            factor=factor,
            deadlines=scaled.deadlines,
            worst_latency=max(latencies) if latencies else None,
            mean_error_rate=summary.mean_rate,
            errors=summary.composition,
        )
        logger.info("sweep_point", factor=factor, worst_latency=point.worst_latency, error_rate=point.mean_error_rate)
        points.append(point)
    return points
