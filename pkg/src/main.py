"""Entry point: run experiments, dump traces, sweep deadlines."""

import sys
from pathlib import Path
from typing import Optional

import typer

from src.config import settings
from src.errors import ConfigError, DeterminismError
from src.log import configure_logging

app = typer.Typer(help="Deterministic service-oriented middleware experiments", no_args_is_help=True)


def _overrides(**values) -> dict:
    return {key: value for key, value in values.items() if value is not None}


def _fail(exc: DeterminismError) -> None:
    from src.ui.cli import render_error

    if isinstance(exc, ConfigError):
        render_error(str(exc), title="invalid configuration")
        raise typer.Exit(code=2)
    render_error(str(exc))
    raise typer.Exit(code=1)


@app.callback()
def main(
    log_level: str = typer.Option(settings.log_level, "--log-level", help="structlog level"),
    log_json: bool = typer.Option(settings.log_json, "--log-json", help="Emit JSON log lines"),
):
    configure_logging(log_level, log_json)


@app.command()
def run(
    demo: Optional[str] = typer.Option(None, help="counter or brake"),
    mode: Optional[str] = typer.Option(None, help="naive or reactor"),
    frames: Optional[int] = typer.Option(None, help="Frames per trial"),
    trials: Optional[int] = typer.Option(None, help="Number of seeded trials"),
    seed: Optional[int] = typer.Option(None, help="Seed of trial 0"),
    period: Optional[str] = typer.Option(None, help="Camera period, e.g. 50ms"),
    deadlines: Optional[str] = typer.Option(None, help="VA,Pre,CV,EBA deadlines, e.g. 5ms,25ms,25ms,5ms"),
    max_latency: Optional[str] = typer.Option(None, help="Assumed latency bound L"),
    max_skew: Optional[str] = typer.Option(None, help="Assumed clock skew bound E"),
    latency_model: Optional[str] = typer.Option(None, help="fixed:X | uniform:A:B | twopoint:A:B[:p][@i,j]"),
    clock: Optional[str] = typer.Option(None, help="simulated or real-time"),
    out: Optional[Path] = typer.Option(None, help="CSV output file"),
    config: Optional[Path] = typer.Option(None, "--config", help="key=value config file"),
    executors: Optional[int] = typer.Option(None, help="Worker threads per scheduler"),
):
    """Run seeded trials and print the per-trial table and summary."""
    from src.experiments.config import parse_config
    from src.experiments.runner import run_experiments
    from src.ui.cli import render_report

    try:
        experiment = parse_config(
            _overrides(
                demo=demo, mode=mode, frames=frames, trials=trials, seed=seed, period=period,
                deadlines=deadlines, max_latency=max_latency, max_skew=max_skew,
                latency_model=latency_model, clock=clock, out=out, executors=executors,
            ),
            config,
        )
        report = run_experiments(experiment)
    except DeterminismError as exc:
        _fail(exc)
    render_report(report)
    raise typer.Exit(code=report.exit_code)


@app.command()
def trace(
    demo: str = typer.Option("brake", help="counter or brake"),
    frames: int = typer.Option(20, help="Frames to run"),
    seed: int = typer.Option(0, help="Trial seed"),
    executors: Optional[int] = typer.Option(None, help="Worker threads per scheduler"),
    config: Optional[Path] = typer.Option(None, "--config", help="key=value config file"),
    out: Optional[Path] = typer.Option(None, help="Write the trace here instead of stdout"),
):
    """Emit the line-delimited trace of one reactor-mode trial."""
    from src.experiments.config import parse_config
    from src.experiments.runner import trial_trace

    try:
        experiment = parse_config(
            _overrides(demo=demo, mode="reactor", frames=frames, seed=seed, executors=executors), config
        )
        recorded = trial_trace(experiment)
    except DeterminismError as exc:
        _fail(exc)
    if out is not None:
        out.write_text(recorded.export(), encoding="utf-8")
        typer.echo(f"{len(recorded)} records, digest {recorded.digest()}", err=True)
    else:
        sys.stdout.write(recorded.export())


@app.command()
def sweep(
    factors: str = typer.Option("0.25,0.5,1,2", help="Comma separated deadline scale factors"),
    frames: int = typer.Option(200, help="Frames per trial"),
    trials: int = typer.Option(1, help="Trials per factor"),
    seed: int = typer.Option(0, help="Seed of trial 0"),
    config: Optional[Path] = typer.Option(None, "--config", help="key=value config file"),
):
    """Scale every deadline and report end-to-end latency against error rate."""
    from src.experiments.config import parse_config
    from src.experiments.runner import sweep as run_sweep
    from src.ui.cli import render_sweep

    try:
        scales = [float(part) for part in factors.split(",") if part.strip()]
    except ValueError:
        _fail(ConfigError(f"invalid factors: {factors!r}"))
    try:
        experiment = parse_config(_overrides(frames=frames, trials=trials, seed=seed), config)
        points = run_sweep(experiment, scales)
    except ValueError as exc:
        _fail(exc if isinstance(exc, ConfigError) else ConfigError(str(exc)))
    except DeterminismError as exc:
        _fail(exc)
    render_sweep(points)


if __name__ == "__main__":
    app()
