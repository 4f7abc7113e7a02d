"""Terminal rendering of experiment reports using Rich."""

from rich.console import Console
from rich.panel import Panel
from rich.table import Table

from src.experiments.runner import ExperimentReport, SweepPoint, resolve_output
from src.runtime.tag import format_duration

console = Console()
err_console = Console(stderr=True)


def render_report(report: ExperimentReport) -> None:
    """Per-trial table, then the summary and the error composition."""
    config = report.config
    table = Table(title=f"{config.demo} / {config.mode}, {config.trials} trial(s)", border_style="blue")
    for column in report.header.split(","):
        table.add_column(column, justify="right")
    for trial in report.trials:
        table.add_row(*trial.row.split(","))
    console.print(table)

    summary = report.summary
    lines = [f"[bold]{summary.line()}[/bold]"]
    if summary.composition:
        total = sum(summary.composition.values())
        for name, count in sorted(summary.composition.items(), key=lambda item: -item[1]):
            lines.append(f"  {name}: {count} ({count / total:.1%})")
        lines.append(f"[dim]dominant: {summary.dominant}[/dim]")
    style = "green" if report.exit_code == 0 else "red"
    console.print(Panel("\n".join(lines), title="summary", border_style=style))
    if config.out is not None:
        console.print(f"[dim]CSV written to {resolve_output(config.out)}[/dim]")


def render_sweep(points: list[SweepPoint]) -> None:
    table = Table(title="deadline sweep", border_style="blue")
    table.add_column("factor", justify="right")
    table.add_column("deadlines")
    table.add_column("worst e2e latency", justify="right")
    table.add_column("mean error rate", justify="right")
    table.add_column("dominant error")
    for point in points:
        dominant = max(point.errors.items(), key=lambda item: item[1])[0] if point.errors else "-"
        table.add_row(
            f"{point.factor:g}",
            "/".join(format_duration(d) for d in point.deadlines),
            format_duration(point.worst_latency) if point.worst_latency is not None else "-",
            f"{point.mean_error_rate:.6f}",
            dominant,
        )
    console.print(table)


def render_error(message: str, title: str = "error") -> None:
    err_console.print(Panel(f"[red]{message}[/red]", title=title, border_style="red"))
