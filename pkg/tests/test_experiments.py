"""Tests for experiment configuration, the trial runner and the command line."""

import pytest
from typer.testing import CliRunner

from src.errors import ConfigError
from src.experiments.config import DEFAULT_DEADLINES, parse_config, read_config_file
from src.experiments.runner import (
    COUNTER_CSV_HEADER,
    naive_config,
    run_experiments,
    scale_deadlines,
    sweep,
    trial_trace,
)
from src.apps.stages import CSV_HEADER
from src.main import app
from src.middleware.transport import UniformLatency
from src.runtime.tag import ms


# ── configuration ──

def test_defaults():
    config = parse_config()
    assert (config.demo, config.mode) == ("brake", "reactor")
    assert config.frames == 1000 and config.trials == 1
    assert config.deadlines == DEFAULT_DEADLINES
    assert config.latency == UniformLatency(0, ms(5))


def test_flags_override_file(tmp_path):
    path = tmp_path / "run.conf"
    path.write_text("# lab setup\nmax-latency = 10ms\nframes=50  # short run\n\ndeadlines=1ms,2ms,3ms,4ms\n")
    config = parse_config({"max_latency": "5ms", "seed": None}, path)
    assert config.max_latency == ms(5)
    assert config.frames == 50
    assert config.seed == 0
    assert config.deadlines == (ms(1), ms(2), ms(3), ms(4))


@pytest.mark.parametrize(
    "overrides",
    [
        {"frames": 0},
        {"trials": -1},
        {"mode": "eventual"},
        {"latency_model": "gaussian:1ms"},
        {"deadlines": "1ms,2ms,3ms"},
        {"deadlines": "1ms,0ms,3ms,4ms"},
        {"max_skew": "soon"},
        {"colour": "blue"},
    ],
)
def test_invalid_values(overrides):
    with pytest.raises(ConfigError):
        parse_config(overrides)


def test_malformed_config_file(tmp_path):
    path = tmp_path / "bad.conf"
    path.write_text("frames=10\njust some words\n")
    with pytest.raises(ConfigError, match="bad.conf:2"):
        read_config_file(path)
    with pytest.raises(ConfigError):
        read_config_file(tmp_path / "missing.conf")


# ── runner ──

def test_reactor_brake_run_is_clean(tmp_path):
    out = tmp_path / "reactor.csv"
    report = run_experiments(parse_config({"frames": 40, "trials": 3, "out": out}), workers=1)
    assert report.exit_code == 0
    assert report.summary.max_rate == 0.0
    assert report.summary.dominant is None
    assert [t.seed for t in report.trials] == [0, 1, 2]
    assert all(t.worst_latency == ms(75) for t in report.trials)

    lines = out.read_text().splitlines()
    assert lines[0] == CSV_HEADER
    assert len(lines) == 4
    assert all(len(line.split(",")) == len(CSV_HEADER.split(",")) for line in lines)


def test_naive_brake_summary_matches_trials():
    config = parse_config({"mode": "naive", "frames": 1000, "trials": 4, "seed": 10})
    report = run_experiments(config, workers=1)
    rates = [t.error_rate for t in report.trials]
    summary = report.summary
    assert report.exit_code == 0
    assert summary.min_rate == min(rates) and summary.max_rate == max(rates)
    assert summary.min_rate <= summary.mean_rate <= summary.max_rate
    assert sum(summary.composition.values()) == sum(sum(t.errors.values()) for t in report.trials)


def test_naive_csv_is_reproducible():
    config = parse_config({"mode": "naive", "frames": 300, "trials": 3, "seed": 4})
    assert run_experiments(config, workers=1).csv() == run_experiments(config, workers=1).csv()


def test_process_pool_matches_serial_run():
    config = parse_config({"mode": "naive", "frames": 100, "trials": 3, "seed": 7})
    assert run_experiments(config, workers=2).csv() == run_experiments(config, workers=1).csv()


def test_clock_reaches_naive_runs():
    config = parse_config({"mode": "naive", "clock": "real-time"})
    assert naive_config(config, 0).clock == "real-time"
    assert naive_config(parse_config({"mode": "naive"}), 0).clock == "simulated"


def test_counter_reactor_reads_three():
    report = run_experiments(parse_config({"demo": "counter", "trials": 20}), workers=1)
    assert report.header == COUNTER_CSV_HEADER
    assert report.summary.values == {3: 20}
    assert report.exit_code == 0
    assert report.csv().splitlines()[1] == "0,0,3"


def test_trace_only_in_reactor_mode():
    assert len(trial_trace(parse_config({"frames": 5}))) > 0
    with pytest.raises(ValueError):
        trial_trace(parse_config({"mode": "naive"}))


def test_scale_deadlines():
    assert scale_deadlines(DEFAULT_DEADLINES, 2) == (ms(10), ms(50), ms(50), ms(10))
    assert scale_deadlines((3,), 0.1) == (1,)
    with pytest.raises(ValueError):
        scale_deadlines(DEFAULT_DEADLINES, 0)


def test_sweep_trades_latency_for_errors():
    tight, nominal = sweep(parse_config({"frames": 30}), [0.25, 1])
    assert nominal.worst_latency == ms(75)
    assert nominal.mean_error_rate == 0.0 and nominal.errors == {}
    assert tight.deadlines == scale_deadlines(DEFAULT_DEADLINES, 0.25)
    assert tight.mean_error_rate > 0
    assert "deadline_misses" in tight.errors


# ── command line ──

runner = CliRunner()


def test_cli_run_exit_codes(tmp_path):
    ok = runner.invoke(app, ["run", "--frames", "20", "--out", str(tmp_path / "a.csv")])
    assert ok.exit_code == 0, ok.output
    assert (tmp_path / "a.csv").exists()

    bad = runner.invoke(app, ["run", "--frames", "0"])
    assert bad.exit_code == 2

    naive = runner.invoke(app, ["run", "--mode", "naive", "--frames", "200", "--trials", "2"])
    assert naive.exit_code == 0, naive.output


def test_cli_run_reads_config_file(tmp_path):
    path = tmp_path / "counter.conf"
    path.write_text("demo=counter\ntrials=3\n")
    result = runner.invoke(app, ["run", "--config", str(path)])
    assert result.exit_code == 0, result.output


def test_cli_trace_is_stable(tmp_path):
    first = runner.invoke(app, ["--log-level", "WARNING", "trace", "--frames", "5", "--seed", "2"])
    second = runner.invoke(app, ["--log-level", "WARNING", "trace", "--frames", "5", "--seed", "2", "--executors", "4"])
    assert first.exit_code == 0 and second.exit_code == 0
    assert first.stdout == second.stdout
    assert first.stdout.count("\n") == len(trial_trace(parse_config({"frames": 5, "seed": 2})))

    out = tmp_path / "trace.log"
    written = runner.invoke(app, ["trace", "--frames", "5", "--seed", "2", "--out", str(out)])
    assert written.exit_code == 0
    assert out.read_text() == first.stdout


def test_cli_sweep():
    result = runner.invoke(app, ["sweep", "--factors", "1", "--frames", "10"])
    assert result.exit_code == 0, result.output
    assert "75ms" in result.stdout

    bad = runner.invoke(app, ["sweep", "--factors", "fast"])
    assert bad.exit_code == 2
