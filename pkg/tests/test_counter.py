"""Tests for the counter service demo."""

import pytest

from src.apps.counter import counter_demo, enumerate_counter_outcomes, naive_counter, reactor_counter
from src.runtime.trace import Trace


def test_all_interleavings():
    outcomes = enumerate_counter_outcomes()
    assert len(outcomes) == 6
    assert set(outcomes) == {0, 1, 2, 3}


def test_naive_results_depend_on_timing():
    values = {naive_counter(seed) for seed in range(1000)}
    assert len(values) >= 2
    assert values <= {0, 1, 2, 3}


def test_naive_is_reproducible_per_seed():
    assert [naive_counter(s) for s in range(20)] == [naive_counter(s) for s in range(20)]


def test_serialized_client_always_reads_three():
    assert {naive_counter(seed, serialized=True) for seed in range(50)} == {3}


def test_reactor_always_reads_three():
    assert {counter_demo("reactor", seed) for seed in range(1000)} == {3}


@pytest.mark.parametrize("executors", [1, 2, 4])
def test_reactor_trace_is_independent_of_executors(executors):
    value, swcs = reactor_counter(7, executors=executors)
    reference_value, reference = reactor_counter(7, executors=1)
    assert value == reference_value == 3
    assert Trace.merge([s.trace for s in swcs]) == Trace.merge([s.trace for s in reference])


def test_unknown_mode():
    with pytest.raises(ValueError):
        counter_demo("eventual")


def test_naive_counter_on_the_wall_clock():
    assert counter_demo("naive", 3, clock="real-time") in {0, 1, 2, 3}
