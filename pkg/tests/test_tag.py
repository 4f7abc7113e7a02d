"""Tests for tags, durations and duration parsing."""

import pytest
from hypothesis import given
from hypothesis import strategies as st

from src.runtime.tag import ZERO, Tag, format_duration, ms, parse_duration, us

tags = st.builds(Tag, st.integers(0, 10**12), st.integers(0, 1000))
durations = st.integers(0, 10**9)


def test_order_is_lexicographic():
    assert Tag(1, 5) < Tag(2, 0)
    assert Tag(2, 0) < Tag(2, 1)
    assert ZERO == Tag(0, 0)


def test_positive_delay_resets_microstep():
    assert Tag(ms(100), 3).delay(ms(25)) == Tag(ms(125), 0)


def test_zero_delay_advances_microstep():
    assert Tag(ms(100), 3).delay(0) == Tag(ms(100), 4)


def test_negative_values_rejected():
    with pytest.raises(ValueError):
        Tag(-1, 0)
    with pytest.raises(ValueError):
        Tag(0, 0).delay(-1)


@given(tags, durations)
def test_delay_never_goes_back(tag, d):
    assert tag.delay(d) > tag


@given(tags, tags, durations)
def test_delay_is_monotonic(a, b, d):
    if a <= b:
        assert a.delay(d) <= b.delay(d)


@given(tags, tags, tags)
def test_order_is_transitive(a, b, c):
    if a <= b and b <= c:
        assert a <= c


@pytest.mark.parametrize(
    "text, expected",
    [("5ms", ms(5)), ("250us", us(250)), ("1.5s", 1_500_000_000), ("42", 42), ("0ms", 0), (" 7 ms ", ms(7))],
)
def test_parse_duration(text, expected):
    assert parse_duration(text) == expected


@pytest.mark.parametrize("text", ["", "ms", "-5ms", "5 minutes", "1e3ms"])
def test_parse_duration_rejects(text):
    with pytest.raises(ValueError):
        parse_duration(text)


def test_format_duration():
    assert format_duration(ms(75)) == "75ms"
    assert format_duration(1_500) == "1500ns"
    assert format_duration(0) == "0ns"
    assert str(Tag(ms(130), 0)) == "(130ms, 0)"
