"""Tests for the wire codec and its tag trailer."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from src.errors import MalformedMessage
from src.middleware.codec import HEADER_SIZE, TRAILER_SIZE, MessageKind, WireMessage, decode, encode
from src.runtime.tag import Tag

trailers = st.none() | st.builds(Tag, st.integers(0, 2**64 - 1), st.integers(0, 2**32 - 1))
messages = st.builds(
    WireMessage,
    service_id=st.integers(0, 0xFFFF),
    method_or_event_id=st.integers(0, 0xFFFF),
    call_id=st.integers(0, 2**32 - 1),
    kind=st.sampled_from(MessageKind),
    payload=st.binary(max_size=64),
    tag_trailer=trailers,
)


@settings(max_examples=10_000, deadline=None)
@given(messages)
def test_round_trip(msg):
    data = encode(msg)
    assert len(data) == HEADER_SIZE + len(msg.payload) + (TRAILER_SIZE if msg.tag_trailer else 0)
    assert decode(data) == msg


@settings(max_examples=500, deadline=None)
@given(messages)
def test_every_truncation_rejected(msg):
    data = encode(msg)
    for size in range(len(data)):
        with pytest.raises(MalformedMessage):
            decode(data[:size])


@given(messages)
def test_legacy_receiver_ignores_trailer(msg):
    legacy = decode(encode(msg), read_trailer=False)
    assert legacy == msg.with_trailer(None)


def test_empty_payload_with_trailer():
    msg = WireMessage(0x1001, 0x8001, 7, MessageKind.NOTIFICATION, b"", Tag(130_000_000, 0))
    data = encode(msg)
    assert len(data) == HEADER_SIZE + TRAILER_SIZE
    assert decode(data).tag_trailer == Tag(130_000_000, 0)


def test_extra_bytes_rejected():
    data = encode(WireMessage(1, 2, 3, MessageKind.REQUEST, b"abc"))
    with pytest.raises(MalformedMessage):
        decode(data + b"\x00")


def test_unknown_kind_rejected():
    data = bytearray(encode(WireMessage(1, 2, 3, MessageKind.REQUEST)))
    data[8] = 9
    with pytest.raises(MalformedMessage):
        decode(bytes(data))


def test_out_of_range_field():
    with pytest.raises(MalformedMessage):
        encode(WireMessage(0x10000, 0, 0, MessageKind.REQUEST))


def test_header_layout_is_fixed():
    data = encode(WireMessage(0x1234, 0x0001, 2, MessageKind.REQUEST))
    assert data == bytes.fromhex("1234 0001 00000002 00 00 00000000")
    assert len(data) == 14


def test_trailer_layout_is_fixed():
    data = encode(WireMessage(0x1234, 0x0001, 2, MessageKind.RESPONSE, b"\xab", Tag(1, 0)))
    assert data[:2] == bytes.fromhex("1234")
    assert data[2:4] == bytes.fromhex("0001")
    assert data[4:8] == bytes.fromhex("00000002")
    assert data[8] == MessageKind.RESPONSE
    assert data[9] == 0x01
    assert data[10:14] == bytes.fromhex("00000001")
    assert data[14:15] == b"\xab"
    assert data.endswith(bytes.fromhex("0000000000000001 00000000"))
    assert len(data) == 14 + 1 + 12
