"""Wire codec with an optional tag trailer.

Layout, big-endian:

    service_id:2 | id:2 | call_id:4 | kind:1 | flags:1 | payload_len:4 | payload | [time_ns:8 | microstep:4]

Bit 0 of ``flags`` marks the trailer. A receiver that does not know about the
trailer still reads header and payload unchanged.
"""

import struct
from dataclasses import dataclass
from enum import IntEnum

from src.errors import MalformedMessage
from src.runtime.tag import Tag

_HEADER = struct.Struct(">HHIBBI")
_TRAILER = struct.Struct(">QI")
HEADER_SIZE = _HEADER.size
TRAILER_SIZE = _TRAILER.size
FLAG_TRAILER = 0x01


class MessageKind(IntEnum):
    REQUEST = 0
    RESPONSE = 1
    NOTIFICATION = 2


@dataclass(frozen=True, slots=True)
class WireMessage:
    service_id: int
    method_or_event_id: int
    call_id: int
    kind: MessageKind
    payload: bytes = b""
    tag_trailer: Tag | None = None

    def with_trailer(self, tag: Tag | None) -> "WireMessage":
        return WireMessage(
            self.service_id, self.method_or_event_id, self.call_id, self.kind, self.payload, tag
        )


def encode(msg: WireMessage) -> bytes:
    if len(msg.payload) >= 1 << 32:
        raise MalformedMessage("payload too large")
    flags = FLAG_TRAILER if msg.tag_trailer is not None else 0
    try:
        parts = [
            _HEADER.pack(
                msg.service_id, msg.method_or_event_id, msg.call_id, int(msg.kind), flags, len(msg.payload)
            ),
            msg.payload,
        ]
        if msg.tag_trailer is not None:
            parts.append(_TRAILER.pack(msg.tag_trailer.time, msg.tag_trailer.microstep))
    except struct.error as exc:
        raise MalformedMessage(f"field out of range: {exc}") from exc
    return b"".join(parts)


def decode(data: bytes, read_trailer: bool = True) -> WireMessage:
    """Decode one message; ``read_trailer=False`` behaves like a legacy receiver."""
    if len(data) < HEADER_SIZE:
        raise MalformedMessage(f"truncated header: {len(data)} bytes")
    service_id, ident, call_id, kind, flags, length = _HEADER.unpack_from(data)
    try:
        kind = MessageKind(kind)
    except ValueError:
        raise MalformedMessage(f"unknown message kind {kind}") from None
    body_end = HEADER_SIZE + length
    has_trailer = bool(flags & FLAG_TRAILER)
    expected = body_end + (TRAILER_SIZE if has_trailer else 0)
    if len(data) != expected:
        raise MalformedMessage(f"expected {expected} bytes, got {len(data)}")
    payload = bytes(data[HEADER_SIZE:body_end])
    tag = None
    if has_trailer and read_trailer:
        time_ns, microstep = _TRAILER.unpack_from(data, body_end)
        tag = Tag(time_ns, microstep)
    return WireMessage(service_id, ident, call_id, kind, payload, tag)
