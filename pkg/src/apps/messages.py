"""Payload types of the brake assistant and the service interfaces both demos use."""

import hashlib
import struct
from dataclasses import dataclass

from src.middleware.service import EventSpec, MethodSpec, ServiceDescriptor

FRAME_PAYLOAD_SIZE = 32

_FRAME = struct.Struct(">I")
_LANE = struct.Struct(">I4i")
_VEHICLES = struct.Struct(">IH")
_BRAKE = struct.Struct(">I?")


def digest_expand(seq: int) -> bytes:
    """Synthetic image content of frame ``seq``."""
    return hashlib.blake2b(seq.to_bytes(8, "big"), digest_size=FRAME_PAYLOAD_SIZE).digest()


@dataclass(frozen=True)
class Frame:
    seq: int
    payload: bytes = b""

    def __post_init__(self):
        if not self.payload:
            object.__setattr__(self, "payload", digest_expand(self.seq))

    @property
    def intact(self) -> bool:
        return self.payload == digest_expand(self.seq)

    def to_bytes(self) -> bytes:
        return _FRAME.pack(self.seq) + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "Frame":
        if len(data) != _FRAME.size + FRAME_PAYLOAD_SIZE:
            raise ValueError(f"frame of {len(data)} bytes")
        (seq,) = _FRAME.unpack_from(data)
        return cls(seq, bytes(data[_FRAME.size:]))


@dataclass(frozen=True)
class LaneInfo:
    source_seq: int
    box: tuple[int, int, int, int]

    def to_bytes(self) -> bytes:
        return _LANE.pack(self.source_seq, *self.box)

    @classmethod
    def from_bytes(cls, data: bytes) -> "LaneInfo":
        seq, *box = _LANE.unpack(data)
        return cls(seq, tuple(box))


@dataclass(frozen=True)
class VehicleList:
    source_seq: int
    distances: tuple[float, ...] = ()

    def to_bytes(self) -> bytes:
        head = _VEHICLES.pack(self.source_seq, len(self.distances))
        return head + struct.pack(f">{len(self.distances)}d", *self.distances)

    @classmethod
    def from_bytes(cls, data: bytes) -> "VehicleList":
        seq, count = _VEHICLES.unpack_from(data)
        expected = _VEHICLES.size + 8 * count
        if len(data) != expected:
            raise ValueError(f"vehicle list of {len(data)} bytes, expected {expected}")
        return cls(seq, struct.unpack_from(f">{count}d", data, _VEHICLES.size))


@dataclass(frozen=True)
class BrakeDecision:
    source_seq: int
    brake: bool

    def to_bytes(self) -> bytes:
        return _BRAKE.pack(self.source_seq, self.brake)

    @classmethod
    def from_bytes(cls, data: bytes) -> "BrakeDecision":
        seq, brake = _BRAKE.unpack(data)
        return cls(seq, brake)


# ── service interfaces ──

NOTIFY = 0x8001

CAMERA_SERVICE = ServiceDescriptor(0x1001, events=(EventSpec(NOTIFY, "frame"),), name="VideoProvider")
FRAME_SERVICE = ServiceDescriptor(0x1002, events=(EventSpec(NOTIFY, "frame"),), name="VideoAdapter")
LANE_SERVICE = ServiceDescriptor(0x1003, events=(EventSpec(NOTIFY, "lane"),), name="Preprocessing")
VEHICLE_SERVICE = ServiceDescriptor(0x1004, events=(EventSpec(NOTIFY, "vehicles"),), name="ComputerVision")
BRAKE_SERVICE = ServiceDescriptor(0x1005, events=(EventSpec(NOTIFY, "brake"),), name="EmergencyBrake")

SET_VALUE, ADD, GET_VALUE = 0x0001, 0x0002, 0x0003
COUNTER_SERVICE = ServiceDescriptor(
    0x2001,
    methods=(MethodSpec(SET_VALUE, "set_value"), MethodSpec(ADD, "add"), MethodSpec(GET_VALUE, "get_value")),
    name="Counter",
)

_INT = struct.Struct(">q")


def pack_int(value: int) -> bytes:
    return _INT.pack(value)


def unpack_int(data: bytes) -> int:
    return _INT.unpack(data)[0] if data else 0
