"""In-process transport with injected latency.

Every (source, destination) pair of bindings is a link with its own seeded
generator, so a fixed seed yields the same delivery schedule on every run.
"""

import zlib
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Protocol

import numpy as np
import structlog

from src.runtime.tag import Duration, parse_duration
from src.runtime.timeline import Priority, Timeline

if TYPE_CHECKING:
    from src.middleware.binding import Binding

logger = structlog.get_logger(__name__)


class LatencyModel(Protocol):
    upper_bound: Duration

    def sample(self, rng: np.random.Generator, index: int) -> Duration: ...


@dataclass(frozen=True)
class FixedLatency:
    value: Duration

    @property
    def upper_bound(self) -> Duration:
        return self.value

    def sample(self, rng: np.random.Generator, index: int) -> Duration:
        return self.value


@dataclass(frozen=True)
class UniformLatency:
    low: Duration
    high: Duration

    def __post_init__(self):
        if not 0 <= self.low <= self.high:
            raise ValueError(f"invalid uniform latency range [{self.low}, {self.high}]")

    @property
    def upper_bound(self) -> Duration:
        return self.high

    def sample(self, rng: np.random.Generator, index: int) -> Duration:
        return int(rng.integers(self.low, self.high, endpoint=True))


@dataclass(frozen=True)
class TwoPointLatency:
    """Mostly ``normal``; ``spike`` with a probability or at chosen message indices."""

    normal: Duration
    spike: Duration
    probability: float = 0.0
    spike_at: frozenset[int] = frozenset()

    @property
    def upper_bound(self) -> Duration:
        return max(self.normal, self.spike)

    def sample(self, rng: np.random.Generator, index: int) -> Duration:
        if index in self.spike_at:
            return self.spike
        if self.probability and rng.random() < self.probability:
            return self.spike
        return self.normal


def parse_latency_model(spec: str) -> LatencyModel:
    """Parse ``fixed:5ms``, ``uniform:0ms:5ms``, ``twopoint:1ms:7ms:0.01`` or ``twopoint:1ms:7ms@12``."""
    kind, _, rest = spec.strip().partition(":")
    try:
        if kind == "fixed":
            return FixedLatency(parse_duration(rest))
        if kind == "uniform":
            low, high = rest.split(":")
            return UniformLatency(parse_duration(low), parse_duration(high))
        if kind == "twopoint":
            rest, _, at = rest.partition("@")
            normal, spike, *prob = rest.split(":")
            return TwoPointLatency(
                parse_duration(normal),
                parse_duration(spike),
                float(prob[0]) if prob else 0.0,
                frozenset(int(i) for i in at.split(",") if i),
            )
    except ValueError as exc:
        raise ValueError(f"invalid latency model {spec!r}: {exc}") from exc
    raise ValueError(f"unknown latency model {spec!r}")


@dataclass(frozen=True)
class LinkModel:
    latency: LatencyModel = FixedLatency(0)
    declared_bound: Duration = 0
    in_order: bool = True


@dataclass(frozen=True)
class Delivery:
    message: bytes
    send_time: int
    arrival_time: int


@dataclass
class Link:
    source: str
    dest: str
    model: LinkModel
    rng: np.random.Generator
    sent: int = 0
    last_arrival: int = 0
    max_latency: int = field(default=0)

    def transmit(self, message: bytes, send_time: int) -> Delivery:
        latency = self.model.latency.sample(self.rng, self.sent)
        if latency < 0:
            raise ValueError(f"negative latency sample on {self.source}->{self.dest}")
        self.sent += 1
        arrival = send_time + latency
        if self.model.in_order:
            arrival = max(arrival, self.last_arrival)
        self.last_arrival = max(self.last_arrival, arrival)
        self.max_latency = max(self.max_latency, arrival - send_time)
        return Delivery(message, send_time, arrival)


def transmit(link: Link, message: bytes, send_time: int) -> Delivery:
    return link.transmit(message, send_time)


class Network:
    """Named bindings connected by links; deliveries are timeline callbacks."""

    def __init__(self, timeline: Timeline, seed: int = 0, default: LinkModel | None = None):
        self.timeline = timeline
        self.seed = seed
        self.default = default or LinkModel()
        self._bindings: dict[str, "Binding"] = {}
        self._models: dict[tuple[str, str], LinkModel] = {}
        self._links: dict[tuple[str, str], Link] = {}

    def attach(self, binding: "Binding") -> None:
        if binding.name in self._bindings:
            raise ValueError(f"binding {binding.name} already attached")
        self._bindings[binding.name] = binding

    def binding(self, name: str) -> "Binding":
        return self._bindings[name]

    def set_link(self, source: str, dest: str, model: LinkModel) -> None:
        self._models[(source, dest)] = model
        self._links.pop((source, dest), None)

    def link(self, source: str, dest: str) -> Link:
        key = (source, dest)
        link = self._links.get(key)
        if link is None:
            entropy = [self.seed, zlib.crc32(source.encode()), zlib.crc32(dest.encode())]
            link = Link(source, dest, self._models.get(key, self.default), np.random.default_rng(entropy))
            self._links[key] = link
        return link

    @property
    def links(self) -> list[Link]:
        return list(self._links.values())

    def send(self, source: str, dest: str, message: bytes, send_time: int) -> Delivery:
        delivery = self.link(source, dest).transmit(message, send_time)
        receiver = self._bindings[dest]
        self.timeline.call_at(
            delivery.arrival_time,
            lambda: receiver.receive(message, delivery.arrival_time, source),
            Priority.NETWORK,
        )
        return delivery
