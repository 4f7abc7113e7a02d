"""Per-component communication stack between proxies/skeletons and the network.

A tagged binding attaches the tag waiting in its timestamp bypass to every
outgoing message and stores the trailer of every incoming message in the
bypass. An untagged binding behaves like a stock middleware: it never
writes a trailer and never reads one.
"""

from dataclasses import dataclass
from typing import TYPE_CHECKING, Hashable

import structlog

from src.errors import BypassOccupied, MalformedMessage, ServiceNotFound
from src.middleware.bypass import TimestampBypass
from src.middleware.codec import MessageKind, WireMessage, decode, encode
from src.middleware.registry import Endpoint
from src.middleware.transport import Delivery, Network
from src.runtime.clock import Clock

if TYPE_CHECKING:
    from src.middleware.proxy import ServiceProxy, ServiceSkeleton

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class Incoming:
    """A decoded message together with where and when it arrived."""

    message: WireMessage
    peer: str
    arrival_time: int

    @property
    def payload(self) -> bytes:
        return self.message.payload

    @property
    def call_id(self) -> int:
        return self.message.call_id


def channel(endpoint: Endpoint, client: str | None = None) -> tuple[Endpoint, str | None]:
    """Bypass channel: method traffic is per (service, client); notifications per service."""
    return (endpoint, client)


class Binding:
    def __init__(
        self,
        name: str,
        network: Network,
        clock: Clock | None = None,
        bypass: TimestampBypass | None = None,
    ):
        self.name = name
        self.network = network
        self.clock = clock or Clock(network.timeline)
        self.bypass = bypass
        self.rejected = 0
        self._skeletons: dict[int, "ServiceSkeleton"] = {}
        self._proxies: dict[int, "ServiceProxy"] = {}
        network.attach(self)

    @property
    def tagged(self) -> bool:
        return self.bypass is not None

    def host(self, skeleton: "ServiceSkeleton") -> None:
        self._skeletons[skeleton.endpoint.service_id] = skeleton

    def skeleton(self, service_id: int) -> "ServiceSkeleton":
        try:
            return self._skeletons[service_id]
        except KeyError:
            raise ServiceNotFound(service_id) from None

    def attach(self, proxy: "ServiceProxy") -> None:
        if proxy.service_id in self._proxies:
            raise ValueError(f"{self.name} already has a proxy for service 0x{proxy.service_id:04x}")
        self._proxies[proxy.service_id] = proxy

    # ── outbound ──

    def send(self, message: WireMessage, dest: str, key: Hashable, send_time: int | None = None) -> Delivery:
        return self.publish(message, [dest], key, send_time)[0]

    def publish(
        self, message: WireMessage, dests: list[str], key: Hashable, send_time: int | None = None
    ) -> list[Delivery]:
        """Send one message to several bindings; the bypass is consulted once.

        A tagged binding with nothing waiting in the bypass sends the message
        untagged, as a plain handler's response would be.
        """
        if self.bypass is not None:
            message = message.with_trailer(self.bypass.discard(key, message.call_id))
        data = encode(message)
        when = self.clock.true_now() if send_time is None else send_time
        logger.debug(
            "message_sent",
            binding=self.name,
            kind=message.kind.name,
            call_id=message.call_id,
            dests=dests,
            trailer=str(message.tag_trailer) if message.tag_trailer else None,
        )
        return [self.network.send(self.name, dest, data, when) for dest in dests]

    # ── inbound ──

    def receive(self, data: bytes, arrival_time: int, source: str) -> None:
        """Network delivery callback."""
        try:
            message = decode(data, read_trailer=self.tagged)
            target, key = self._route(message, source)
            if message.tag_trailer is not None:
                self.bypass.put(key, message.call_id, message.tag_trailer)
        except (MalformedMessage, ServiceNotFound, BypassOccupied) as exc:
            self.rejected += 1
            logger.warning("message_rejected", binding=self.name, source=source, error=str(exc))
            return
        target.deliver(Incoming(message, source, arrival_time))
        if message.kind is MessageKind.NOTIFICATION and message.tag_trailer is not None:
            # subscribers run synchronously; a trailer nobody took would block the next session
            self.bypass.discard(key, message.call_id)

    def _route(self, message: WireMessage, source: str):
        if message.kind is MessageKind.REQUEST:
            skeleton = self.skeleton(message.service_id)
            return skeleton, channel(skeleton.endpoint, source)
        proxy = self._proxies.get(message.service_id)
        if proxy is None:
            raise ServiceNotFound(message.service_id)
        if message.kind is MessageKind.RESPONSE:
            return proxy, channel(proxy.endpoint, self.name)
        return proxy, channel(proxy.endpoint)
