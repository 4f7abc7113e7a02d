"""Service proxies (client side) and skeletons (server side)."""

import itertools
import threading
from concurrent.futures import Future
from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np
import structlog

from src.middleware.binding import Binding, Incoming, channel
from src.middleware.codec import MessageKind, WireMessage
from src.middleware.registry import Endpoint, ServiceRegistry, get_registry
from src.middleware.service import ServiceDescriptor
from src.runtime.tag import Duration, ms
from src.runtime.timeline import Priority

logger = structlog.get_logger(__name__)

ProcessingMode = Literal["single", "racing"]


@dataclass(frozen=True)
class Outgoing:
    """A handler result with an explicit send time (true time, ns)."""

    payload: bytes
    send_time: int | None = None


Handler = Callable[[Incoming], "Future | bytes | Outgoing"]


def resolved(value) -> Future:
    future = Future()
    future.set_result(value)
    return future


class ServiceProxy:
    """Client-side stand-in for a remote service instance."""

    def __init__(self, binding: Binding, service_id: int, registry: ServiceRegistry | None = None):
        registry = registry or get_registry()
        self.descriptor, self.endpoint = registry.lookup(service_id)
        self.binding = binding
        self._lock = threading.Lock()
        self._ids = itertools.count(1)
        self._calls: dict[int, Future] = {}
        self._handlers: dict[int, list[Callable[[Incoming], None]]] = {}
        binding.attach(self)

    @property
    def service_id(self) -> int:
        return self.descriptor.service_id

    @property
    def channel(self):
        return channel(self.endpoint, self.binding.name)

    def reserve_call_id(self) -> int:
        with self._lock:
            return next(self._ids)

    def call(
        self,
        method_id: int,
        args: bytes = b"",
        *,
        call_id: int | None = None,
        send_time: int | None = None,
    ) -> Future:
        """Send a request; the future resolves with the matching response as an Incoming."""
        if method_id not in {m.method_id for m in self.descriptor.all_methods}:
            raise ValueError(f"service 0x{self.service_id:04x} has no method 0x{method_id:04x}")
        call_id = self.reserve_call_id() if call_id is None else call_id
        future: Future = Future()
        with self._lock:
            if call_id in self._calls:
                raise ValueError(f"call id {call_id} is already outstanding")
            self._calls[call_id] = future
        message = WireMessage(self.service_id, method_id, call_id, MessageKind.REQUEST, args)
        try:
            self.binding.send(message, self.endpoint.binding, self.channel, send_time)
        except Exception:
            with self._lock:
                self._calls.pop(call_id, None)
            raise
        return future

    def subscribe(self, event_id: int, handler: Callable[[Incoming], None]) -> None:
        if event_id not in {e.event_id for e in self.descriptor.all_events}:
            raise ValueError(f"service 0x{self.service_id:04x} has no event 0x{event_id:04x}")
        self._handlers.setdefault(event_id, []).append(handler)
        server = self.binding.network.binding(self.endpoint.binding)
        server.skeleton(self.service_id).add_subscriber(self.binding.name)

    @property
    def outstanding(self) -> int:
        with self._lock:
            return len(self._calls)

    def deliver(self, incoming: Incoming) -> None:
        message = incoming.message
        if message.kind is MessageKind.RESPONSE:
            with self._lock:
                future = self._calls.pop(message.call_id, None)
            if future is None:
                logger.warning("unmatched_response", binding=self.binding.name, call_id=message.call_id)
                return
            future.set_result(incoming)
            return
        for handler in self._handlers.get(message.method_or_event_id, ()):
            handler(incoming)


class ServiceSkeleton:
    """Server-side dispatcher for one offered service instance.

    In ``single`` mode requests are handled one at a time in arrival order.
    In ``racing`` mode every request is handled after a seeded wake-up
    jitter, so requests arriving together run in an arbitrary order.
    """

    def __init__(
        self,
        binding: Binding,
        descriptor: ServiceDescriptor,
        *,
        instance: int = 1,
        mode: ProcessingMode = "single",
        seed: int = 0,
        max_jitter: Duration = ms(1),
        registry: ServiceRegistry | None = None,
    ):
        if mode not in ("single", "racing"):
            raise ValueError(f"unknown processing mode: {mode}")
        self.binding = binding
        self.descriptor = descriptor
        self.endpoint = Endpoint(binding.name, descriptor.service_id, instance)
        self.mode = mode
        self.max_jitter = max_jitter
        self.registry = registry or get_registry()
        self._rng = np.random.default_rng([seed, descriptor.service_id])
        self._handlers: dict[int, Handler] = {}
        self._subscribers: list[str] = []
        self._sessions = itertools.count(1)

    def offer(self) -> "ServiceSkeleton":
        self.binding.host(self)
        self.registry.register_service(self.descriptor, self.endpoint)
        return self

    def bind(self, method_id: int, handler: Handler) -> None:
        if method_id not in {m.method_id for m in self.descriptor.all_methods}:
            raise ValueError(f"service 0x{self.descriptor.service_id:04x} has no method 0x{method_id:04x}")
        self._handlers[method_id] = handler

    def add_subscriber(self, binding_name: str) -> None:
        if binding_name not in self._subscribers:
            self._subscribers.append(binding_name)

    @property
    def subscribers(self) -> list[str]:
        return list(self._subscribers)

    def reserve_session(self) -> int:
        return next(self._sessions)

    def notify(
        self,
        event_id: int,
        payload: bytes = b"",
        *,
        session: int | None = None,
        send_time: int | None = None,
    ) -> int:
        """Publish a notification to every subscriber; returns the session id used."""
        session = self.reserve_session() if session is None else session
        message = WireMessage(self.descriptor.service_id, event_id, session, MessageKind.NOTIFICATION, payload)
        self.binding.publish(message, self.subscribers, channel(self.endpoint), send_time)
        return session

    def deliver(self, incoming: Incoming) -> None:
        if self.mode == "racing":
            jitter = int(self._rng.integers(0, self.max_jitter, endpoint=True))
            self.binding.network.timeline.call_at(
                incoming.arrival_time + jitter, lambda: self.dispatch(incoming), Priority.NETWORK
            )
        else:
            self.dispatch(incoming)

    def dispatch(self, incoming: Incoming) -> None:
        """Invoke the bound handler; the response goes out when its future resolves."""
        method_id = incoming.message.method_or_event_id
        handler = self._handlers.get(method_id)
        if handler is None:
            logger.warning("unbound_method", endpoint=str(self.endpoint), method=method_id)
            return
        result = handler(incoming)
        future = result if isinstance(result, Future) else resolved(result)
        future.add_done_callback(lambda done: self._respond(incoming, done))

    def _respond(self, incoming: Incoming, future: Future) -> None:
        if future.cancelled():
            logger.debug("response_suppressed", endpoint=str(self.endpoint), call_id=incoming.call_id)
            return
        if future.exception() is not None:
            logger.error(
                "handler_failed",
                endpoint=str(self.endpoint),
                call_id=incoming.call_id,
                error=str(future.exception()),
            )
            return
        result = future.result()
        if not isinstance(result, Outgoing):
            result = Outgoing(bytes(result))
        message = WireMessage(
            self.descriptor.service_id,
            incoming.message.method_or_event_id,
            incoming.call_id,
            MessageKind.RESPONSE,
            result.payload,
        )
        self.binding.send(message, incoming.peer, channel(self.endpoint, incoming.peer), result.send_time)
