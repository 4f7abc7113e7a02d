"""Service registry: maps service ids to the endpoint currently offering them."""

import threading
from dataclasses import dataclass

import structlog

from src.errors import ServiceNotFound
from src.middleware.service import ServiceDescriptor

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class Endpoint:
    """Where a service skeleton lives: the binding that hosts it."""

    binding: str
    service_id: int
    instance: int = 1

    def __str__(self) -> str:
        return f"{self.binding}/0x{self.service_id:04x}.{self.instance}"


class ServiceRegistry:
    """In-process service discovery; the last registration for an id wins."""

    def __init__(self):
        self._lock = threading.Lock()
        self._services: dict[int, tuple[ServiceDescriptor, Endpoint]] = {}

    def register_service(self, descriptor: ServiceDescriptor, endpoint: Endpoint) -> None:
        with self._lock:
            previous = self._services.get(descriptor.service_id)
            self._services[descriptor.service_id] = (descriptor, endpoint)
        if previous is not None and previous[1] != endpoint:
            logger.info("service_rebound", service=str(endpoint), previous=str(previous[1]))

    def discover(self, service_id: int) -> Endpoint:
        return self.lookup(service_id)[1]

    def lookup(self, service_id: int) -> tuple[ServiceDescriptor, Endpoint]:
        with self._lock:
            entry = self._services.get(service_id)
        if entry is None:
            raise ServiceNotFound(service_id)
        return entry

    def unregister(self, service_id: int) -> None:
        with self._lock:
            self._services.pop(service_id, None)

    @property
    def services(self) -> list[int]:
        with self._lock:
            return sorted(self._services)


_registry: ServiceRegistry | None = None


def get_registry() -> ServiceRegistry:
    """Lazy process-wide registry for code that does not pass one explicitly."""
    global _registry
    if _registry is None:
        _registry = ServiceRegistry()
    return _registry
