"""A software component: one platform clock, one binding, one reactor program."""

from typing import Iterable

import structlog

from src.middleware.binding import Binding
from src.middleware.bypass import TimestampBypass
from src.middleware.proxy import ProcessingMode, ServiceProxy, ServiceSkeleton
from src.middleware.registry import ServiceRegistry, get_registry
from src.middleware.service import ServiceDescriptor
from src.middleware.transport import Network
from src.runtime.clock import Clock
from src.runtime.graph import ReactorGraph
from src.runtime.reactor import InputPort, OutputPort, Reactor
from src.runtime.scheduler import Scheduler
from src.runtime.tag import Duration, Tag
from src.runtime.trace import Trace

logger = structlog.get_logger(__name__)


class SwcRuntime:
    """Several components share one Network (and so one Timeline); each has its own scheduler."""

    def __init__(
        self,
        name: str,
        network: Network,
        *,
        offset: int = 0,
        max_skew: Duration | None = None,
        tagged: bool = True,
        executors: int = 1,
        stop: Tag | None = None,
        registry: ServiceRegistry | None = None,
    ):
        self.name = name
        self.network = network
        self.clock = Clock(network.timeline, offset, max_skew)
        self.bypass = TimestampBypass() if tagged else None
        self.binding = Binding(name, network, self.clock, self.bypass)
        self.registry = registry or get_registry()
        self.graph = ReactorGraph()
        self.executors = executors
        self.stop_tag = stop
        self._scheduler: Scheduler | None = None

    def add(self, reactor: Reactor) -> Reactor:
        return self.graph.add(reactor)

    def connect(self, source: OutputPort, dest: InputPort, delay: Duration | None = None) -> None:
        self.graph.connect(source, dest, delay)

    def offer(self, descriptor: ServiceDescriptor, *, mode: ProcessingMode = "single", seed: int = 0) -> ServiceSkeleton:
        return ServiceSkeleton(self.binding, descriptor, mode=mode, seed=seed, registry=self.registry).offer()

    def proxy(self, service_id: int) -> ServiceProxy:
        return ServiceProxy(self.binding, service_id, self.registry)

    @property
    def scheduler(self) -> Scheduler:
        if self._scheduler is None:
            self._scheduler = Scheduler(
                self.graph, clock=self.clock, executors=self.executors, stop=self.stop_tag, name=self.name
            )
        return self._scheduler

    @property
    def trace(self) -> Trace:
        return self.scheduler.trace

    def start(self) -> None:
        self.scheduler.start()

    def stop(self) -> None:
        if self._scheduler is not None:
            self._scheduler.stop()


def run_swcs(swcs: Iterable[SwcRuntime], until: int | None = None) -> list[Trace]:
    """Start every component, drive the shared timeline until idle, return per-component traces."""
    swcs = list(swcs)
    if not swcs:
        return []
    timeline = swcs[0].network.timeline
    for swc in swcs:
        swc.start()
    try:
        timeline.run(until)
    finally:
        for swc in swcs:
            swc.stop()
    logger.debug("swcs_done", components=[s.name for s in swcs], now=timeline.now())
    return [swc.trace for swc in swcs]
