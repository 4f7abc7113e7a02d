"""Counter service demo: set_value(1), add(2) and get_value() issued together.

Read in program order the client should print 3. With a middleware that
handles each invocation on its own thread the result is any of 0, 1, 2 or 3.
Routed through method transactors the three calls share one tag and the
server handles them in its declared reaction order, so the result is 3.
"""

import itertools
from concurrent.futures import Future
from typing import Literal

import structlog

from src.apps.messages import ADD, COUNTER_SERVICE, GET_VALUE, SET_VALUE, pack_int, unpack_int
from src.middleware.binding import Binding, Incoming
from src.middleware.proxy import ServiceProxy, ServiceSkeleton
from src.middleware.registry import ServiceRegistry
from src.middleware.transport import FixedLatency, LinkModel, Network, UniformLatency
from src.runtime.reactor import Reactor, ReactionContext
from src.runtime.tag import Duration, ms
from src.runtime.timeline import ClockMode, Timeline
from src.transactors.config import TransactorConfig
from src.transactors.method import ClientMethodTransactor, ServerMethodTransactor
from src.transactors.swc import SwcRuntime, run_swcs

logger = structlog.get_logger(__name__)

_OPERATIONS = ("set_value", "add", "get_value")


def enumerate_counter_outcomes() -> list[int]:
    """Value read by get_value for each of the six handler orderings."""
    outcomes = []
    for order in itertools.permutations(_OPERATIONS):
        value, seen = 0, None
        for op in order:
            if op == "set_value":
                value = 1
            elif op == "add":
                value += 2
            else:
                seen = value
        outcomes.append(seen)
    return outcomes


# ── naive variant ──

class CounterServer:
    """Plain service implementation; handlers mutate shared state directly."""

    def __init__(self, skeleton: ServiceSkeleton):
        self.value = 0
        skeleton.bind(SET_VALUE, self._set_value)
        skeleton.bind(ADD, self._add)
        skeleton.bind(GET_VALUE, self._get_value)

    def _set_value(self, incoming: Incoming) -> bytes:
        self.value = unpack_int(incoming.payload)
        return b""

    def _add(self, incoming: Incoming) -> bytes:
        self.value += unpack_int(incoming.payload)
        return b""

    def _get_value(self, incoming: Incoming) -> bytes:
        return pack_int(self.value)


def naive_counter(seed: int, *, serialized: bool = False, clock: ClockMode = "simulated") -> int:
    timeline = Timeline(clock)
    network = Network(timeline, seed, LinkModel(FixedLatency(0)))
    registry = ServiceRegistry()
    skeleton = ServiceSkeleton(
        Binding("counter-server", network), COUNTER_SERVICE, mode="racing", seed=seed, registry=registry
    ).offer()
    CounterServer(skeleton)
    proxy = ServiceProxy(Binding("counter-client", network), COUNTER_SERVICE.service_id, registry)

    calls = [(SET_VALUE, pack_int(1)), (ADD, pack_int(2)), (GET_VALUE, b"")]
    if serialized:
        result: Future = Future()

        def chain(remaining):
            (method, args), *rest = remaining
            future = proxy.call(method, args)
            if rest:
                future.add_done_callback(lambda _: chain(rest))
            else:
                future.add_done_callback(lambda done: result.set_result(done.result()))

        chain(calls)
    else:
        result = [proxy.call(method, args) for method, args in calls][-1]
    timeline.run()
    return unpack_int(result.result().payload)


# ── reactor variant ──

class CounterLogic(Reactor):
    """Server logic; reactions are declared set, add, get and run in that order at one tag."""

    def __init__(self, name: str):
        super().__init__(name)
        self.value = 0
        self.requests = {op: self.input(f"{op}_request") for op in _OPERATIONS}
        self.replies = {op: self.output(f"{op}_reply") for op in _OPERATIONS}
        for op in _OPERATIONS:
            self.reaction(
                f"on_{op}",
                [self.requests[op]],
                getattr(self, f"_on_{op}"),
                effects=[self.replies[op]],
            )

    def _on_set_value(self, ctx: ReactionContext) -> None:
        calls = ctx.get(self.requests["set_value"])
        for call in calls:
            self.value = unpack_int(call.payload)
        ctx.set(self.replies["set_value"], tuple(call.reply(b"") for call in calls))

    def _on_add(self, ctx: ReactionContext) -> None:
        calls = ctx.get(self.requests["add"])
        for call in calls:
            self.value += unpack_int(call.payload)
        ctx.set(self.replies["add"], tuple(call.reply(b"") for call in calls))

    def _on_get_value(self, ctx: ReactionContext) -> None:
        calls = ctx.get(self.requests["get_value"])
        reply = pack_int(self.value)
        ctx.set(self.replies["get_value"], tuple(call.reply(reply) for call in calls))


class CounterClient(Reactor):
    def __init__(self, name: str):
        super().__init__(name)
        self.printed: int | None = None
        self.outputs = {op: self.output(op) for op in _OPERATIONS}
        self.result = self.input("result")
        self.reaction("issue", [self.startup], self._issue, effects=list(self.outputs.values()))
        self.reaction("print", [self.result], self._print)

    def _issue(self, ctx: ReactionContext) -> None:
        ctx.set(self.outputs["set_value"], pack_int(1))
        ctx.set(self.outputs["add"], pack_int(2))
        ctx.set(self.outputs["get_value"], b"")

    def _print(self, ctx: ReactionContext) -> None:
        self.printed = unpack_int(ctx.get(self.result).payload)
        logger.debug("counter_printed", value=self.printed, tag=str(ctx.tag))


def reactor_counter(
    seed: int,
    *,
    deadline: Duration = ms(5),
    max_latency: Duration = ms(5),
    executors: int = 1,
    clock: ClockMode = "simulated",
) -> tuple[int, list[SwcRuntime]]:
    timeline = Timeline(clock)
    network = Network(timeline, seed, LinkModel(UniformLatency(0, max_latency), max_latency))
    registry = ServiceRegistry()
    config = TransactorConfig(deadline=deadline, max_latency=max_latency)
    methods = dict(zip(_OPERATIONS, (SET_VALUE, ADD, GET_VALUE)))

    server = SwcRuntime("counter-server", network, registry=registry, executors=executors)
    skeleton = server.offer(COUNTER_SERVICE, mode="racing", seed=seed)
    logic = server.add(CounterLogic("counter"))
    for op, method_id in methods.items():
        tx = server.add(ServerMethodTransactor(f"server_{op}", skeleton, method_id, config))
        server.connect(tx.request, logic.requests[op])
        server.connect(logic.replies[op], tx.response)

    client = SwcRuntime("counter-client", network, registry=registry, executors=executors)
    proxy = client.proxy(COUNTER_SERVICE.service_id)
    app = client.add(CounterClient("client"))
    for op, method_id in methods.items():
        tx = client.add(ClientMethodTransactor(f"client_{op}", proxy, method_id, config))
        client.connect(app.outputs[op], tx.request)
        if op == "get_value":
            client.connect(tx.response, app.result)

    run_swcs([server, client])
    return app.printed, [server, client]


def counter_demo(
    mode: Literal["naive", "reactor"],
    seed: int = 0,
    *,
    serialized: bool = False,
    executors: int = 1,
    clock: ClockMode = "simulated",
) -> int:
    """Run the demo once and return the printed value."""
    if mode == "naive":
        value = naive_counter(seed, serialized=serialized, clock=clock)
    elif mode == "reactor":
        value, _ = reactor_counter(seed, executors=executors, clock=clock)
    else:
        raise ValueError(f"unknown mode: {mode}")
    logger.debug("counter_demo", mode=mode, seed=seed, value=value)
    return value
