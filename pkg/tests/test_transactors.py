"""Tests for transactors: safe tags, method and event paths, observable errors and fields."""

import pytest
from pydantic import ValidationError

from src.middleware.binding import Binding
from src.middleware.proxy import ServiceProxy
from src.middleware.registry import ServiceRegistry
from src.middleware.service import EventSpec, FieldSpec, MethodSpec, ServiceDescriptor
from src.middleware.transport import FixedLatency, LinkModel, Network, UniformLatency
from src.runtime.reactor import Reactor
from src.runtime.tag import Tag, ms
from src.runtime.timeline import Timeline
from src.transactors.base import Reply
from src.transactors.config import TransactorConfig, UntaggedPolicy, safe_tag
from src.transactors.event import ClientEventTransactor, ServerEventTransactor
from src.transactors.field import field_binding
from src.transactors.method import ClientMethodTransactor, ServerMethodTransactor
from src.transactors.swc import SwcRuntime, run_swcs

REVERSE, TICK = 1, 0x8001
SERVICE = ServiceDescriptor(0x0200, methods=(MethodSpec(REVERSE, "reverse"),), events=(EventSpec(TICK, "tick"),))
CONFIG = TransactorConfig(deadline=ms(5), max_latency=ms(5))


class Source(Reactor):
    """Emits one payload at startup, or one per period until the component stops or ``limit`` are sent."""

    def __init__(self, period: int = 0, cost: int = 0, limit: int | None = None):
        super().__init__("source")
        self.cost = cost
        self.limit = limit
        self.out = self.output("out")
        self.sent: list[tuple[Tag, bytes]] = []
        trigger = self.timer("tick", 0, period) if period else self.startup
        self.reaction("emit", [trigger], self._emit, effects=[self.out])

    def _emit(self, ctx):
        if self.limit is not None and len(self.sent) >= self.limit:
            return
        ctx.consume(self.cost)
        payload = b"msg%d" % len(self.sent)
        self.sent.append((ctx.tag, payload))
        ctx.set(self.out, payload)


class Sink(Reactor):
    def __init__(self, name: str = "sink"):
        super().__init__(name)
        self.inp = self.input("inp")
        self.got: list = []
        self.reaction("record", [self.inp], lambda ctx: self.got.append((ctx.tag, ctx.get(self.inp))))


class Ticker(Reactor):
    def __init__(self):
        super().__init__("ticker")
        self.tick = self.timer("tick", 0, ms(1))
        self.reaction("tick", [self.tick], lambda ctx: None)


class ReverseLogic(Reactor):
    def __init__(self):
        super().__init__("logic")
        self.calls = self.input("calls")
        self.reply = self.output("reply")
        self.reaction("reverse", [self.calls], self._reverse, effects=[self.reply])

    def _reverse(self, ctx):
        call = ctx.get(self.calls)[-1]
        ctx.set(self.reply, call.reply(call.payload[::-1]))


@pytest.fixture
def registry():
    return ServiceRegistry()


def network(latency=FixedLatency(ms(2)), seed=0, in_order=True):
    return Network(Timeline(), seed, LinkModel(latency, in_order=in_order))


def event_link(net, registry, config=CONFIG, *, source=None, server_kwargs=None, client_kwargs=None):
    server = SwcRuntime("server", net, registry=registry, **(server_kwargs or {}))
    skeleton = server.offer(SERVICE)
    src = server.add(source or Source())
    tx = server.add(ServerEventTransactor("tx", skeleton, TICK, config))
    server.connect(src.out, tx.event)

    client = SwcRuntime("client", net, registry=registry, **(client_kwargs or {}))
    rx = client.add(ClientEventTransactor("rx", client.proxy(SERVICE.service_id), TICK, config))
    sink = client.add(Sink())
    client.connect(rx.event, sink.inp)
    return server, client, tx, rx, sink


# ── timing parameters ──

def test_safe_tag_worked_example():
    assert safe_tag(Tag(ms(100)), ms(25), ms(5), 0) == Tag(ms(130), 0)


def test_config_parses_durations():
    config = TransactorConfig(deadline="25ms", max_latency="5ms", max_skew="1ms")
    assert (config.deadline, config.slack) == (ms(25), ms(6))
    assert config.untagged_policy is UntaggedPolicy.FAIL


@pytest.mark.parametrize("kwargs", [{"deadline": 0}, {"deadline": ms(5), "max_latency": -1}, {"deadline": "soon"}])
def test_config_rejects(kwargs):
    with pytest.raises(ValidationError):
        TransactorConfig(**kwargs)


# ── method path ──

def test_method_round_trip(registry):
    net = network()
    server = SwcRuntime("server", net, registry=registry)
    skeleton = server.offer(SERVICE)
    logic = server.add(ReverseLogic())
    server_tx = server.add(ServerMethodTransactor("server_tx", skeleton, REVERSE, CONFIG))
    server.connect(server_tx.request, logic.calls)
    server.connect(logic.reply, server_tx.response)

    client = SwcRuntime("client", net, registry=registry)
    src = client.add(Source())
    client_tx = client.add(ClientMethodTransactor("client_tx", client.proxy(SERVICE.service_id), REVERSE, CONFIG))
    sink = client.add(Sink())
    client.connect(src.out, client_tx.request)
    client.connect(client_tx.response, sink.inp)

    run_swcs([server, client])

    # request: 0 + D + L = 10 ms on the server; response: 10 + D + L = 20 ms on the client
    assert [r.tag for r in server.trace if r.reaction == "logic.reverse"] == [Tag(ms(10))]
    assert sink.got == [(Tag(ms(20)), Reply(1, b"0gsm"))]
    assert client_tx.errors == [] and server_tx.errors == []
    assert len(client.bypass) == 0 and len(server.bypass) == 0


def test_client_deadline_violation_sends_nothing(registry):
    net = network()
    server = SwcRuntime("server", net, registry=registry)
    server.offer(SERVICE)
    client = SwcRuntime("client", net, registry=registry)
    src = client.add(Source(cost=ms(6)))
    client_tx = client.add(ClientMethodTransactor("client_tx", client.proxy(SERVICE.service_id), REVERSE, CONFIG))
    client.connect(src.out, client_tx.request)

    traces = run_swcs([server, client])

    assert [e.kind for e in client_tx.errors] == ["DeadlineViolation"]
    assert net.links == []
    assert "client_tx.call!deadline" in [r.reaction for r in traces[1]]


class EarlyReply(Reactor):
    """Answers call 1 of ``client`` at 5 ms, before the call is delivered."""

    def __init__(self):
        super().__init__("early")
        self.reply = self.output("reply")
        self.reaction("answer", [self.timer("at", ms(5))], self._answer, effects=[self.reply])

    def _answer(self, ctx):
        ctx.set(self.reply, Reply(1, b"early", "client"))


class SlowLogic(ReverseLogic):
    def _reverse(self, ctx):
        ctx.consume(ms(6))
        super()._reverse(ctx)


class ReverseAll(ReverseLogic):
    def _reverse(self, ctx):
        ctx.set(self.reply, tuple(call.reply(call.payload[::-1]) for call in ctx.get(self.calls)))


def method_link(net, registry, logic, *, clients=("client",)):
    server = SwcRuntime("server", net, registry=registry)
    skeleton = server.offer(SERVICE)
    server.add(logic)
    server_tx = server.add(ServerMethodTransactor("server_tx", skeleton, REVERSE, CONFIG))
    if hasattr(logic, "calls"):
        server.connect(server_tx.request, logic.calls)
    server.connect(logic.reply, server_tx.response)
    errors = server.add(Sink("errors"))
    server.connect(server_tx.error, errors.inp)

    swcs, sinks = [server], []
    for name in clients:
        client = SwcRuntime(name, net, registry=registry)
        src = client.add(Source())
        client_tx = client.add(ClientMethodTransactor("client_tx", client.proxy(SERVICE.service_id), REVERSE, CONFIG))
        sink = client.add(Sink())
        client.connect(src.out, client_tx.request)
        client.connect(client_tx.response, sink.inp)
        swcs.append(client)
        sinks.append(sink)
    return swcs, server_tx, errors, sinks


def test_reply_before_delivery_is_a_causality_breach(registry):
    swcs, server_tx, errors, (sink,) = method_link(network(), registry, EarlyReply())
    run_swcs(swcs)

    assert [e.kind for e in server_tx.errors] == ["CausalityBreach"]
    breach = server_tx.errors[0].error
    assert (breach.tag, breach.required) == (Tag(ms(5)), Tag(ms(10)))
    assert errors.got == [(Tag(ms(5)), server_tx.errors[0])]
    assert sink.got == []


def test_late_reply_is_withheld(registry):
    swcs, server_tx, errors, (sink,) = method_link(network(), registry, SlowLogic())
    traces = run_swcs(swcs)

    assert "server_tx.respond!deadline" in [r.reaction for r in traces[0]]
    assert [e.kind for e in server_tx.errors] == ["DeadlineViolation"]
    assert [value for _, value in errors.got] == server_tx.errors
    assert sink.got == []


def test_every_client_at_one_tag_gets_its_reply(registry):
    swcs, server_tx, errors, sinks = method_link(
        network(), registry, ReverseAll(), clients=("client_a", "client_b")
    )
    run_swcs(swcs)

    assert [sink.got for sink in sinks] == [[(Tag(ms(20)), Reply(1, b"0gsm"))]] * 2
    assert server_tx.errors == [] and errors.got == []
    assert all(len(swc.bypass) == 0 for swc in swcs)


# ── event path ──

def test_event_delivered_at_safe_tag(registry):
    server, client, tx, rx, sink = event_link(network(), registry)
    run_swcs([server, client])
    assert sink.got == [(Tag(ms(10)), b"msg0")]
    assert rx.errors == []


@pytest.mark.parametrize("in_order", [True, False])
@pytest.mark.parametrize(
    "max_latency, max_skew, seed",
    [(ms(5), 0, 1), (ms(2), ms(1), 2), (ms(5), ms(3), 3), (0, 0, 4)],
)
def test_no_stale_tags_within_bounds(registry, max_latency, max_skew, seed, in_order):
    """Messages with latency <= L and skew <= E arrive in time and in tag order, whether or not the link reorders."""
    config = TransactorConfig(deadline=ms(5), max_latency=max_latency, max_skew=max_skew)
    net = network(UniformLatency(0, max_latency), seed, in_order)
    count = 2_500
    source = Source(period=ms(1))
    server, client, tx, rx, sink = event_link(
        net,
        registry,
        config,
        source=source,
        server_kwargs={"offset": max_skew // 3, "max_skew": max_skew, "stop": Tag(ms(count - 1))},
        client_kwargs={"offset": max_skew, "max_skew": max_skew},
    )
    run_swcs([server, client])

    assert len(source.sent) == count
    assert rx.errors == [] and tx.errors == []
    expected = [(tag.delay(config.deadline + config.slack), payload) for tag, payload in source.sent]
    assert sink.got == expected


def test_transactors_match_a_direct_delayed_connection(registry):
    count = 200
    delay = CONFIG.deadline + CONFIG.slack
    server, client, tx, rx, sink = event_link(
        network(UniformLatency(0, ms(5)), seed=9),
        registry,
        source=Source(period=ms(1), limit=count),
        server_kwargs={"stop": Tag(ms(count - 1))},
    )
    run_swcs([server, client])

    direct = SwcRuntime("direct", network(), registry=ServiceRegistry(), stop=Tag(ms(count - 1) + delay))
    src = direct.add(Source(period=ms(1), limit=count))
    direct_sink = direct.add(Sink())
    direct.connect(src.out, direct_sink.inp, delay)
    run_swcs([direct])

    assert len(direct_sink.got) == count
    assert sink.got == direct_sink.got


def test_late_message_is_an_observable_error(registry):
    """A 7 ms transit against L = 5 ms after a full deadline of compute is refused, not misaligned."""
    net = network(FixedLatency(ms(7)))
    server, client, tx, rx, sink = event_link(
        net, registry, source=Source(cost=ms(5)), client_kwargs={"stop": Tag(ms(20))}
    )
    client.add(Ticker())
    errors = client.add(Sink("errors"))
    client.connect(rx.error, errors.inp)

    run_swcs([server, client])

    assert sink.got == []
    assert [e.kind for e in rx.errors] == ["StaleTag"]
    assert rx.errors[0].tag == Tag(ms(10))
    assert [value for _, value in errors.got] == rx.errors


def test_untagged_message_fails_by_default(registry):
    server, client, tx, rx, sink = event_link(network(), registry, server_kwargs={"tagged": False})
    run_swcs([server, client])
    assert sink.got == []
    assert [e.kind for e in rx.errors] == ["UntaggedMessage"]
    assert rx.errors[0].tag is None


def test_untagged_message_at_physical_time(registry):
    config = TransactorConfig(deadline=ms(5), max_latency=ms(5), untagged_policy="physical-time")
    server, client, tx, rx, sink = event_link(
        network(), registry, config, server_kwargs={"tagged": False}, client_kwargs={"offset": ms(1)}
    )
    run_swcs([server, client])
    # arrival at 2 ms true time, read on a clock 1 ms ahead
    assert sink.got == [(Tag(ms(3)), b"msg0")]
    assert rx.errors == []


def test_legacy_subscriber_sees_plain_payloads(registry):
    net = network()
    server = SwcRuntime("server", net, registry=registry)
    skeleton = server.offer(SERVICE)
    src = server.add(Source(period=ms(10)))
    tx = server.add(ServerEventTransactor("tx", skeleton, TICK, CONFIG))
    server.connect(src.out, tx.event)
    server.stop_tag = Tag(ms(40))

    received = []
    legacy = ServiceProxy(Binding("legacy", net), SERVICE.service_id, registry)
    legacy.subscribe(TICK, lambda incoming: received.append((incoming.payload, incoming.message.tag_trailer)))

    run_swcs([server])

    assert received == [(payload, None) for _, payload in src.sent]
    assert len(received) == 5
    assert len(server.bypass) == 0


# ── fields ──

FIELDS = ServiceDescriptor(0x0300, fields=(FieldSpec("speed"), FieldSpec("mode", has_set=False)))


def test_field_binding_creates_one_transactor_per_accessor(registry):
    net = network()
    server = SwcRuntime("server", net, registry=registry)
    skeleton = server.offer(FIELDS)
    speed = field_binding(skeleton, "speed", CONFIG)
    mode = field_binding(skeleton, "mode", CONFIG)
    assert len(speed.transactors) == 3
    assert len(mode.transactors) == 2 and mode.setter is None
    assert isinstance(speed.getter, ServerMethodTransactor)
    assert isinstance(speed.notifier, ServerEventTransactor)
    assert speed.getter.name == "server.speed.get_speed"

    client = SwcRuntime("client", net, registry=registry)
    proxy = client.proxy(FIELDS.service_id)
    client_speed = field_binding(proxy, "speed", CONFIG)
    assert isinstance(client_speed.setter, ClientMethodTransactor)
    assert isinstance(client_speed.notifier, ClientEventTransactor)
    assert client_speed.notifier.name == "client.speed.speed_changed"
    assert skeleton.subscribers == ["client"]
