"""Method transactors: deterministic request/response across a service boundary."""

from concurrent.futures import Future

import structlog

from src.errors import CausalityBreach
from src.middleware.binding import Incoming, channel
from src.middleware.proxy import Outgoing, ServiceProxy, ServiceSkeleton
from src.runtime.reactor import Deadline, ReactionContext
from src.runtime.tag import Tag
from src.transactors.base import Call, Reply, Transactor, TransactorError
from src.transactors.config import TransactorConfig

logger = structlog.get_logger(__name__)


class ClientMethodTransactor(Transactor):
    """``request`` (bytes) in, ``response`` (Reply) out.

    A request at tag t is sent with the tag t + D; the response comes back
    at trailer + L + E. Responses that land on the same tag are coalesced:
    the one with the highest call id is emitted and the rest are logged as
    ``responses_coalesced``. Issue at most one call per tag to see them all.
    """

    def __init__(self, name: str, proxy: ServiceProxy, method_id: int, config: TransactorConfig):
        super().__init__(name, config, proxy.binding.bypass)
        self.proxy = proxy
        self.method_id = method_id
        self.request = self.input("request")
        self.response = self.output("response")
        self._completed = self.physical_action("completed")
        self.reaction(
            "call",
            [self.request],
            self._call,
            effects=[self.error],
            deadline=Deadline(config.deadline, self._missed),
        )
        self.reaction("complete", [self._completed], self._complete, effects=[self.response])

    def _call(self, ctx: ReactionContext) -> None:
        args = bytes(ctx.get(self.request) or b"")
        trailer = ctx.tag.delay(self.config.deadline)
        send_time = ctx.true_time()

        def issue():
            call_id = self.proxy.reserve_call_id()
            self._put_outbound(self.proxy.channel, call_id, trailer)
            future = self.proxy.call(self.method_id, args, call_id=call_id, send_time=send_time)
            future.add_done_callback(self._on_response)

        ctx.post(issue)

    def _on_response(self, future: Future) -> None:
        incoming: Incoming = future.result()
        reply = Reply(incoming.call_id, incoming.payload)
        self._deliver(self._completed, incoming, self.proxy.channel, reply)

    def _complete(self, ctx: ReactionContext) -> None:
        replies = sorted(self._drain(ctx.tag), key=lambda r: r.call_id)
        if len(replies) > 1:
            logger.warning("responses_coalesced", transactor=self.name, tag=str(ctx.tag), count=len(replies))
        if replies:
            ctx.set(self.response, replies[-1])


class ServerMethodTransactor(Transactor):
    """``request`` (tuple of Call) out, ``response`` (Reply or tuple of Reply) in.

    Every call delivered at one tag is forwarded together, ordered by
    (client, call_id). Each reply resolves its own call, so logic answering
    several clients at one tag sets a tuple. A reply may not be earlier than
    the tag its call was delivered at.
    """

    def __init__(self, name: str, skeleton: ServiceSkeleton, method_id: int, config: TransactorConfig):
        super().__init__(name, config, skeleton.binding.bypass)
        self.skeleton = skeleton
        self.method_id = method_id
        self.request = self.output("request")
        self.response = self.input("response")
        self._received = self.physical_action("received")
        self._delivered: dict[tuple[str, int], Tag] = {}
        self._promises: dict[tuple[str, int], Future] = {}
        self.reaction("deliver", [self._received], self._forward, effects=[self.request])
        self.reaction(
            "respond",
            [self.response],
            self._respond,
            effects=[self.error],
            deadline=Deadline(config.deadline, self._respond_missed),
        )
        skeleton.bind(method_id, self._on_request)

    def _on_request(self, incoming: Incoming) -> Future:
        promise: Future = Future()
        key = (incoming.peer, incoming.call_id)
        call = Call(incoming.call_id, incoming.peer, incoming.payload)
        tag = self._deliver(self._received, incoming, channel(self.skeleton.endpoint, incoming.peer), call)
        if tag is None:
            promise.cancel()
            return promise
        self._delivered[key] = tag
        self._promises[key] = promise
        return promise

    def _forward(self, ctx: ReactionContext) -> None:
        calls = sorted(self._drain(ctx.tag), key=lambda c: (c.client, c.call_id))
        if calls:
            ctx.set(self.request, tuple(calls))

    def _respond(self, ctx: ReactionContext) -> None:
        value = ctx.get(self.response)
        replies: tuple[Reply, ...] = value if isinstance(value, tuple) else (value,)
        trailer = ctx.tag.delay(self.config.deadline)
        send_time = ctx.true_time()
        for reply in replies:
            key = (reply.client, reply.call_id)
            if key not in self._promises:
                raise KeyError(f"{self.name} has no outstanding call {key}")
            delivered = self._delivered.pop(key)
            promise = self._promises.pop(key)
            if ctx.tag < delivered:
                promise.cancel()
                self._record(ctx, TransactorError(self.name, ctx.tag, CausalityBreach(ctx.tag, delivered)))
                continue
            ctx.post(self._resolver(promise, reply, trailer, send_time))

    def _resolver(self, promise: Future, reply: Reply, trailer: Tag, send_time: int):
        out = channel(self.skeleton.endpoint, reply.client)

        def resolve():
            self._put_outbound(out, reply.call_id, trailer)
            promise.set_result(Outgoing(reply.payload, send_time))

        return resolve

    def _respond_missed(self, ctx: ReactionContext) -> None:
        value = ctx.get(self.response)
        for reply in value if isinstance(value, tuple) else (value,):
            promise = self._promises.pop((reply.client, reply.call_id), None)
            self._delivered.pop((reply.client, reply.call_id), None)
            if promise is not None:
                promise.cancel()
        self._missed(ctx)
