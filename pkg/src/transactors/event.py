"""Event transactors: tagged publish/subscribe over service notifications."""

from src.middleware.binding import Incoming, channel
from src.middleware.proxy import ServiceProxy, ServiceSkeleton
from src.runtime.reactor import Deadline, ReactionContext
from src.transactors.base import Transactor
from src.transactors.config import TransactorConfig


class ServerEventTransactor(Transactor):
    """Publishes every value on ``event`` (bytes) as a notification tagged t + D."""

    def __init__(self, name: str, skeleton: ServiceSkeleton, event_id: int, config: TransactorConfig):
        super().__init__(name, config, skeleton.binding.bypass)
        self.skeleton = skeleton
        self.event_id = event_id
        self.event = self.input("event")
        self.reaction(
            "publish",
            [self.event],
            self._publish,
            effects=[self.error],
            deadline=Deadline(config.deadline, self._missed),
        )

    def _publish(self, ctx: ReactionContext) -> None:
        payload = bytes(ctx.get(self.event) or b"")
        trailer = ctx.tag.delay(self.config.deadline)
        send_time = ctx.true_time()

        def emit():
            session = self.skeleton.reserve_session()
            self._put_outbound(channel(self.skeleton.endpoint), session, trailer)
            self.skeleton.notify(self.event_id, payload, session=session, send_time=send_time)

        ctx.post(emit)


class ClientEventTransactor(Transactor):
    """Subscribes to one event and emits each notification on ``event`` at trailer + L + E."""

    def __init__(self, name: str, proxy: ServiceProxy, event_id: int, config: TransactorConfig):
        super().__init__(name, config, proxy.binding.bypass)
        self.proxy = proxy
        self.event_id = event_id
        self.event = self.output("event")
        self._received = self.physical_action("received")
        self.reaction("deliver", [self._received], self._forward, effects=[self.event])
        proxy.subscribe(event_id, self._on_notification)

    def _on_notification(self, incoming: Incoming) -> None:
        self._deliver(self._received, incoming, channel(self.proxy.endpoint), incoming.payload)

    def _forward(self, ctx: ReactionContext) -> None:
        payloads = self._drain(ctx.tag)
        if payloads:
            ctx.set(self.event, payloads[-1])
