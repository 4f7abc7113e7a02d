"""Common machinery of the four transactors.

A transactor is a reactor sitting between reactor ports and a proxy or
skeleton. Outbound, it stores ``t + D`` in the timestamp bypass before the
middleware call. Inbound, it takes the trailer from the bypass and inserts
the message into its scheduler at ``trailer + L + E``.
"""

import threading
from dataclasses import dataclass
from typing import Any, Hashable

import structlog

from src.errors import (
    BypassEmpty,
    DeadlineViolation,
    DeterminismError,
    SchedulerStopped,
    StaleTag,
    UntaggedMessage,
)
from src.middleware.binding import Incoming
from src.middleware.bypass import TimestampBypass
from src.runtime.reactor import Action, Reactor, ReactionContext
from src.runtime.tag import Tag
from src.transactors.config import TransactorConfig, UntaggedPolicy, safe_tag

logger = structlog.get_logger(__name__)


@dataclass(frozen=True)
class TransactorError:
    """Value carried by a transactor's ``error`` port."""

    transactor: str
    tag: Tag | None
    error: DeterminismError

    @property
    def kind(self) -> str:
        return type(self.error).__name__


@dataclass(frozen=True)
class Call:
    call_id: int
    client: str
    payload: bytes

    def reply(self, payload: bytes) -> "Reply":
        return Reply(self.call_id, payload, self.client)


@dataclass(frozen=True)
class Reply:
    call_id: int
    payload: bytes
    client: str = ""


class Transactor(Reactor):
    def __init__(self, name: str, config: TransactorConfig, bypass: TimestampBypass | None):
        super().__init__(name)
        self.config = config
        self.bypass = bypass
        self.errors: list[TransactorError] = []
        self.error = self.output("error")
        self._fault = self.physical_action("fault")
        self._inbox: dict[Tag, list[Any]] = {}
        self._inbox_lock = threading.Lock()
        self.reaction("report", [self._fault], self._report, effects=[self.error])

    # ── reactions ──

    def _report(self, ctx: ReactionContext) -> None:
        self._record(ctx, ctx.get(self._fault))

    def _record(self, ctx: ReactionContext, failure: TransactorError) -> None:
        self.errors.append(failure)
        ctx.set(self.error, failure)

    def _missed(self, ctx: ReactionContext) -> None:
        """Deadline handler: record the violation; nothing is sent."""
        violation = DeadlineViolation(ctx.tag, self.config.deadline, ctx.physical_time())
        logger.warning("deadline_violation", transactor=self.name, tag=str(ctx.tag))
        self._record(ctx, TransactorError(self.name, ctx.tag, violation))

    def _drain(self, tag: Tag) -> list[Any]:
        with self._inbox_lock:
            return self._inbox.pop(tag, [])

    # ── delivery path ──

    def _put_outbound(self, key: Hashable, call_id: int, tag: Tag) -> None:
        if self.bypass is not None:
            self.bypass.put(key, call_id, tag)

    def _deliver(self, action: Action, incoming: Incoming, key: Hashable, item: Any) -> Tag | None:
        """Tag an incoming message and insert it; returns None when it was rejected."""
        scheduler = self.scheduler
        trailer = None
        if self.bypass is not None:
            try:
                trailer = self.bypass.take(key, incoming.call_id)
            except BypassEmpty:
                trailer = None
        try:
            with scheduler.lock:
                if trailer is not None:
                    tag = safe_tag(trailer, 0, self.config.max_latency, self.config.max_skew)
                    self._stash(tag, item)
                    try:
                        scheduler.insert(action, tag, None)
                    except StaleTag:
                        self._drain(tag)
                        raise
                elif self.config.untagged_policy is UntaggedPolicy.PHYSICAL_TIME:
                    local = incoming.arrival_time + scheduler.clock.offset
                    tag = scheduler.schedule_physical_at(action, local, None)
                    self._stash(tag, item)
                else:
                    raise UntaggedMessage(f"{self.name} received message {incoming.call_id} without a tag")
        except (StaleTag, UntaggedMessage) as exc:
            logger.warning("message_refused", transactor=self.name, error=str(exc))
            self._fail(exc, getattr(exc, "tag", None))
            return None
        except SchedulerStopped:
            logger.debug("late_message", transactor=self.name, call_id=incoming.call_id)
            return None
        return tag

    def _stash(self, tag: Tag, item: Any) -> None:
        with self._inbox_lock:
            self._inbox.setdefault(tag, []).append(item)

    def _fail(self, error: DeterminismError, tag: Tag | None) -> None:
        try:
            self.scheduler.schedule_physical(self._fault, 0, TransactorError(self.name, tag, error))
        except SchedulerStopped:
            pass
