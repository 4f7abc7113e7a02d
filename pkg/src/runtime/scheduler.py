"""Discrete-event scheduler executing a reactor graph in tag order."""

import heapq
import itertools
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any

import structlog

from src.errors import ExecutionFault, SchedulerStopped, StaleTag, UndeclaredEffect
from src.runtime.clock import Clock
from src.runtime.graph import ReactorGraph, build_apg
from src.runtime.reactor import (
    Action,
    OutputPort,
    Reaction,
    ReactionContext,
    Startup,
    Timer,
    Trigger,
)
from src.runtime.tag import ZERO, Duration, Tag
from src.runtime.timeline import Priority, Timeline
from src.runtime.trace import Trace, TraceRecord, payload_digest

logger = structlog.get_logger(__name__)


def check_deadline(event_tag: Tag, bound: Duration, physical_now: int) -> bool:
    """True iff physical time has strictly exceeded tag.time + bound."""
    return physical_now > event_tag.time + bound


@dataclass(order=True)
class _Entry:
    tag: Tag
    seq: int
    target: Trigger = field(compare=False)
    payload: Any = field(compare=False, default=None)


class Scheduler:
    """Runs one reactor graph on one platform clock.

    Tags are processed strictly in order. Within a tag, triggered reactions run
    level by level along the APG; reactions of one level may run on a thread
    pool, but records, scheduled events and posted effects are committed in
    APG order so the trace does not depend on the executor count.
    """

    def __init__(
        self,
        graph: ReactorGraph,
        *,
        clock: Clock | None = None,
        executors: int = 1,
        stop: Tag | None = None,
        max_events: int | None = None,
        keepalive: bool = False,
        name: str = "main",
    ):
        self.graph = graph
        self.apg = build_apg(graph)
        self.clock = clock or Clock(Timeline())
        self.executors = max(1, executors)
        self.stop_tag = stop
        self.max_events = max_events
        self.keepalive = keepalive
        self.name = name
        self.trace = Trace()

        self._lock = threading.RLock()
        self._queue: list[_Entry] = []
        self._pending: dict[tuple[int, Tag], _Entry] = {}
        self._last_physical: dict[int, Tag] = {}
        self._seq = itertools.count()
        self._current: Tag | None = None
        self._armed_for: Tag | None = None
        self._generation = 0
        self._started = False
        self._stopped = False
        self._events_processed = 0
        self._pool: ThreadPoolExecutor | None = None

        self._triggered_by: dict[Trigger, list[Reaction]] = {}
        for reaction in graph.reactions:
            for trigger in reaction.triggers:
                self._triggered_by.setdefault(trigger, []).append(reaction)
        for reactor in graph.reactors:
            reactor.scheduler = self

    # ── lifecycle ──

    @property
    def timeline(self) -> Timeline:
        return self.clock.timeline

    @property
    def lock(self) -> threading.RLock:
        """Held while the event queue is inspected or modified."""
        return self._lock

    @property
    def current_tag(self) -> Tag | None:
        return self._current

    @property
    def stopped(self) -> bool:
        return self._stopped

    def start(self) -> None:
        """Enqueue startup and timer events and arm the first wake-up."""
        with self._lock:
            if self._started:
                return
            self._started = True
            if self.executors > 1:
                self._pool = ThreadPoolExecutor(
                    max_workers=self.executors, thread_name_prefix=f"{self.name}-reaction"
                )
            if self.keepalive:
                self.timeline.hold()
            for trigger in self.graph.triggers():
                if isinstance(trigger, Startup) and trigger in self._triggered_by:
                    self._enqueue(trigger, ZERO, None)
                elif isinstance(trigger, Timer):
                    self._enqueue(trigger, Tag(trigger.offset, 0), None)
            logger.debug("scheduler_start", scheduler=self.name, executors=self.executors)
            self._arm()

    def run(self) -> Trace:
        """Start, drive the timeline until idle, stop, and return the trace."""
        self.start()
        try:
            self.timeline.run()
        finally:
            self.stop()
        return self.trace

    def stop(self) -> None:
        with self._lock:
            self._halt()
        if self._pool is not None:
            self._pool.shutdown(wait=True)
            self._pool = None
        logger.debug(
            "scheduler_stop",
            scheduler=self.name,
            events=self._events_processed,
            records=len(self.trace),
        )

    def _halt(self) -> None:
        if self._stopped:
            return
        self._stopped = True
        self._generation += 1
        if self.keepalive:
            self.timeline.release()

    # ── event insertion ──

    def inject(self, target: Trigger, tag: Tag, payload: Any = None) -> Tag:
        """Enqueue an event at an explicit tag before or during a run."""
        with self._lock:
            if self._stopped:
                raise SchedulerStopped(f"scheduler {self.name} has terminated")
            if self._current is not None and tag <= self._current:
                raise StaleTag(tag, self._current)
            self._enqueue(target, tag, payload)
            if self._started:
                self._arm()
            return tag

    # Transactors insert network messages at their safe tag through this path.
    insert = inject

    def schedule_physical(self, action: Action, min_delay: Duration = 0, payload: Any = None) -> Tag:
        """Tag an asynchronous event with the local clock reading; callable from any thread."""
        with self._lock:
            if self._stopped:
                raise SchedulerStopped(f"scheduler {self.name} has terminated")
            tag = Tag(max(0, self.clock.now() + action.min_delay + min_delay), 0)
            return self._enqueue_physical(action, tag, payload)

    def schedule_physical_at(self, action: Action, local_time: int, payload: Any = None) -> Tag:
        """Like schedule_physical, for an observation made at a known local time."""
        with self._lock:
            if self._stopped:
                raise SchedulerStopped(f"scheduler {self.name} has terminated")
            return self._enqueue_physical(action, Tag(max(0, local_time), 0), payload)

    def _enqueue_physical(self, action: Action, tag: Tag, payload: Any) -> Tag:
        if self._current is not None and tag <= self._current:
            tag = Tag(self._current.time, self._current.microstep + 1)
        last = self._last_physical.get(id(action))
        if last is not None and tag <= last:
            tag = Tag(last.time, last.microstep + 1)
        self._last_physical[id(action)] = tag
        self._enqueue(action, tag, payload)
        if self._started:
            self._arm()
        return tag

    def _enqueue(self, target: Trigger, tag: Tag, payload: Any) -> None:
        key = (id(target), tag)
        existing = self._pending.get(key)
        if existing is not None:
            existing.payload = payload
            return
        entry = _Entry(tag, next(self._seq), target, payload)
        self._pending[key] = entry
        heapq.heappush(self._queue, entry)

    # ── main loop ──

    def _arm(self) -> None:
        if self._stopped or not self._queue:
            return
        head = self._queue[0].tag
        if self._armed_for is not None and self._armed_for <= head:
            return
        self._armed_for = head
        self._generation += 1
        generation = self._generation
        when = max(self.clock.to_true(head.time), self.timeline.now())
        self.timeline.call_at(when, lambda: self._wake(generation), Priority.REACTOR)

    def _rearm_at(self, true_time: int) -> None:
        self._generation += 1
        generation = self._generation
        self.timeline.call_at(true_time, lambda: self._wake(generation), Priority.REACTOR)

    def _wake(self, generation: int) -> None:
        with self._lock:
            if generation != self._generation or self._stopped:
                return
            self._armed_for = None
            if not self._queue:
                return
            head = self._queue[0].tag
            if self.clock.now() < head.time:
                self._arm()
                return
            if self.timeline.simulated and self.clock.busy_until() > self.timeline.now():
                self._armed_for = head
                self._rearm_at(self.clock.busy_until())
                return
            if self.stop_tag is not None and head > self.stop_tag:
                logger.debug("scheduler_stop_tag", scheduler=self.name, tag=str(head))
                self._halt()
                return
            batch = []
            while self._queue and self._queue[0].tag == head:
                entry = heapq.heappop(self._queue)
                del self._pending[(id(entry.target), entry.tag)]
                batch.append(entry)
            self._current = head

        self._process(head, batch)

        with self._lock:
            self._events_processed += len(batch)
            if self.max_events is not None and self._events_processed >= self.max_events:
                self._halt()
                return
            self._arm()

    def _process(self, tag: Tag, batch: list[_Entry]) -> None:
        triggered: set[Reaction] = set()
        for entry in batch:
            entry.target._present(tag, entry.payload)
            if isinstance(entry.target, Timer) and entry.target.period:
                with self._lock:
                    self._enqueue(entry.target, Tag(tag.time + entry.target.period, 0), None)
            triggered.update(self._triggered_by.get(entry.target, ()))

        while triggered:
            level = min(r.level for r in triggered)
            ready = sorted((r for r in triggered if r.level == level), key=lambda r: r.order)
            triggered.difference_update(ready)
            contexts = self._run_level(tag, ready)
            for ctx in contexts:
                triggered.update(self._commit(ctx))

    def _run_level(self, tag: Tag, ready: list[Reaction]) -> list[ReactionContext]:
        level_start = self.clock.true_now()
        if self._pool is not None and len(ready) > 1:
            futures = [self._pool.submit(self._execute, r, tag, level_start) for r in ready]
            contexts = [f.result() for f in futures]
        else:
            contexts = [self._execute(r, tag, level_start) for r in ready]
        if self.timeline.simulated:
            self.clock.advance(level_start + max(ctx.elapsed for ctx in contexts))
        return contexts

    def _execute(self, reaction: Reaction, tag: Tag, level_start: int) -> ReactionContext:
        ctx = ReactionContext(self, reaction, tag, level_start)
        body = reaction.body
        if reaction.deadline is not None and check_deadline(
            tag, reaction.deadline.bound, ctx.physical_time()
        ):
            ctx.deadline_violated = True
            body = reaction.deadline.handler
            logger.debug("deadline_violated", reaction=reaction.fqn, tag=str(tag))
        try:
            body(ctx)
        except UndeclaredEffect:
            raise
        except Exception as exc:
            raise ExecutionFault(tag, reaction.fqn) from exc
        return ctx

    def _commit(self, ctx: ReactionContext) -> set[Reaction]:
        """Record the reaction and release its effects; returns newly triggered reactions."""
        reaction_id = ctx.reaction.fqn + ("!deadline" if ctx.deadline_violated else "")
        self.trace.append(
            TraceRecord(
                ctx.tag,
                reaction_id,
                tuple((port.fqn, payload_digest(value)) for port, value in ctx.writes.items()),
            )
        )
        triggered: set[Reaction] = set()
        with self._lock:
            for action, tag, payload in ctx.scheduled:
                self._enqueue(action, tag, payload)
            for port, value in ctx.writes.items():
                triggered.update(self._triggered_by.get(port, ()))
                if isinstance(port, OutputPort):
                    for dest in port.downstream:
                        triggered.update(self._triggered_by.get(dest, ()))
                    for dest, delay in port.delayed:
                        self._enqueue(dest, ctx.tag.delay(delay), value)
        for effect in ctx.posted:
            effect()
        return triggered


def run(
    graph: ReactorGraph,
    stop: Tag | None = None,
    *,
    max_events: int | None = None,
    executors: int = 1,
    clock: Clock | None = None,
    events: list[tuple[Trigger, Tag, Any]] = (),
) -> Trace:
    """Build the APG, execute the graph and return its trace."""
    scheduler = Scheduler(graph, clock=clock, executors=executors, stop=stop, max_events=max_events)
    for target, tag, payload in events:
        scheduler.inject(target, tag, payload)
    return scheduler.run()
