"""Physical time base shared by every platform in one process.

A single heap of timed callbacks. In simulated mode the loop jumps straight
to the next callback; in real-time mode it waits on a condition variable so
that callbacks inserted from other threads can wake it early.
"""

import heapq
import itertools
import threading
import time
from enum import IntEnum
from typing import Callable, Literal

import structlog

logger = structlog.get_logger(__name__)

ClockMode = Literal["simulated", "real-time"]


class Priority(IntEnum):
    """Order of callbacks due at the same instant."""

    TIMER = 0
    NETWORK = 1
    REACTOR = 2


class Timeline:
    def __init__(self, mode: ClockMode = "simulated"):
        if mode not in ("simulated", "real-time"):
            raise ValueError(f"unknown clock mode: {mode}")
        self.mode = mode
        self._queue: list[tuple[int, int, int, Callable[[], None]]] = []
        self._seq = itertools.count()
        self._now = 0
        self._epoch = time.monotonic_ns()
        self._cond = threading.Condition()
        self._holds = 0
        self._stopped = False

    @property
    def simulated(self) -> bool:
        return self.mode == "simulated"

    def now(self) -> int:
        """Nanoseconds since the experiment epoch."""
        if self.simulated:
            return self._now
        return time.monotonic_ns() - self._epoch

    def call_at(self, when: int, callback: Callable[[], None], priority: Priority = Priority.REACTOR) -> None:
        with self._cond:
            heapq.heappush(self._queue, (when, int(priority), next(self._seq), callback))
            self._cond.notify_all()

    def call_later(self, delay: int, callback: Callable[[], None], priority: Priority = Priority.REACTOR) -> None:
        self.call_at(self.now() + delay, callback, priority)

    def hold(self) -> None:
        """Keep a real-time loop alive while its queue is empty."""
        with self._cond:
            self._holds += 1

    def release(self) -> None:
        with self._cond:
            self._holds = max(0, self._holds - 1)
            self._cond.notify_all()

    def stop(self) -> None:
        with self._cond:
            self._stopped = True
            self._cond.notify_all()

    @property
    def pending(self) -> int:
        return len(self._queue)

    def run(self, until: int | None = None) -> None:
        """Dispatch callbacks in (time, priority, insertion) order until idle."""
        logger.debug("timeline_run", mode=self.mode, until=until)
        while True:
            with self._cond:
                callback = self._next(until)
            if callback is None:
                return
            callback()

    def _next(self, until: int | None) -> Callable[[], None] | None:
        while True:
            if self._stopped:
                return None
            if not self._queue:
                if self._holds and not self.simulated:
                    self._cond.wait()
                    continue
                return None
            when = self._queue[0][0]
            if until is not None and when > until:
                if self.simulated:
                    self._now = max(self._now, until)
                return None
            if self.simulated:
                break
            remaining = when - self.now()
            if remaining <= 0:
                break
            self._cond.wait(remaining / 1e9)
        when, _, _, callback = heapq.heappop(self._queue)
        if self.simulated and when > self._now:
            self._now = when
        return callback
