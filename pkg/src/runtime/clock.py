"""Per-platform clock: a reading of the shared timeline plus a skew offset."""

import time

from src.runtime.tag import Duration
from src.runtime.timeline import Timeline


class Clock:
    """Local physical clock of one platform.

    ``now()`` is the local reading (true time + offset) used for tagging and
    deadline checks. In simulated mode the clock also keeps a cursor that
    models how long the platform has been busy computing.
    """

    def __init__(self, timeline: Timeline, offset: int = 0, max_skew: Duration | None = None):
        if max_skew is not None and abs(offset) > max_skew:
            raise ValueError(f"clock offset {offset} exceeds the skew bound {max_skew}")
        self.timeline = timeline
        self.offset = offset
        self._cursor = 0

    @property
    def mode(self) -> str:
        return self.timeline.mode

    def true_now(self) -> int:
        if self.timeline.simulated:
            return max(self.timeline.now(), self._cursor)
        return self.timeline.now()

    def now(self) -> int:
        return self.true_now() + self.offset

    def to_true(self, local_time: int) -> int:
        return local_time - self.offset

    def busy_until(self) -> int:
        return self._cursor

    def advance(self, true_time: int) -> None:
        """Move the busy cursor forward; never backwards."""
        if true_time > self._cursor:
            self._cursor = true_time

    def consume(self, duration: Duration) -> None:
        if self.timeline.simulated:
            self.advance(self.true_now() + duration)
        elif duration > 0:
            time.sleep(duration / 1e9)
