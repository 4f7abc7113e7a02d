"""Timestamp bypass: pairs a tag with a message the service API cannot annotate."""

import threading
from typing import Hashable

from src.errors import BypassEmpty, BypassOccupied
from src.runtime.tag import Tag

BypassKey = tuple[Hashable, int]


class TimestampBypass:
    """One slot per (endpoint, call_id); puts and takes must alternate."""

    def __init__(self):
        self._lock = threading.Lock()
        self._slots: dict[BypassKey, Tag] = {}

    def put(self, endpoint: Hashable, call_id: int, tag: Tag) -> None:
        key = (endpoint, call_id)
        with self._lock:
            if key in self._slots:
                raise BypassOccupied(key)
            self._slots[key] = tag

    def take(self, endpoint: Hashable, call_id: int) -> Tag:
        key = (endpoint, call_id)
        with self._lock:
            try:
                return self._slots.pop(key)
            except KeyError:
                raise BypassEmpty(key) from None

    def discard(self, endpoint: Hashable, call_id: int) -> Tag | None:
        """Remove and return the tag waiting in a slot, or None when it is empty."""
        with self._lock:
            return self._slots.pop((endpoint, call_id), None)

    def __len__(self) -> int:
        with self._lock:
            return len(self._slots)
