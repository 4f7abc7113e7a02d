"""Execution traces, their line export and digests."""

import hashlib
from dataclasses import dataclass
from typing import Any, Iterable, Iterator

from src.runtime.tag import Tag

# sha256 of the empty export
EMPTY_TRACE_DIGEST = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"


def payload_digest(value: Any) -> str:
    """Short digest of a payload; non-bytes values are digested through repr()."""
    if value is None:
        return "-"
    data = bytes(value) if isinstance(value, (bytes, bytearray, memoryview)) else repr(value).encode()
    return hashlib.blake2b(data, digest_size=8).hexdigest()


@dataclass(frozen=True, slots=True)
class TraceRecord:
    tag: Tag
    reaction: str
    writes: tuple[tuple[str, str], ...] = ()

    def to_line(self) -> str:
        writes = ";".join(f"{port}:{digest}" for port, digest in self.writes)
        return f"{self.tag.time},{self.tag.microstep},{self.reaction},{writes}"

    @classmethod
    def from_line(cls, line: str) -> "TraceRecord":
        time, microstep, reaction, writes = line.split(",", 3)
        pairs = tuple(
            tuple(item.rsplit(":", 1)) for item in writes.split(";") if item
        )
        return cls(Tag(int(time), int(microstep)), reaction, pairs)


class Trace:
    """Ordered TraceRecords in execution order."""

    def __init__(self, records: Iterable[TraceRecord] = ()):
        self.records: list[TraceRecord] = list(records)

    def append(self, record: TraceRecord) -> None:
        self.records.append(record)

    def __iter__(self) -> Iterator[TraceRecord]:
        return iter(self.records)

    def __len__(self) -> int:
        return len(self.records)

    def __getitem__(self, index):
        return self.records[index]

    def __eq__(self, other) -> bool:
        return isinstance(other, Trace) and self.records == other.records

    def export(self) -> str:
        return "".join(record.to_line() + "\n" for record in self.records)

    def digest(self) -> str:
        return trace_digest(self)

    @classmethod
    def merge(cls, traces: list["Trace"]) -> "Trace":
        """Interleave per-platform traces by tag; ties keep platform order."""
        keyed = [
            (record.tag, platform, position, record)
            for platform, trace in enumerate(traces)
            for position, record in enumerate(trace)
        ]
        keyed.sort(key=lambda item: item[:3])
        return cls(item[3] for item in keyed)


def trace_digest(trace: Trace | Iterable[TraceRecord]) -> str:
    h = hashlib.sha256()
    for record in trace:
        h.update(record.to_line().encode())
        h.update(b"\n")
    return h.hexdigest()
