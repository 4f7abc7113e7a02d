"""Stage logic of the brake assistant plus the buffers and counters both variants share."""

from dataclasses import dataclass, fields
from functools import partial
from typing import Generic, TypeVar

from src.apps.messages import NOTIFY, BrakeDecision, Frame, LaneInfo, VehicleList
from src.middleware.proxy import ServiceSkeleton
from src.runtime.tag import Duration
from src.runtime.timeline import Priority, Timeline

BRAKE_DISTANCE_M = 10.0

T = TypeVar("T")


def preprocess(frame: Frame) -> LaneInfo:
    """Lane bounding box; a deterministic stand-in derived from the frame content."""
    p = frame.payload
    return LaneInfo(frame.seq, (p[0], p[1], 64 + p[2], 32 + p[3]))


def computer_vision(frame: Frame, lane: LaneInfo, stats: "ErrorStats | None" = None) -> VehicleList:
    """Vehicles inside the lane with their distance in meters."""
    if stats is not None and frame.seq != lane.source_seq:
        stats.misaligned_at_cv += 1
    p = frame.payload
    count = p[4] % 4
    distances = tuple(float(2 + (p[5 + i] + lane.box[i]) % 80) for i in range(count))
    return VehicleList(frame.seq, distances)


def eba(vehicles: VehicleList, threshold: float = BRAKE_DISTANCE_M) -> BrakeDecision:
    return BrakeDecision(vehicles.source_seq, any(d < threshold for d in vehicles.distances))


class OneSlotBuffer(Generic[T]):
    """Holds the latest value only; overwriting an unread value counts as a drop."""

    def __init__(self):
        self.slot: T | None = None
        self.overwrite_count = 0

    @property
    def full(self) -> bool:
        return self.slot is not None

    def write(self, value: T) -> None:
        if self.slot is not None:
            self.overwrite_count += 1
        self.slot = value

    def peek(self) -> T | None:
        return self.slot

    def read(self) -> T | None:
        value, self.slot = self.slot, None
        return value


CSV_HEADER = "trial,seed,frames,dropped_pre,dropped_frames_cv,dropped_lanes_cv,misaligned_cv,dropped_eba,error_rate"


@dataclass
class ErrorStats:
    total_frames: int = 0
    dropped_at_preprocessing: int = 0
    dropped_frames_at_cv: int = 0
    dropped_lanes_at_cv: int = 0
    misaligned_at_cv: int = 0
    dropped_at_eba: int = 0
    # observable errors raised by transactors (reactor variant only)
    deadline_misses: int = 0
    stale_messages: int = 0

    @property
    def counters(self) -> dict[str, int]:
        return {f.name: getattr(self, f.name) for f in fields(self) if f.name != "total_frames"}

    @property
    def errors(self) -> int:
        return sum(self.counters.values())

    @property
    def error_rate(self) -> float:
        if not self.total_frames:
            return 0.0
        return min(1.0, self.errors / self.total_frames)

    @property
    def dominant(self) -> str | None:
        """Counter with the most errors, None when there are none."""
        name, count = max(self.counters.items(), key=lambda item: item[1])
        return name if count else None

    def csv_row(self, trial: int, seed: int) -> str:
        return (
            f"{trial},{seed},{self.total_frames},{self.dropped_at_preprocessing},"
            f"{self.dropped_frames_at_cv},{self.dropped_lanes_at_cv},{self.misaligned_at_cv},"
            f"{self.dropped_at_eba},{self.error_rate:.6f}"
        )


class Camera:
    """Video provider on its own board: emits frame k at k * period * (1 + drift)."""

    def __init__(self, timeline: Timeline, skeleton: ServiceSkeleton, frames: int, period: Duration, drift: float = 0.0):
        self.timeline = timeline
        self.skeleton = skeleton
        self.frames = frames
        self.period = period
        self.drift = drift

    def emission_time(self, seq: int) -> int:
        return round(seq * self.period * (1.0 + self.drift))

    def start(self) -> None:
        for seq in range(self.frames):
            self.timeline.call_at(self.emission_time(seq), partial(self._emit, seq), Priority.TIMER)

    def _emit(self, seq: int) -> None:
        self.skeleton.notify(NOTIFY, Frame(seq).to_bytes())
