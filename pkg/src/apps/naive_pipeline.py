"""Emergency brake assistant on a plain service-oriented middleware.

Every stage is a periodic OS callback: it wakes once per period, reads the
latest value from its one-slot input buffer(s), computes and publishes an
untagged notification. Whether a value is read, overwritten or paired with
the wrong partner depends on the phases between these callbacks, the clock
drift of the camera board and the jitter of timers, compute and network.
"""

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import structlog

from src.apps.messages import (
    BRAKE_SERVICE,
    CAMERA_SERVICE,
    FRAME_SERVICE,
    LANE_SERVICE,
    NOTIFY,
    VEHICLE_SERVICE,
    BrakeDecision,
    Frame,
    LaneInfo,
    VehicleList,
)
from src.apps.stages import Camera, ErrorStats, OneSlotBuffer, computer_vision, eba, preprocess
from src.middleware.binding import Binding
from src.middleware.proxy import ServiceProxy, ServiceSkeleton
from src.middleware.registry import ServiceRegistry
from src.middleware.service import ServiceDescriptor
from src.middleware.transport import LatencyModel, LinkModel, Network, UniformLatency
from src.runtime.tag import Duration, ms
from src.runtime.timeline import ClockMode, Priority, Timeline

logger = structlog.get_logger(__name__)


def _default_compute() -> dict[str, tuple[Duration, Duration]]:
    return {"pre": (ms(5), ms(30)), "cv": (ms(10), ms(35)), "eba": (ms(1), ms(3))}


@dataclass
class NaiveConfig:
    frames: int = 1000
    period: Duration = ms(50)
    seed: int = 0
    # Spacing of the Preprocessing, Computer Vision and EBA wake-ups, each
    # relative to the previous stage (Preprocessing: to the camera tick).
    # None draws them uniformly from [0, period).
    phase_offsets: tuple[Duration, Duration, Duration] | None = None
    latency: LatencyModel = field(default_factory=lambda: UniformLatency(0, ms(5)))
    compute: dict[str, tuple[Duration, Duration]] = field(default_factory=_default_compute)
    timer_jitter: Duration = ms(1)
    max_drift: float = 5e-4
    clock: ClockMode = "simulated"


class PeriodicStage:
    """One SWC callback. A wake-up while the previous one still computes is skipped."""

    def __init__(
        self,
        name: str,
        timeline: Timeline,
        skeleton: ServiceSkeleton,
        step: Callable[[], bytes | None],
        compute: tuple[Duration, Duration],
        rng: np.random.Generator,
    ):
        self.name = name
        self.timeline = timeline
        self.skeleton = skeleton
        self.step = step
        self.compute = compute
        self.rng = rng
        self.busy_until = 0
        self.overruns = 0

    def start(self, phase: int, period: Duration, wakes: int, jitter: Duration) -> None:
        delays = self.rng.integers(0, jitter, size=wakes, endpoint=True) if jitter else np.zeros(wakes, int)
        for k in range(wakes):
            self.timeline.call_at(phase + k * period + int(delays[k]), self._wake, Priority.TIMER)

    def _wake(self) -> None:
        now = self.timeline.now()
        if now < self.busy_until:
            self.overruns += 1
            return
        payload = self.step()
        if payload is None:
            return
        low, high = self.compute
        done = now + int(self.rng.integers(low, high, endpoint=True))
        self.busy_until = done
        self.skeleton.notify(NOTIFY, payload, send_time=done)


class NaivePipeline:
    def __init__(self, config: NaiveConfig):
        self.config = config
        self.stats = ErrorStats(total_frames=config.frames)
        self.decisions: list[BrakeDecision] = []

        rng = np.random.default_rng([config.seed, 0])
        if config.phase_offsets is None:
            spacing = tuple(int(x) for x in rng.integers(0, config.period, size=3))
        else:
            spacing = tuple(config.phase_offsets)
        self.phases = tuple(int(x) for x in np.cumsum(spacing))
        self.drift = float(rng.uniform(-config.max_drift, config.max_drift)) if config.max_drift else 0.0

        self.timeline = Timeline(config.clock)
        self.network = Network(
            self.timeline, config.seed, LinkModel(config.latency, config.latency.upper_bound)
        )
        self.registry = ServiceRegistry()

        camera = self._offer("camera", CAMERA_SERVICE)
        adapter = self._offer("video_adapter", FRAME_SERVICE)
        pre = self._offer("preprocessing", LANE_SERVICE)
        cv = self._offer("computer_vision", VEHICLE_SERVICE)
        brake = self._offer("eba", BRAKE_SERVICE)

        self.pre_frames: OneSlotBuffer[Frame] = OneSlotBuffer()
        self.cv_frames: OneSlotBuffer[Frame] = OneSlotBuffer()
        self.cv_lanes: OneSlotBuffer[LaneInfo] = OneSlotBuffer()
        self.eba_vehicles: OneSlotBuffer[VehicleList] = OneSlotBuffer()

        # the adapter re-publishes each frame from its receive handler
        self._subscribe(adapter, CAMERA_SERVICE, lambda m: adapter.notify(NOTIFY, m.payload))
        self._subscribe(pre, FRAME_SERVICE, lambda m: self.pre_frames.write(Frame.from_bytes(m.payload)))
        self._subscribe(cv, FRAME_SERVICE, lambda m: self.cv_frames.write(Frame.from_bytes(m.payload)))
        self._subscribe(cv, LANE_SERVICE, lambda m: self.cv_lanes.write(LaneInfo.from_bytes(m.payload)))
        self._subscribe(brake, VEHICLE_SERVICE, lambda m: self.eba_vehicles.write(VehicleList.from_bytes(m.payload)))

        self.camera = Camera(self.timeline, camera, config.frames, config.period, self.drift)
        self.stages = [
            PeriodicStage("preprocessing", self.timeline, pre, self._pre_step, config.compute["pre"],
                          np.random.default_rng([config.seed, 1])),
            PeriodicStage("computer_vision", self.timeline, cv, self._cv_step, config.compute["cv"],
                          np.random.default_rng([config.seed, 2])),
            PeriodicStage("eba", self.timeline, brake, self._eba_step, config.compute["eba"],
                          np.random.default_rng([config.seed, 3])),
        ]

    def _offer(self, name: str, descriptor: ServiceDescriptor) -> ServiceSkeleton:
        return ServiceSkeleton(Binding(name, self.network), descriptor, registry=self.registry).offer()

    def _subscribe(self, skeleton: ServiceSkeleton, descriptor: ServiceDescriptor, handler) -> None:
        binding = skeleton.binding
        proxy = ServiceProxy(binding, descriptor.service_id, self.registry)
        proxy.subscribe(NOTIFY, handler)

    # ── stage steps: None means "inputs not ready, stay idle" ──

    def _pre_step(self) -> bytes | None:
        frame = self.pre_frames.read()
        return None if frame is None else preprocess(frame).to_bytes()

    def _cv_step(self) -> bytes | None:
        if not (self.cv_frames.full and self.cv_lanes.full):
            return None
        return computer_vision(self.cv_frames.read(), self.cv_lanes.read(), self.stats).to_bytes()

    def _eba_step(self) -> bytes | None:
        vehicles = self.eba_vehicles.read()
        if vehicles is None:
            return None
        decision = eba(vehicles)
        self.decisions.append(decision)
        return decision.to_bytes()

    def run(self) -> ErrorStats:
        config = self.config
        wakes = config.frames + math.ceil(config.frames * config.max_drift) + 5
        self.camera.start()
        for stage, phase in zip(self.stages, self.phases):
            stage.start(phase, config.period, wakes, config.timer_jitter)
        self.timeline.run()

        self.stats.dropped_at_preprocessing = self.pre_frames.overwrite_count
        self.stats.dropped_frames_at_cv = self.cv_frames.overwrite_count
        self.stats.dropped_lanes_at_cv = self.cv_lanes.overwrite_count
        self.stats.dropped_at_eba = self.eba_vehicles.overwrite_count
        logger.debug(
            "naive_pipeline_done",
            seed=config.seed,
            phases=self.phases,
            drift=self.drift,
            errors=self.stats.errors,
            dominant=self.stats.dominant,
        )
        return self.stats


def run_naive_pipeline(config: NaiveConfig | None = None, **overrides) -> ErrorStats:
    config = config or NaiveConfig(**overrides)
    return NaivePipeline(config).run()
