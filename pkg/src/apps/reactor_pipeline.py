"""Emergency brake assistant built from reactors and event transactors.

Each stage is a software component with its own scheduler and clock. Frames
enter the Video Adapter as physical actions tagged with their local arrival
time; every hop to the next component adds D + L + E to the tag. Computer
Vision sees the frame through a logical delay equal to the Preprocessing
hop, so frame and lane of one camera image carry the same tag.
"""

from dataclasses import dataclass, field

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
from src.apps.stages import Camera, ErrorStats, computer_vision, eba, preprocess
from src.errors import DeadlineViolation, StaleTag, UntaggedMessage
from src.middleware.binding import Binding, Incoming
from src.middleware.proxy import ServiceProxy, ServiceSkeleton
from src.middleware.registry import ServiceRegistry
from src.middleware.transport import LatencyModel, LinkModel, Network, UniformLatency
from src.runtime.reactor import Reactor, ReactionContext
from src.runtime.tag import Duration, ms
from src.runtime.timeline import ClockMode, Timeline
from src.runtime.trace import Trace
from src.transactors.base import Transactor
from src.transactors.config import TransactorConfig
from src.transactors.event import ClientEventTransactor, ServerEventTransactor
from src.transactors.swc import SwcRuntime, run_swcs

logger = structlog.get_logger(__name__)

STAGES = ("video_adapter", "preprocessing", "computer_vision", "eba")
INSERT_REACTION = "adapter.forward"
BRAKE_REACTION = "brake_tx.publish"


def _default_compute() -> dict[str, tuple[Duration, Duration]]:
    return {"pre": (ms(5), ms(25)), "cv": (ms(10), ms(25)), "eba": (ms(1), ms(5))}


@dataclass
class ReactorConfig:
    frames: int = 1000
    period: Duration = ms(50)
    seed: int = 0
    # Video Adapter, Preprocessing, Computer Vision, EBA
    deadlines: tuple[Duration, Duration, Duration, Duration] = (ms(5), ms(25), ms(25), ms(5))
    max_latency: Duration = ms(5)
    max_skew: Duration = 0
    latency: LatencyModel = field(default_factory=lambda: UniformLatency(0, ms(5)))
    # per (source, destination) binding overrides of the default link
    links: dict[tuple[str, str], LinkModel] = field(default_factory=dict)
    compute: dict[str, tuple[Duration, Duration]] = field(default_factory=_default_compute)
    executors: int = 1
    clock: ClockMode = "simulated"

    def __post_init__(self):
        if len(self.deadlines) != 4 or any(d <= 0 for d in self.deadlines):
            raise ValueError(f"need four positive deadlines, got {self.deadlines}")

    def transactor(self, stage: int) -> TransactorConfig:
        return TransactorConfig(
            deadline=self.deadlines[stage], max_latency=self.max_latency, max_skew=self.max_skew
        )


# ── stage reactors ──

class VideoAdapter(Reactor):
    def __init__(self, name: str = "adapter"):
        super().__init__(name)
        self.frame = self.physical_action("frame")
        self.out = self.output("frame_out")
        self.reaction("forward", [self.frame], self._forward, effects=[self.out])

    def _forward(self, ctx: ReactionContext) -> None:
        ctx.set(self.out, ctx.get(self.frame))


class _ComputeStage(Reactor):
    def __init__(self, name: str, compute: tuple[Duration, Duration], rng: np.random.Generator):
        super().__init__(name)
        self.compute = compute
        self.rng = rng

    def _spend(self, ctx: ReactionContext) -> None:
        low, high = self.compute
        ctx.consume(int(self.rng.integers(low, high, endpoint=True)))


class Preprocessing(_ComputeStage):
    def __init__(self, compute, rng, name: str = "preprocessing"):
        super().__init__(name, compute, rng)
        self.frame = self.input("frame")
        self.lane = self.output("lane")
        self.reaction("process", [self.frame], self._process, effects=[self.lane])

    def _process(self, ctx: ReactionContext) -> None:
        lane = preprocess(Frame.from_bytes(ctx.get(self.frame)))
        self._spend(ctx)
        ctx.set(self.lane, lane.to_bytes())


class ComputerVision(_ComputeStage):
    """Needs frame and lane at one tag; a missing partner is counted, never paired."""

    def __init__(self, compute, rng, stats: ErrorStats, name: str = "computer_vision"):
        super().__init__(name, compute, rng)
        self.stats = stats
        self.frame = self.input("frame")
        self.lane = self.input("lane")
        self.vehicles = self.output("vehicles")
        self.reaction("process", [self.frame, self.lane], self._process, effects=[self.vehicles])

    def _process(self, ctx: ReactionContext) -> None:
        has_frame, has_lane = ctx.is_present(self.frame), ctx.is_present(self.lane)
        if not has_lane:
            self.stats.dropped_lanes_at_cv += 1
            logger.debug("lane_missing", tag=str(ctx.tag))
            return
        if not has_frame:
            self.stats.dropped_frames_at_cv += 1
            logger.debug("frame_missing", tag=str(ctx.tag))
            return
        frame = Frame.from_bytes(ctx.get(self.frame))
        lane = LaneInfo.from_bytes(ctx.get(self.lane))
        vehicles = computer_vision(frame, lane, self.stats)
        self._spend(ctx)
        ctx.set(self.vehicles, vehicles.to_bytes())


class EmergencyBrake(_ComputeStage):
    def __init__(self, compute, rng, name: str = "eba"):
        super().__init__(name, compute, rng)
        self.decisions: list[BrakeDecision] = []
        self.vehicles = self.input("vehicles")
        self.brake = self.output("brake")
        self.reaction("process", [self.vehicles], self._process, effects=[self.brake])

    def _process(self, ctx: ReactionContext) -> None:
        decision = eba(VehicleList.from_bytes(ctx.get(self.vehicles)))
        self._spend(ctx)
        self.decisions.append(decision)
        ctx.set(self.brake, decision.to_bytes())


# ── latency report ──

def latency_samples(trace: Trace, release: Duration) -> list[Duration]:
    """Logical frame-to-brake latency of every frame, pairing the k-th insertion with the k-th brake.

    The pairing is exact when no frame is lost on the way.
    """
    inserted = [r.tag for r in trace if r.reaction == INSERT_REACTION]
    braked = [r.tag for r in trace if r.reaction == BRAKE_REACTION]
    return [b.time + release - i.time for i, b in zip(inserted, braked)]


def end_to_end_latency(trace: Trace, release: Duration) -> Duration | None:
    """Worst-case frame-to-brake latency; ``release`` is the EBA deadline added on output."""
    samples = latency_samples(trace, release)
    return max(samples) if samples else None


@dataclass
class ReactorResult:
    stats: ErrorStats
    trace: Trace
    digest: str
    worst_latency: Duration | None
    decisions: list[BrakeDecision]
    errors_by_kind: dict[str, int]


# ── assembly ──

@dataclass
class ReactorErrorStats(ErrorStats):
    """Counts every lost frame once, at its cause.

    A partner missing at Computer Vision is always the consequence of a
    stale message or a deadline miss upstream, which is already counted.
    """

    @property
    def errors(self) -> int:
        consequences = self.dropped_lanes_at_cv + self.dropped_frames_at_cv
        return sum(self.counters.values()) - consequences


class ReactorPipeline:
    def __init__(self, config: ReactorConfig):
        self.config = config
        self.stats = ReactorErrorStats(total_frames=config.frames)
        self.timeline = Timeline(config.clock)
        self.network = Network(self.timeline, config.seed, LinkModel(config.latency, config.max_latency))
        for (source, dest), model in config.links.items():
            self.network.set_link(source, dest, model)
        self.registry = ServiceRegistry()

        rng = np.random.default_rng([config.seed, 0])
        offsets = (
            [int(x) for x in rng.integers(0, config.max_skew, size=len(STAGES), endpoint=True)]
            if config.max_skew
            else [0] * len(STAGES)
        )
        self.swcs = {
            name: SwcRuntime(
                name,
                self.network,
                offset=offset,
                max_skew=config.max_skew,
                executors=config.executors,
                registry=self.registry,
            )
            for name, offset in zip(STAGES, offsets)
        }
        camera = ServiceSkeleton(Binding("camera", self.network), CAMERA_SERVICE, registry=self.registry).offer()
        self.camera = Camera(self.timeline, camera, config.frames, config.period)
        self.transactors: list[Transactor] = []
        self._build(config)

    def _rng(self, index: int) -> np.random.Generator:
        return np.random.default_rng([self.config.seed, index])

    def _tx(self, swc: SwcRuntime, transactor: Transactor) -> Transactor:
        self.transactors.append(transactor)
        return swc.add(transactor)

    def _build(self, config: ReactorConfig) -> None:
        va, pre, cv, brake = (self.swcs[name] for name in STAGES)

        # skeletons first: proxies discover them through the registry
        frames_out = va.offer(FRAME_SERVICE)
        lanes_out = pre.offer(LANE_SERVICE)
        vehicles_out = cv.offer(VEHICLE_SERVICE)
        brake_out = brake.offer(BRAKE_SERVICE)

        self.adapter = va.add(VideoAdapter())
        frames_tx = self._tx(va, ServerEventTransactor("frames_tx", frames_out, NOTIFY, config.transactor(0)))
        va.connect(self.adapter.out, frames_tx.event)
        ServiceProxy(va.binding, CAMERA_SERVICE.service_id, self.registry).subscribe(NOTIFY, self._on_camera)

        self.pre = pre.add(Preprocessing(config.compute["pre"], self._rng(1)))
        pre_in = self._tx(pre, ClientEventTransactor("frames_rx", pre.proxy(FRAME_SERVICE.service_id), NOTIFY, config.transactor(0)))
        lanes_tx = self._tx(pre, ServerEventTransactor("lanes_tx", lanes_out, NOTIFY, config.transactor(1)))
        pre.connect(pre_in.event, self.pre.frame)
        pre.connect(self.pre.lane, lanes_tx.event)

        self.cv = cv.add(ComputerVision(config.compute["cv"], self._rng(2), self.stats))
        cv_frames = self._tx(cv, ClientEventTransactor("frames_rx", cv.proxy(FRAME_SERVICE.service_id), NOTIFY, config.transactor(0)))
        cv_lanes = self._tx(cv, ClientEventTransactor("lanes_rx", cv.proxy(LANE_SERVICE.service_id), NOTIFY, config.transactor(1)))
        vehicles_tx = self._tx(cv, ServerEventTransactor("vehicles_tx", vehicles_out, NOTIFY, config.transactor(2)))
        # align the frame with the lane computed from it
        cv.connect(cv_frames.event, self.cv.frame, delay=config.deadlines[1] + config.max_latency + config.max_skew)
        cv.connect(cv_lanes.event, self.cv.lane)
        cv.connect(self.cv.vehicles, vehicles_tx.event)

        self.eba = brake.add(EmergencyBrake(config.compute["eba"], self._rng(3)))
        eba_in = self._tx(brake, ClientEventTransactor("vehicles_rx", brake.proxy(VEHICLE_SERVICE.service_id), NOTIFY, config.transactor(2)))
        brake_tx = self._tx(brake, ServerEventTransactor("brake_tx", brake_out, NOTIFY, config.transactor(3)))
        brake.connect(eba_in.event, self.eba.vehicles)
        brake.connect(self.eba.brake, brake_tx.event)

    def _on_camera(self, incoming: Incoming) -> None:
        """Frames from the camera board become physical actions at their local arrival time."""
        va = self.swcs["video_adapter"]
        va.scheduler.schedule_physical_at(self.adapter.frame, incoming.arrival_time + va.clock.offset, incoming.payload)

    def run(self) -> ReactorResult:
        swcs = [self.swcs[name] for name in STAGES]
        for swc in swcs:
            swc.scheduler  # build schedulers before the first delivery
        self.camera.start()
        traces = run_swcs(swcs)

        kinds: dict[str, int] = {}
        for transactor in self.transactors:
            for failure in transactor.errors:
                kinds[failure.kind] = kinds.get(failure.kind, 0) + 1
                if isinstance(failure.error, DeadlineViolation):
                    self.stats.deadline_misses += 1
                elif isinstance(failure.error, (StaleTag, UntaggedMessage)):
                    self.stats.stale_messages += 1

        trace = Trace.merge(traces)
        result = ReactorResult(
            stats=self.stats,
            trace=trace,
            digest=trace.digest(),
            worst_latency=end_to_end_latency(trace, self.config.deadlines[3]),
            decisions=list(self.eba.decisions),
            errors_by_kind=kinds,
        )
        logger.debug(
            "reactor_pipeline_done",
            seed=self.config.seed,
            errors=self.stats.errors,
            dominant=self.stats.dominant,
            worst_latency=result.worst_latency,
        )
        return result


def run_reactor_pipeline(config: ReactorConfig | None = None, **overrides) -> ReactorResult:
    config = config or ReactorConfig(**overrides)
    return ReactorPipeline(config).run()
