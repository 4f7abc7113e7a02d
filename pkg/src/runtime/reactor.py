"""Reactors: stateful components with ports, actions, timers and ordered reactions."""

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Callable

from src.errors import UndeclaredEffect
from src.runtime.tag import Duration, Tag

if TYPE_CHECKING:
    from src.runtime.scheduler import Scheduler


class Trigger:
    """Anything that can carry a value at a tag and trigger reactions."""

    kind = "trigger"

    def __init__(self, owner: "Reactor", name: str):
        self.owner = owner
        self.name = name
        self._value: Any = None
        self._tag: Tag | None = None

    @property
    def fqn(self) -> str:
        return f"{self.owner.name}.{self.name}"

    def _present(self, tag: Tag, value: Any) -> None:
        self._value = value
        self._tag = tag

    def is_present(self, tag: Tag) -> bool:
        return self._tag == tag

    def value_at(self, tag: Tag) -> Any:
        return self._value if self._tag == tag else None

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.fqn})"


class Port(Trigger):
    kind = "port"


class InputPort(Port):
    def __init__(self, owner: "Reactor", name: str):
        super().__init__(owner, name)
        self.upstream: "OutputPort | None" = None


class OutputPort(Port):
    def __init__(self, owner: "Reactor", name: str):
        super().__init__(owner, name)
        self.downstream: list[InputPort] = []
        self.delayed: list[tuple[InputPort, Duration]] = []


class Action(Trigger):
    kind = "action"

    def __init__(self, owner: "Reactor", name: str, min_delay: Duration = 0, physical: bool = False):
        super().__init__(owner, name)
        self.min_delay = min_delay
        self.physical = physical


class Timer(Trigger):
    kind = "timer"

    def __init__(self, owner: "Reactor", name: str, offset: Duration = 0, period: Duration = 0):
        super().__init__(owner, name)
        self.offset = offset
        self.period = period


class Startup(Trigger):
    kind = "startup"


@dataclass(frozen=True)
class Deadline:
    bound: Duration
    handler: Callable[["ReactionContext"], None]

    def __post_init__(self):
        if self.bound <= 0:
            raise ValueError(f"deadline bound must be positive, got {self.bound}")


@dataclass(eq=False)
class Reaction:
    name: str
    reactor: "Reactor"
    index: int
    body: Callable[["ReactionContext"], None]
    triggers: tuple[Trigger, ...]
    sources: tuple[Trigger, ...] = ()
    effects: tuple[Trigger, ...] = ()
    deadline: Deadline | None = None
    level: int = 0
    order: int = 0

    @property
    def fqn(self) -> str:
        return f"{self.reactor.name}.{self.name}"

    def __repr__(self) -> str:
        return f"Reaction({self.fqn})"


class Reactor:
    """Subclass and declare ports, actions and reactions in ``__init__``."""

    def __init__(self, name: str):
        self.name = name
        self.reactions: list[Reaction] = []
        self.triggers: list[Trigger] = []
        self.startup = self._add(Startup(self, "startup"))
        self.scheduler: "Scheduler | None" = None

    def _add(self, trigger):
        if any(t.name == trigger.name for t in self.triggers):
            raise ValueError(f"{self.name} already declares {trigger.name}")
        self.triggers.append(trigger)
        return trigger

    def input(self, name: str) -> InputPort:
        return self._add(InputPort(self, name))

    def output(self, name: str) -> OutputPort:
        return self._add(OutputPort(self, name))

    def logical_action(self, name: str, min_delay: Duration = 0) -> Action:
        return self._add(Action(self, name, min_delay, physical=False))

    def physical_action(self, name: str, min_delay: Duration = 0) -> Action:
        return self._add(Action(self, name, min_delay, physical=True))

    def timer(self, name: str, offset: Duration = 0, period: Duration = 0) -> Timer:
        return self._add(Timer(self, name, offset, period))

    def reaction(
        self,
        name: str,
        triggers: list[Trigger] | tuple[Trigger, ...],
        body: Callable[["ReactionContext"], None],
        effects: list[Trigger] | tuple[Trigger, ...] = (),
        sources: list[Trigger] | tuple[Trigger, ...] = (),
        deadline: Deadline | None = None,
    ) -> Reaction:
        for trigger in (*triggers, *sources, *effects):
            if trigger.owner is not self:
                raise ValueError(f"{trigger.fqn} does not belong to {self.name}")
        reaction = Reaction(
            name=name,
            reactor=self,
            index=len(self.reactions),
            body=body,
            triggers=tuple(triggers),
            sources=tuple(sources),
            effects=tuple(effects),
            deadline=deadline,
        )
        self.reactions.append(reaction)
        return reaction

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.name})"


@dataclass
class ReactionContext:
    """What a reaction body sees while it executes at one tag."""

    scheduler: "Scheduler"
    reaction: Reaction
    tag: Tag
    level_start: int
    deadline_violated: bool = False
    elapsed: int = 0
    writes: dict[OutputPort, Any] = field(default_factory=dict)
    scheduled: list[tuple[Action, Tag, Any]] = field(default_factory=list)
    posted: list[Callable[[], None]] = field(default_factory=list)

    def get(self, trigger: Trigger) -> Any:
        return trigger.value_at(self.tag)

    def is_present(self, trigger: Trigger) -> bool:
        return trigger.is_present(self.tag)

    def set(self, port: OutputPort, value: Any) -> None:
        """Write an output at the current tag; the last write wins."""
        if port not in self.reaction.effects:
            raise UndeclaredEffect(self.reaction.fqn, port.fqn)
        port._present(self.tag, value)
        for downstream in port.downstream:
            downstream._present(self.tag, value)
        self.writes[port] = value

    def schedule(self, action: Action, delay: Duration = 0, payload: Any = None) -> Tag:
        if action not in self.reaction.effects:
            raise UndeclaredEffect(self.reaction.fqn, action.fqn)
        if action.physical:
            return self.scheduler.schedule_physical(action, delay, payload)
        tag = self.tag.delay(action.min_delay + delay)
        self.scheduled.append((action, tag, payload))
        return tag

    def physical_time(self) -> int:
        """Local clock reading at this point of the reaction."""
        clock = self.scheduler.clock
        if clock.timeline.simulated:
            return self.level_start + self.elapsed + clock.offset
        return clock.now()

    def true_time(self) -> int:
        return self.physical_time() - self.scheduler.clock.offset

    def consume(self, duration: Duration) -> None:
        """Spend simulated compute time (sleeps in real-time mode)."""
        if self.scheduler.clock.timeline.simulated:
            self.elapsed += duration
        else:
            self.scheduler.clock.consume(duration)

    def post(self, effect: Callable[[], None]) -> None:
        """Defer an outbound side effect until this reaction's level has completed."""
        self.posted.append(effect)
