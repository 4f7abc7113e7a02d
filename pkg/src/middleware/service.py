"""Service interface descriptions: methods, events and fields."""

from dataclasses import dataclass, field

# Field accessors get ids from a reserved range so they never clash with
# explicitly declared methods and events.
FIELD_ID_BASE = 0x4000


@dataclass(frozen=True)
class MethodSpec:
    method_id: int
    name: str


@dataclass(frozen=True)
class EventSpec:
    event_id: int
    name: str


@dataclass(frozen=True)
class FieldSpec:
    name: str
    has_get: bool = True
    has_set: bool = True
    has_notify: bool = True


@dataclass(frozen=True)
class FieldAccessors:
    """The methods and event a field expands to; absent accessors are None."""

    field: FieldSpec
    getter: MethodSpec | None
    setter: MethodSpec | None
    notifier: EventSpec | None


@dataclass(frozen=True)
class ServiceDescriptor:
    service_id: int
    methods: tuple[MethodSpec, ...] = ()
    events: tuple[EventSpec, ...] = ()
    fields: tuple[FieldSpec, ...] = ()
    name: str = ""
    _accessors: tuple[FieldAccessors, ...] = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self):
        if not 0 <= self.service_id <= 0xFFFF:
            raise ValueError(f"service id out of range: {self.service_id}")
        accessors = tuple(self._expand(i, f) for i, f in enumerate(self.fields))
        object.__setattr__(self, "_accessors", accessors)

        method_ids = [m.method_id for m in self.all_methods]
        event_ids = [e.event_id for e in self.all_events]
        for kind, ids in (("method", method_ids), ("event", event_ids)):
            if len(ids) != len(set(ids)):
                raise ValueError(f"duplicate {kind} ids in service 0x{self.service_id:04x}")
            if any(not 0 <= i <= 0xFFFF for i in ids):
                raise ValueError(f"{kind} id out of range in service 0x{self.service_id:04x}")
        if len({f.name for f in self.fields}) != len(self.fields):
            raise ValueError(f"duplicate field names in service 0x{self.service_id:04x}")

    @staticmethod
    def _expand(index: int, spec: FieldSpec) -> FieldAccessors:
        base = FIELD_ID_BASE + 2 * index
        return FieldAccessors(
            field=spec,
            getter=MethodSpec(base, f"get_{spec.name}") if spec.has_get else None,
            setter=MethodSpec(base + 1, f"set_{spec.name}") if spec.has_set else None,
            notifier=EventSpec(FIELD_ID_BASE + index, f"{spec.name}_changed") if spec.has_notify else None,
        )

    @property
    def all_methods(self) -> list[MethodSpec]:
        expanded = [m for a in self._accessors for m in (a.getter, a.setter) if m is not None]
        return [*self.methods, *expanded]

    @property
    def all_events(self) -> list[EventSpec]:
        return [*self.events, *(a.notifier for a in self._accessors if a.notifier is not None)]

    def accessors(self, field_name: str) -> FieldAccessors:
        for accessor in self._accessors:
            if accessor.field.name == field_name:
                return accessor
        raise KeyError(field_name)

    def method(self, name: str) -> MethodSpec:
        for method in self.all_methods:
            if method.name == name:
                return method
        raise KeyError(name)

    def event(self, name: str) -> EventSpec:
        for event in self.all_events:
            if event.name == name:
                return event
        raise KeyError(name)
