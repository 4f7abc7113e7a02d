"""Exception hierarchy shared by the runtime, middleware, transactors and CLI."""


class DeterminismError(Exception):
    """Base class for every error raised by this package."""


# ── runtime ──

class CyclicDependency(DeterminismError):
    def __init__(self, cycle: list[str]):
        self.cycle = cycle
        super().__init__("zero-delay cycle: " + " -> ".join(cycle))


class UndeclaredEffect(DeterminismError):
    def __init__(self, reaction: str, target: str):
        self.reaction = reaction
        self.target = target
        super().__init__(f"reaction {reaction} did not declare {target} as an effect")


class SchedulerStopped(DeterminismError):
    """The scheduler has terminated and accepts no more events."""


class ExecutionFault(DeterminismError):
    def __init__(self, tag, reaction: str):
        self.tag = tag
        self.reaction = reaction
        super().__init__(f"reaction {reaction} failed at {tag}")


# ── middleware ──

class ServiceNotFound(DeterminismError):
    def __init__(self, service_id: int):
        self.service_id = service_id
        super().__init__(f"service 0x{service_id:04x} is not registered")


class MalformedMessage(DeterminismError):
    """Raised by the wire codec on truncated or inconsistent input."""


class BypassEmpty(DeterminismError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"timestamp bypass holds no tag for {key}")


class BypassOccupied(DeterminismError):
    def __init__(self, key):
        self.key = key
        super().__init__(f"timestamp bypass already holds a tag for {key}")


# ── transactors ──

class DeadlineViolation(DeterminismError):
    def __init__(self, tag, deadline: int, physical_time: int):
        self.tag = tag
        self.deadline = deadline
        self.physical_time = physical_time
        super().__init__(
            f"deadline {deadline} ns violated for {tag} at physical time {physical_time}"
        )


class UntaggedMessage(DeterminismError):
    """A message without tag trailer reached a transactor with the Fail policy."""


class StaleTag(DeterminismError):
    def __init__(self, tag, current):
        self.tag = tag
        self.current = current
        super().__init__(f"tag {tag} is not after current logical time {current}")


class CausalityBreach(DeterminismError):
    def __init__(self, tag, required):
        self.tag = tag
        self.required = required
        super().__init__(f"response tag {tag} precedes delivered request tag {required}")


# ── configuration ──

class ConfigError(DeterminismError, ValueError):
    """Invalid experiment configuration."""
