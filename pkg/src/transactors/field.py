"""Fields are a getter, a setter and a change notification; bind each one present."""

from dataclasses import dataclass
from typing import Literal

from src.middleware.proxy import ServiceProxy, ServiceSkeleton
from src.transactors.base import Transactor
from src.transactors.config import TransactorConfig
from src.transactors.event import ClientEventTransactor, ServerEventTransactor
from src.transactors.method import ClientMethodTransactor, ServerMethodTransactor


@dataclass(frozen=True)
class FieldTransactors:
    getter: Transactor | None
    setter: Transactor | None
    notifier: Transactor | None

    @property
    def transactors(self) -> list[Transactor]:
        return [t for t in (self.getter, self.setter, self.notifier) if t is not None]


def field_binding(
    endpoint: ServiceProxy | ServiceSkeleton,
    field_name: str,
    config: TransactorConfig,
    side: Literal["client", "server"] | None = None,
) -> FieldTransactors:
    """Create the transactors for one field; the side follows the endpoint type by default."""
    side = side or ("server" if isinstance(endpoint, ServiceSkeleton) else "client")
    accessors = endpoint.descriptor.accessors(field_name)
    prefix = f"{endpoint.binding.name}.{field_name}"
    if side == "server":
        method_cls, event_cls = ServerMethodTransactor, ServerEventTransactor
    else:
        method_cls, event_cls = ClientMethodTransactor, ClientEventTransactor

    def method(spec):
        return method_cls(f"{prefix}.{spec.name}", endpoint, spec.method_id, config) if spec else None

    notifier = accessors.notifier
    return FieldTransactors(
        getter=method(accessors.getter),
        setter=method(accessors.setter),
        notifier=event_cls(f"{prefix}.{notifier.name}", endpoint, notifier.event_id, config) if notifier else None,
    )
