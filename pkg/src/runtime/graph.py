"""Reactor topology and the acyclic precedence graph derived from it."""

import networkx as nx

from src.errors import CyclicDependency
from src.runtime.reactor import InputPort, OutputPort, Port, Reaction, Reactor, Trigger
from src.runtime.tag import Duration


class ReactorGraph:
    """Reactors plus (output -> input) connections; immutable once scheduled."""

    def __init__(self):
        self.reactors: list[Reactor] = []
        self.connections: list[tuple[OutputPort, InputPort, Duration | None]] = []

    def add(self, reactor: Reactor) -> Reactor:
        if any(r.name == reactor.name for r in self.reactors):
            raise ValueError(f"duplicate reactor name: {reactor.name}")
        self.reactors.append(reactor)
        return reactor

    def connect(self, source: OutputPort, dest: InputPort, delay: Duration | None = None) -> None:
        """Connect an output to an input; a positive delay makes it a delayed connection."""
        if not isinstance(source, OutputPort) or not isinstance(dest, InputPort):
            raise TypeError("connections run from an output port to an input port")
        if dest.upstream is not None:
            raise ValueError(f"{dest.fqn} already has an upstream connection")
        dest.upstream = source
        if delay:
            source.delayed.append((dest, delay))
        else:
            source.downstream.append(dest)
        self.connections.append((source, dest, delay))

    @property
    def reactions(self) -> list[Reaction]:
        return [r for reactor in self.reactors for r in reactor.reactions]

    def triggers(self) -> list[Trigger]:
        return [t for reactor in self.reactors for t in reactor.triggers]


def _reached_ports(port: Port) -> list[Port]:
    """The port itself plus every input it feeds through zero-delay connections."""
    if isinstance(port, OutputPort):
        return [port, *port.downstream]
    return [port]


def build_apg(graph: ReactorGraph) -> nx.DiGraph:
    """Derive the precedence graph and assign each reaction its level.

    A precedes B when A writes a port that reaches a trigger or source of B
    without delay, or when both belong to one reactor and A is declared first.
    """
    apg = nx.DiGraph()
    reactions = graph.reactions
    apg.add_nodes_from(reactions)

    readers: dict[Trigger, list[Reaction]] = {}
    for reaction in reactions:
        for trigger in (*reaction.triggers, *reaction.sources):
            readers.setdefault(trigger, []).append(reaction)

    for reactor in graph.reactors:
        for earlier, later in zip(reactor.reactions, reactor.reactions[1:]):
            apg.add_edge(earlier, later)

    for reaction in reactions:
        for effect in reaction.effects:
            if not isinstance(effect, Port):
                continue
            for port in _reached_ports(effect):
                for reader in readers.get(port, ()):
                    apg.add_edge(reaction, reader)

    try:
        cycle = nx.find_cycle(apg)
    except nx.NetworkXNoCycle:
        cycle = None
    if cycle:
        raise CyclicDependency([edge[0].fqn for edge in cycle] + [cycle[0][0].fqn])

    for order, reaction in enumerate(nx.lexicographical_topological_sort(apg, key=_sort_key(reactions))):
        preds = list(apg.predecessors(reaction))
        reaction.level = max((p.level + 1 for p in preds), default=0)
        reaction.order = order
    return apg


def _sort_key(reactions: list[Reaction]):
    position = {r: i for i, r in enumerate(reactions)}
    return lambda r: position[r]
