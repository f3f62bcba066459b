"""WAN graph model and plain-text edge-list parser.

Links are undirected and carry a single shared capacity: both traffic
directions on a link draw from one pool. Node ids must be the dense
range 0..N-1. Link ids follow file order, starting at 0.

File format (UTF-8 text)::

    nodes <N>
    <u> <v> <capacity>     # one line per link
    # comment lines and blank lines are ignored
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, TextIO


class TopologyError(ValueError):
    """Malformed or invalid topology input."""


@dataclass(frozen=True)
class Link:
    id: int
    u: int
    v: int
    capacity: float

    def other_end(self, node: int) -> int:
        return self.v if node == self.u else self.u


class Topology:
    """Validated undirected graph with per-link capacities.

    Immutable after construction by convention; safe to share
    read-only across concurrent runs.
    """

    def __init__(self, node_count: int, links: list[Link]):
        if node_count < 1:
            raise TopologyError("topology must have at least one node")
        self.node_count = node_count
        self.links = links
        # adjacency[n] = list of (neighbor, link_id)
        adjacency: list[list[tuple[int, int]]] = [[] for _ in range(node_count)]
        seen_pairs: set[tuple[int, int]] = set()
        for idx, link in enumerate(links):
            if link.id != idx:
                raise TopologyError(f"link ids must be dense and ordered, got {link.id} at {idx}")
            if link.u == link.v:
                raise TopologyError(f"link {link.id}: self-loop on node {link.u}")
            for end in (link.u, link.v):
                if not 0 <= end < node_count:
                    raise TopologyError(f"link {link.id}: node {end} outside [0, {node_count})")
            if link.capacity <= 0:
                raise TopologyError(f"link {link.id}: capacity must be positive, got {link.capacity}")
            pair = (min(link.u, link.v), max(link.u, link.v))
            if pair in seen_pairs:
                raise TopologyError(f"link {link.id}: duplicate edge between {pair[0]} and {pair[1]}")
            seen_pairs.add(pair)
            adjacency[link.u].append((link.v, link.id))
            adjacency[link.v].append((link.u, link.id))
        self.adjacency = adjacency
        self._check_connected()

    @property
    def link_count(self) -> int:
        return len(self.links)

    def capacities(self) -> list[float]:
        return [link.capacity for link in self.links]

    def _check_connected(self) -> None:
        if self.node_count == 1:
            return
        seen = [False] * self.node_count
        seen[0] = True
        stack = [0]
        while stack:
            node = stack.pop()
            for neighbor, _ in self.adjacency[node]:
                if not seen[neighbor]:
                    seen[neighbor] = True
                    stack.append(neighbor)
        unreached = [n for n, ok in enumerate(seen) if not ok]
        if unreached:
            raise TopologyError(f"graph is disconnected: node {unreached[0]} unreachable from node 0")


def load_topology(source: TextIO | Iterable[str]) -> Topology:
    """Parse the edge-list format into a validated Topology.

    Raises TopologyError naming the offending line or element.
    """
    node_count = None
    links: list[Link] = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if node_count is None:
            if len(fields) != 2 or fields[0] != "nodes":
                raise TopologyError(f"line {lineno}: expected 'nodes <N>' header, got {line!r}")
            try:
                node_count = int(fields[1])
            except ValueError:
                raise TopologyError(f"line {lineno}: node count {fields[1]!r} is not an integer") from None
            continue
        if len(fields) != 3:
            raise TopologyError(f"line {lineno}: expected '<u> <v> <capacity>', got {line!r}")
        try:
            u, v = int(fields[0]), int(fields[1])
            capacity = float(fields[2])
        except ValueError:
            raise TopologyError(f"line {lineno}: malformed link line {line!r}") from None
        links.append(Link(id=len(links), u=u, v=v, capacity=capacity))
    if node_count is None:
        raise TopologyError("empty topology file: missing 'nodes <N>' header")
    return Topology(node_count, links)


def dump_topology(topology: Topology) -> str:
    """Serialize back to the file format; reloading yields an equal graph."""
    lines = [f"nodes {topology.node_count}"]
    for link in topology.links:
        lines.append(f"{link.u} {link.v} {link.capacity!r}")
    return "\n".join(lines) + "\n"


def make_uniform_capacity(topology: Topology, capacity: float) -> Topology:
    """Same graph with every link capacity replaced by `capacity`."""
    if capacity <= 0:
        raise TopologyError(f"capacity must be positive, got {capacity}")
    links = [Link(id=l.id, u=l.u, v=l.v, capacity=capacity) for l in topology.links]
    return Topology(topology.node_count, links)
