"""Per-link cost metrics and minimum-cost path selection.

Seven schemes: MINSUM/MINMAX over the utilization, load, and
load+demand link metrics, plus the static MinHop baseline. Ties are
broken deterministically: by fewer hops, then by lexicographically
smaller node sequence (for MINMAX, by smaller cost sum first), so
repeated runs and shuffled adjacency orders return identical paths.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass

from .topology import Topology

UTILIZATION = "utilization"
LOAD = "load"
LOAD_DEMAND = "load_demand"
UNIT_HOP = "unit_hop"

SUM = "sum"
MAX = "max"


class RoutingError(ValueError):
    """No usable path or invalid selection inputs."""


@dataclass(frozen=True)
class Scheme:
    objective: str  # SUM or MAX
    metric: str


# exact CLI/config names
SCHEMES: dict[str, Scheme] = {
    "minsum_load": Scheme(SUM, LOAD),
    "minmax_load": Scheme(MAX, LOAD),
    "minsum_load_demand": Scheme(SUM, LOAD_DEMAND),
    "minmax_load_demand": Scheme(MAX, LOAD_DEMAND),
    "minsum_util": Scheme(SUM, UTILIZATION),
    "minmax_util": Scheme(MAX, UTILIZATION),
    "minhop": Scheme(SUM, UNIT_HOP),
}


@dataclass(frozen=True)
class Path:
    nodes: tuple[int, ...]
    links: tuple[int, ...]

    @property
    def hop_count(self) -> int:
        return len(self.links)


def resolve_scheme(name: str) -> Scheme:
    try:
        return SCHEMES[name]
    except KeyError:
        valid = ", ".join(sorted(SCHEMES))
        raise RoutingError(f"unknown scheme {name!r}; valid schemes: {valid}") from None


def link_cost(metric: str, load: float, allocated_rate: float, capacity: float,
              new_flow_demand: float) -> float:
    """Cost of one link under the given metric."""
    if metric == UTILIZATION:
        return allocated_rate / capacity
    if metric == LOAD:
        return load
    if metric == LOAD_DEMAND:
        return load + new_flow_demand
    if metric == UNIT_HOP:
        return 1.0
    raise RoutingError(f"unknown link cost metric {metric!r}")


def min_sum_path(topology: Topology, costs, src: int, dst: int,
                 max_link_cost: float | None = None) -> Path:
    """Simple path minimizing the cost sum (Dijkstra, deterministic ties).

    Labels are (cost, hops, node sequence); each component only grows
    along a path, so label-setting search is exact, including ties.
    """
    if src == dst:
        raise RoutingError(f"source and destination are both node {src}")
    adjacency = topology.adjacency
    start = (0.0, 0, (src,), ())
    heap = [start]
    best = {src: start[:3]}
    finalized = set()
    while heap:
        cost, hops, nodes, links = heapq.heappop(heap)
        node = nodes[-1]
        if node in finalized:
            continue
        if node == dst:
            return Path(nodes, links)
        finalized.add(node)
        for nbr, link_id in adjacency[node]:
            if nbr in finalized:
                continue
            w = costs[link_id]
            if w < 0:
                raise RoutingError(f"negative cost {w} on link {link_id}")
            if max_link_cost is not None and w > max_link_cost:
                continue
            label = (cost + w, hops + 1, nodes + (nbr,))
            known = best.get(nbr)
            if known is None or label < known:
                best[nbr] = label
                heapq.heappush(heap, label + (links + (link_id,),))
    raise RoutingError(f"no path from {src} to {dst}")


def _min_max_value(topology: Topology, costs, src: int, dst: int) -> float:
    """Minimum over paths of the maximum link cost (bottleneck search)."""
    adjacency = topology.adjacency
    heap = [(0.0, src)]
    best = {src: 0.0}
    finalized = set()
    while heap:
        mx, node = heapq.heappop(heap)
        if node in finalized:
            continue
        if node == dst:
            return mx
        finalized.add(node)
        for nbr, link_id in adjacency[node]:
            if nbr in finalized:
                continue
            w = costs[link_id]
            if w < 0:
                raise RoutingError(f"negative cost {w} on link {link_id}")
            label = mx if mx >= w else w
            if nbr not in best or label < best[nbr]:
                best[nbr] = label
                heapq.heappush(heap, (label, nbr))
    raise RoutingError(f"no path from {src} to {dst}")


def min_max_path(topology: Topology, costs, src: int, dst: int) -> Path:
    """Simple path minimizing the maximum link cost.

    Ties among minimax-optimal paths break by smaller cost sum, then
    fewer hops, then node sequence. Every such path lives in the
    subgraph of links costing at most the bottleneck value, so the
    tie-break reduces to a min-sum search there.
    """
    bottleneck = _min_max_value(topology, costs, src, dst)
    return min_sum_path(topology, costs, src, dst, max_link_cost=bottleneck)


def compute_link_costs(metric: str, link_load, link_rate, capacities,
                       new_flow_demand: float) -> list[float]:
    """Per-link cost vector from a network-state snapshot."""
    if metric == UTILIZATION:
        return [r / c for r, c in zip(link_rate, capacities)]
    if metric == LOAD:
        return list(link_load)
    if metric == LOAD_DEMAND:
        return [x + new_flow_demand for x in link_load]
    if metric == UNIT_HOP:
        return [1.0] * len(capacities)
    raise RoutingError(f"unknown link cost metric {metric!r}")


def select_path(scheme: Scheme | str, topology: Topology, network_state, flow) -> Path:
    """Route a newly arriving flow on the state snapshot at its arrival.

    The snapshot excludes the arriving flow itself: load variables grow
    by its demand only after the path is assigned.
    """
    if isinstance(scheme, str):
        scheme = resolve_scheme(scheme)
    costs = compute_link_costs(scheme.metric, network_state.link_load,
                               network_state.link_rate, network_state.capacities,
                               flow.demand)
    if scheme.objective == MAX:
        return min_max_path(topology, costs, flow.source, flow.destination)
    return min_sum_path(topology, costs, flow.source, flow.destination)
