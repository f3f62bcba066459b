"""Transmission-rate allocation for the active flows on their fixed paths.

Three policies: FCFS and SRPT as global priority orders with greedy
bottleneck allocation (each flow in turn takes the minimum residual
capacity along its path), and MMF via progressive filling. Flows are
not capped by their own demand; link capacity is the binding constraint.

The kernels at the bottom do the arithmetic on caller-supplied
orderings; the engine drives them directly on its slot arrays, and
allocate() wraps them behind the (flow_id, arrival, remaining, path)
list interface. Both routes perform identical float operations, so
their results match exactly.
"""

from __future__ import annotations

import heapq

from .routing import Path

FCFS = "fcfs"
SRPT = "srpt"
MMF = "mmf"
POLICIES = (FCFS, SRPT, MMF)

# rates below this are snapped to zero to avoid denormal event times
RATE_FLOOR = 1e-12


class SchedulingError(ValueError):
    """Invalid policy name or malformed active-flow entry."""


def resolve_policy(name: str) -> str:
    if name not in POLICIES:
        raise SchedulingError(f"unknown policy {name!r}; valid policies: {', '.join(POLICIES)}")
    return name


def allocate(policy: str, active_flows, topology) -> dict[int, float]:
    """Compute each active flow's rate; returns flow_id -> bytes/time.

    active_flows entries are (flow_id, arrival_time, remaining_bytes,
    path), where path is a Path or a bare tuple of link ids. Ties in
    priority break by flow_id, so allocations are deterministic.
    """
    entries = []
    for flow_id, arrival, remaining, path in active_flows:
        links = path if type(path) is tuple else (
            path.links if isinstance(path, Path) else tuple(path))
        if not links:
            raise SchedulingError(f"flow {flow_id} has an empty path")
        if remaining <= 0:
            raise SchedulingError(f"flow {flow_id} has nonpositive remaining bytes {remaining}")
        entries.append((flow_id, arrival, remaining, links))

    capacities = topology.capacities() if hasattr(topology, "capacities") else list(topology)
    rates = {e[0]: 0.0 for e in entries}
    if policy == FCFS:
        keyed = [(arrival, flow_id, links) for flow_id, arrival, _, links in entries]
        greedy_fill(_heap_order(keyed), capacities, rates)
    elif policy == SRPT:
        keyed = [(remaining, arrival, flow_id, links)
                 for flow_id, arrival, remaining, links in entries]
        greedy_fill(_heap_order(keyed), capacities, rates)
    elif policy == MMF:
        n_links = len(capacities)
        counts = [0] * n_links
        members: list[list[int]] = [[] for _ in range(n_links)]
        links_of = {}
        for flow_id, _, _, links in entries:
            links_of[flow_id] = links
            for l in links:
                counts[l] += 1
                members[l].append(flow_id)
        progressive_fill(members, links_of, counts, list(capacities), rates)
    else:
        raise SchedulingError(f"unknown policy {policy!r}; valid policies: {', '.join(POLICIES)}")
    return rates


def _heap_order(keyed):
    """Yield (ident, links) pairs in ascending key order, lazily.

    Keys are priority tuples ending in (ident, links); the unique ident
    before links keeps comparisons away from the links field. Lazy
    extraction means a consumer that stops early never orders the tail.
    """
    heapq.heapify(keyed)
    while keyed:
        entry = heapq.heappop(keyed)
        yield entry[-2], entry[-1]


def greedy_fill(pairs, capacities, rates) -> None:
    """Bottleneck allocation in priority order, written into `rates`.

    `pairs` yields (ident, links) in priority order; `rates` must come
    prefilled with zeros. Stops once every link is saturated -- the rest
    of the order cannot receive anything.
    """
    residual = list(capacities)
    lookup = residual.__getitem__
    unsaturated = len(residual)
    for ident, links in pairs:
        rate = min(map(lookup, links))
        if rate < RATE_FLOOR:
            continue
        rates[ident] = rate
        for l in links:
            v = residual[l] - rate
            residual[l] = v
            if v < RATE_FLOOR:
                unsaturated -= 1
        if not unsaturated:
            break


def progressive_fill(members, links_of, counts, residual, rates) -> None:
    """Max-min fairness: repeatedly saturate the most contended link.

    Each round freezes the unfrozen flows of the link with the smallest
    residual-per-flow share; shares never decrease across rounds, which
    gives every flow a saturated bottleneck link where its rate is
    maximal -- the max-min condition. `counts` (unfrozen flows per link)
    and `residual` are consumed; `rates` must come prefilled with zeros
    over the whole flow population.

    Rounds apply grouped updates (per link: one subtraction of
    share x crossings), so membership order never changes the floats and
    a vectorized driver reproduces them bit for bit.
    """
    left = len(rates)
    frozen = dict.fromkeys(rates, False)
    contended = [l for l, c in enumerate(counts) if c]
    while left:
        best_share = best_link = None
        surviving = []
        for l in contended:
            c = counts[l]
            if c:
                surviving.append(l)
                share = residual[l] / c
                if best_share is None or share < best_share:
                    best_share, best_link = share, l
        contended = surviving
        share = best_share if best_share > 0.0 else 0.0
        crossings: dict[int, int] = {}
        for ident in members[best_link]:
            if frozen[ident]:
                continue
            frozen[ident] = True
            if share >= RATE_FLOOR:
                rates[ident] = share
            left -= 1
            for l in links_of[ident]:
                crossings[l] = crossings.get(l, 0) + 1
        for l, k in crossings.items():
            counts[l] -= k
            residual[l] -= share * k
