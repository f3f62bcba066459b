"""Event-driven simulation loop.

Arrivals are routed on the state snapshot at their arrival instant and
keep that path for life. Rates are recomputed at arrival and completion
events only; between events every active flow drains linearly at its
allocated rate. Per-link load (outstanding bytes) is maintained
incrementally: up by the demand on admission, down by rate x dt on every
advance, with the leftover snap residue removed on completion.

Simultaneous events order as: completions before arrivals, completions
among themselves by ascending flow id. A flow whose remaining bytes fall
to the snap threshold completes at the current clock even if its rate
has dropped to zero since, so tied completions cannot starve.

Per-flow numeric state lives in compact parallel arrays (active flows
occupy slots 0..n-1, freed by swap-remove), which keeps the per-event
cost flat even when congestion backs thousands of flows up. Allocation
runs the same kernels as scheduling.allocate(); validate mode replays
the public interface at every event and demands exact agreement.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path as FilePath
from typing import Union

import numpy as np

from .metrics import CompletedFlow, RunReport, compute_report
from .routing import UNIT_HOP, Scheme, resolve_scheme, select_path
from .scheduling import FCFS, MMF, RATE_FLOOR, allocate, resolve_policy
from .topology import Topology, load_topology, make_uniform_capacity
from .traffic import ArrivalProcess, DemandDistribution, FlowArrival, generate_workload

# remaining bytes at or below this are treated as drained
SNAP_BYTES = 1e-9
_REL_TOL = 1e-6
_ABS_TOL = 1e-9


class EngineError(RuntimeError):
    """Internal consistency failure (deadlock or bookkeeping drift)."""


@dataclass(frozen=True)
class Event:
    kind: str  # "arrival" or "completion"
    time: float
    flow_id: int


class _FlowView:
    """Read-only view of one active flow's slot (test and debug surface)."""

    __slots__ = ("_sim", "_slot")

    def __init__(self, sim, slot):
        self._sim = sim
        self._slot = slot

    @property
    def flow_id(self) -> int:
        return int(self._sim._fid[self._slot])

    @property
    def arrival(self) -> float:
        return float(self._sim._arrival[self._slot])

    @property
    def demand(self) -> float:
        return float(self._sim._demand[self._slot])

    @property
    def remaining(self) -> float:
        return float(self._sim._remaining[self._slot])

    @property
    def rate(self) -> float:
        return float(self._sim._rate[self._slot])

    @property
    def links(self) -> tuple[int, ...]:
        return self._sim._links_by_slot[self._slot]


class Simulation:
    """One run's network state plus its event loop.

    State surface (read by path selection): clock, link_load (outstanding
    bytes per link), link_rate (allocated rate sum per link), capacities.
    Single-threaded by design; independent runs may execute concurrently.
    """

    def __init__(self, topology: Topology, arrivals: list[FlowArrival],
                 scheme: Union[Scheme, str], policy: str, validate: bool = False):
        self.topology = topology
        self.scheme = resolve_scheme(scheme) if isinstance(scheme, str) else scheme
        self.policy = resolve_policy(policy)
        self.arrivals = arrivals
        self.validate = validate

        self.clock = 0.0
        self.capacities = topology.capacities()
        self.link_load = [0.0] * topology.link_count
        self.link_rate = [0.0] * topology.link_count
        self.completed: list[CompletedFlow] = []
        self._next_arrival = 0
        self._static_paths: dict[tuple[int, int], object] = {}

        size = 1024
        n_links = topology.link_count
        self._count = 0
        self._remaining = np.zeros(size)
        self._rate = np.zeros(size)
        self._arrival = np.zeros(size)
        self._demand = np.zeros(size)
        self._fid = np.zeros(size, dtype=np.int64)
        self._scratch = np.zeros(size)
        self._links_by_slot: list[tuple[int, ...]] = [()] * size
        self._hops_by_slot: list[int] = [0] * size
        self._slot_of: dict[int, int] = {}
        # per-slot link-membership bitmasks and a padded link-id matrix
        # (pad value = link count, swallowed by a minlength trick) let the
        # allocation kernels test and count path membership in bulk
        self._mask_words = (n_links + 63) // 64
        self._pmask = np.zeros((size, self._mask_words), dtype=np.uint64)
        self._pad_link = n_links
        self._max_hops = 16
        self._links_mat = np.full((size, self._max_hops), self._pad_link, dtype=np.int32)
        self._crossing_count = [0] * n_links
        self._cap_vec = np.asarray(self.capacities)

    @property
    def flows(self) -> dict[int, _FlowView]:
        """flow_id -> live view of the active flow (rebuilt per access)."""
        return {int(self._fid[s]): _FlowView(self, s) for s in range(self._count)}

    def done(self) -> bool:
        return self._next_arrival >= len(self.arrivals) and not self._count

    def step(self) -> Event:
        """Advance to and process exactly one event; returns its record."""
        if self.done():
            raise EngineError("step() called on a drained simulation")
        clock = self.clock
        n = self._count
        best_t = best_id = None
        if n:
            remaining = self._remaining[:n]
            rate = self._rate[:n]
            due = np.full(n, np.inf)
            np.divide(remaining, rate, out=due, where=rate > 0.0)
            due += clock
            due[remaining <= SNAP_BYTES] = clock
            pos = int(np.argmin(due))
            t = float(due[pos])
            if t != np.inf:
                best_t = t
                ties = np.nonzero(due == t)[0]
                fids = self._fid[:n][ties]
                best_id = int(fids.min())

        arrival_t = (self.arrivals[self._next_arrival].arrival_time
                     if self._next_arrival < len(self.arrivals) else None)
        if best_t is None and arrival_t is None:
            raise EngineError(
                f"deadlock at t={clock}: {self._count} active flows, all rates zero, "
                "no pending arrivals")

        if best_t is not None and (arrival_t is None or best_t <= arrival_t):
            event = Event("completion", best_t, best_id)
        else:
            event = Event("arrival", arrival_t, self.arrivals[self._next_arrival].flow_id)

        self._advance(event.time - clock)
        self.clock = event.time
        if event.kind == "completion":
            self._complete(event.flow_id)
        else:
            self._admit(self.arrivals[self._next_arrival])
            self._next_arrival += 1
        self._reallocate()
        if self.validate:
            self._check_consistency()
        return event

    def run_to_completion(self) -> list[CompletedFlow]:
        while not self.done():
            self.step()
        return self.completed

    def _advance(self, dt: float) -> None:
        if dt < 0:
            raise EngineError(f"time went backwards by {-dt}")
        if dt == 0.0:
            return
        n = self._count
        if n:
            remaining = self._remaining[:n]
            drained = self._scratch[:n]
            np.multiply(self._rate[:n], dt, out=drained)
            np.subtract(remaining, drained, out=remaining)
            np.maximum(remaining, 0.0, out=remaining)
        load = self.link_load
        for l, r in enumerate(self.link_rate):
            if r:
                v = load[l] - r * dt
                load[l] = v if v > 0.0 else 0.0

    def _grow(self) -> None:
        size = len(self._remaining) * 2
        for name in ("_remaining", "_rate", "_arrival", "_demand", "_scratch"):
            old = getattr(self, name)
            new = np.zeros(size)
            new[:len(old)] = old
            setattr(self, name, new)
        fid = np.zeros(size, dtype=np.int64)
        fid[:len(self._fid)] = self._fid
        self._fid = fid
        pmask = np.zeros((size, self._mask_words), dtype=np.uint64)
        pmask[:len(self._pmask)] = self._pmask
        self._pmask = pmask
        links_mat = np.full((size, self._max_hops), self._pad_link, dtype=np.int32)
        links_mat[:len(self._links_mat)] = self._links_mat
        self._links_mat = links_mat
        self._links_by_slot.extend([()] * (size - len(self._links_by_slot)))
        self._hops_by_slot.extend([0] * (size - len(self._hops_by_slot)))

    def _widen(self, hops: int) -> None:
        width = self._max_hops
        while width < hops:
            width *= 2
        links_mat = np.full((len(self._links_mat), width), self._pad_link, dtype=np.int32)
        links_mat[:, :self._max_hops] = self._links_mat
        self._links_mat = links_mat
        self._max_hops = width

    def _admit(self, arrival: FlowArrival) -> None:
        if self.scheme.metric == UNIT_HOP:
            key = (arrival.source, arrival.destination)
            path = self._static_paths.get(key)
            if path is None:
                path = select_path(self.scheme, self.topology, self, arrival)
                self._static_paths[key] = path
        else:
            path = select_path(self.scheme, self.topology, self, arrival)
        slot = self._count
        if slot == len(self._remaining):
            self._grow()
        if path.hop_count > self._max_hops:
            self._widen(path.hop_count)
        fid = arrival.flow_id
        self._remaining[slot] = arrival.demand
        self._rate[slot] = 0.0
        self._arrival[slot] = arrival.arrival_time
        self._demand[slot] = arrival.demand
        self._fid[slot] = fid
        self._links_by_slot[slot] = path.links
        self._hops_by_slot[slot] = path.hop_count
        self._slot_of[fid] = slot
        self._count = slot + 1
        row = self._links_mat[slot]
        row[:] = self._pad_link
        row[:path.hop_count] = path.links
        mask = self._pmask[slot]
        mask[:] = 0
        load = self.link_load
        counts = self._crossing_count
        for l in path.links:
            load[l] += arrival.demand
            counts[l] += 1
            mask[l >> 6] |= np.uint64(1 << (l & 63))

    def _complete(self, flow_id: int) -> None:
        slot = self._slot_of.pop(flow_id)
        residue = float(self._remaining[slot])
        if residue > SNAP_BYTES:
            raise EngineError(
                f"flow {flow_id} completed with {residue} bytes outstanding")
        links = self._links_by_slot[slot]
        load = self.link_load
        counts = self._crossing_count
        for l in links:
            counts[l] -= 1
            if residue:
                v = load[l] - residue
                load[l] = v if v > 0.0 else 0.0
        record = CompletedFlow(flow_id=flow_id, arrival_time=float(self._arrival[slot]),
                               completion_time=self.clock, demand=float(self._demand[slot]),
                               hop_count=self._hops_by_slot[slot])
        if self.validate:
            min_cap = min(self.capacities[l] for l in links)
            floor = record.arrival_time + record.demand / min_cap
            if record.completion_time < floor - _REL_TOL * record.demand - _ABS_TOL:
                raise EngineError(
                    f"flow {flow_id} finished at {record.completion_time}, faster than "
                    f"its path allows ({floor})")
        self.completed.append(record)
        # swap-remove: keep active slots compact
        last = self._count - 1
        if slot != last:
            for arr in (self._remaining, self._rate, self._arrival, self._demand, self._fid):
                arr[slot] = arr[last]
            self._pmask[slot] = self._pmask[last]
            self._links_mat[slot] = self._links_mat[last]
            self._links_by_slot[slot] = self._links_by_slot[last]
            self._hops_by_slot[slot] = self._hops_by_slot[last]
            self._slot_of[int(self._fid[slot])] = slot
        self._count = last

    def _reallocate(self) -> None:
        n = self._count
        link_rate = self.link_rate
        for l in range(len(link_rate)):
            link_rate[l] = 0.0
        if not n:
            return
        rate = self._rate
        rate[:n] = 0.0
        links_by_slot = self._links_by_slot
        if self.policy == MMF:
            self._fill_vectorized(n)
        else:
            if self.policy == FCFS:
                order = np.lexsort((self._fid[:n], self._arrival[:n]))
            else:  # SRPT, drained-but-unprocessed flows rank at the snap floor
                keys = np.maximum(self._remaining[:n], SNAP_BYTES)
                order = np.lexsort((self._fid[:n], self._arrival[:n], keys))
            self._greedy_masked(order, rate)
        for slot in np.nonzero(rate[:n])[0].tolist():
            r = float(rate[slot])
            for l in links_by_slot[slot]:
                link_rate[l] += r

    def _greedy_masked(self, order, rate) -> None:
        """Priority-order bottleneck walk, identical to greedy_fill.

        A flow receives nothing exactly when its path crosses a
        saturated link, so each time new links saturate the still-queued
        tail is mask-filtered in bulk instead of being walked flow by
        flow.
        """
        residual = list(self.capacities)
        lookup = residual.__getitem__
        links_by_slot = self._links_by_slot
        words = self._mask_words
        cand = order
        cand_masks = self._pmask[order]
        sat = np.zeros(words, dtype=np.uint64)
        zero = np.uint64(0)
        one = np.uint64(1)
        while cand.size:
            newly_saturated = []
            served = cand.size
            for pos, slot in enumerate(cand.tolist()):
                links = links_by_slot[slot]
                r = min(map(lookup, links))
                if r < RATE_FLOOR:
                    continue
                rate[slot] = r
                for l in links:
                    v = residual[l] - r
                    residual[l] = v
                    if v < RATE_FLOOR:
                        newly_saturated.append(l)
                if newly_saturated:
                    served = pos + 1
                    break
            if served >= cand.size:
                return
            for l in newly_saturated:
                sat[l >> 6] |= one << np.uint64(l & 63)
            tail = cand[served:]
            tail_masks = cand_masks[served:]
            clean = ~np.any(tail_masks & sat, axis=1)
            cand = tail[clean]
            cand_masks = tail_masks[clean]

    def _fill_vectorized(self, n: int) -> None:
        """Progressive filling over the slot arrays, identical to
        progressive_fill: same rounds, same grouped float updates.

        Share bookkeeping is scalar (the link count is small and the
        contended set shrinks); only the per-round group extraction and
        crossing counts touch the flow axis, in bulk.
        """
        counts = list(self._crossing_count)
        residual = list(self.capacities)
        masks = self._pmask[:n]
        links_mat = self._links_mat[:n]
        rate = self._rate
        unfrozen = np.ones(n, dtype=bool)
        n_links = self._pad_link
        left = n
        contended = [l for l in range(n_links) if counts[l]]
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
            hit = (masks[:, best_link >> 6] & np.uint64(1 << (best_link & 63))) != 0
            hit &= unfrozen
            group = np.nonzero(hit)[0]
            unfrozen[group] = False
            if share >= RATE_FLOOR:
                rate[group] = share
            left -= group.size
            crossings = np.bincount(links_mat[group].ravel(),
                                    minlength=n_links + 1)[:n_links]
            for l in np.nonzero(crossings)[0].tolist():
                k = int(crossings[l])
                counts[l] -= k
                residual[l] -= share * k

    def _check_consistency(self) -> None:
        n = self._count
        scratch = [0.0] * len(self.link_load)
        for slot in range(n):
            remaining = float(self._remaining[slot])
            for l in self._links_by_slot[slot]:
                scratch[l] += remaining
        for l, (got, want) in enumerate(zip(self.link_load, scratch)):
            if abs(got - want) > max(_REL_TOL * max(abs(got), abs(want)), _ABS_TOL):
                raise EngineError(
                    f"link {l} load drift at t={self.clock}: incremental {got} vs recomputed {want}")
        for l, (r, cap) in enumerate(zip(self.link_rate, self.capacities)):
            if r > cap + _ABS_TOL:
                raise EngineError(f"link {l} oversubscribed at t={self.clock}: {r} > {cap}")
        # the public allocation interface must agree exactly with the
        # engine's array-driven use of the same kernels
        entries = [(int(self._fid[s]), float(self._arrival[s]),
                    max(float(self._remaining[s]), SNAP_BYTES), self._links_by_slot[s])
                   for s in range(n)]
        expected = allocate(self.policy, entries, self.capacities)
        for slot in range(n):
            fid = int(self._fid[slot])
            if float(self._rate[slot]) != expected[fid]:
                raise EngineError(
                    f"allocation drift for flow {fid} at t={self.clock}: "
                    f"engine {float(self._rate[slot])} vs interface {expected[fid]}")


@dataclass
class ScenarioConfig:
    """One experiment cell. `topology` may be a loaded Topology or a file path."""

    topology: Union[Topology, str, FilePath]
    scheme: str
    policy: str
    seed: int
    flow_count: int
    distribution: DemandDistribution
    rate_lambda: float = 1.0
    dist_label: str = ""
    capacity_override: float | None = None
    warmup_skip: int = 0


def simulate(topology: Topology, arrivals: list[FlowArrival], scheme: Union[Scheme, str],
             policy: str, validate: bool = False) -> list[CompletedFlow]:
    """Drive an explicit arrival list to completion."""
    return Simulation(topology, arrivals, scheme, policy, validate).run_to_completion()


def run(config: ScenarioConfig, validate: bool = False) -> RunReport:
    """Generate the workload, drain every flow, and report. Deterministic
    given the config."""
    topology = config.topology
    if not isinstance(topology, Topology):
        with open(topology, encoding="utf-8") as fh:
            topology = load_topology(fh)
    if config.capacity_override is not None:
        topology = make_uniform_capacity(topology, config.capacity_override)
    arrivals = generate_workload(topology, ArrivalProcess(config.rate_lambda),
                                 config.distribution, config.flow_count, config.seed)
    completed = simulate(topology, arrivals, config.scheme, config.policy, validate)
    echo = {
        "scheme": config.scheme,
        "policy": config.policy,
        "distribution": config.dist_label or config.distribution.kind,
        "seed": config.seed,
        "flows": config.flow_count,
        "lambda": config.rate_lambda,
        "warmup": config.warmup_skip,
    }
    return compute_report(completed, warmup_skip=config.warmup_skip, config=echo)
