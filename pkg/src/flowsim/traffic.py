"""Flow arrival process and per-flow demand sampling.

Demands above the distribution cap are rejected and resampled rather
than clamped, so the tail keeps its shape at the cost of a slight
deviation of the realized mean from the nominal one.

All randomness comes from a caller-supplied numpy Generator; runs are
reproducible given the seed (PCG64 via ``numpy.random.default_rng``).
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Iterable, TextIO

import numpy as np

from .topology import Topology

EXPONENTIAL = "exponential"
PARETO = "pareto"
EMPIRICAL = "empirical"


class TrafficError(ValueError):
    """Invalid distribution parameters or malformed CDF input."""


@dataclass(frozen=True)
class DemandDistribution:
    """Flow-size distribution: light-tailed, heavy-tailed, or empirical CDF.

    min_demand is the Pareto scale (or empirical floor); max_demand caps
    the support. Empirical distributions carry (value, cumulative
    probability) points and are sampled by inverse transform, piecewise
    linear between points with an atom of the first point's mass at the
    first value.
    """

    kind: str
    mean: float
    max_demand: float
    min_demand: float = 0.0
    cdf_points: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self):
        if self.kind not in (EXPONENTIAL, PARETO, EMPIRICAL):
            raise TrafficError(f"unknown distribution kind {self.kind!r}")
        if not 0 <= self.min_demand < self.max_demand:
            raise TrafficError(
                f"need 0 <= min_demand < max_demand, got {self.min_demand}, {self.max_demand}")
        if self.kind == PARETO and self.mean <= self.min_demand:
            raise TrafficError(
                f"pareto shape undefined: mean {self.mean} must exceed min_demand {self.min_demand}")
        if self.kind == EMPIRICAL:
            if not self.cdf_points:
                raise TrafficError("empirical distribution needs at least one CDF point")
            prev_v, prev_p = None, None
            for v, p in self.cdf_points:
                if v <= 0 or not 0 <= p <= 1:
                    raise TrafficError(f"CDF point ({v}, {p}) outside valid range")
                if prev_v is not None and (v <= prev_v or p <= prev_p):
                    raise TrafficError(
                        f"CDF points must be strictly increasing, got ({v}, {p}) after ({prev_v}, {prev_p})")
                prev_v, prev_p = v, p
            if abs(self.cdf_points[-1][1] - 1.0) > 1e-9:
                raise TrafficError(
                    f"last cumulative probability must be 1, got {self.cdf_points[-1][1]}")
        elif self.mean <= 0:
            raise TrafficError(f"mean must be positive, got {self.mean}")

    @property
    def pareto_shape(self) -> float:
        """Shape fitted from (mean, min) under the untruncated formula."""
        return self.mean / (self.mean - self.min_demand)

    @property
    def support(self) -> tuple[float, float]:
        """(low, high) bounds every sample must respect; low is exclusive
        for the exponential kind, inclusive otherwise."""
        if self.kind == EMPIRICAL:
            return self.cdf_points[0][0], self.cdf_points[-1][0]
        return self.min_demand, self.max_demand

    @staticmethod
    def exponential(mean: float, max_demand: float) -> "DemandDistribution":
        return DemandDistribution(EXPONENTIAL, mean=mean, max_demand=max_demand)

    @staticmethod
    def pareto(mean: float, min_demand: float, max_demand: float) -> "DemandDistribution":
        return DemandDistribution(PARETO, mean=mean, max_demand=max_demand, min_demand=min_demand)

    @staticmethod
    def empirical(points: Iterable[tuple[float, float]]) -> "DemandDistribution":
        pts = tuple((float(v), float(p)) for v, p in points)
        if not pts:
            raise TrafficError("empirical distribution needs at least one CDF point")
        # mean of the piecewise-linear CDF (atom at the first point), diagnostic only
        mean = pts[0][0] * pts[0][1]
        for (v0, p0), (v1, p1) in zip(pts, pts[1:]):
            mean += (p1 - p0) * 0.5 * (v0 + v1)
        return DemandDistribution(EMPIRICAL, mean=mean, max_demand=pts[-1][0],
                                  min_demand=0.0, cdf_points=pts)


@dataclass(frozen=True)
class ArrivalProcess:
    """Poisson arrivals: exponential inter-arrival gaps with mean 1/rate."""

    rate_lambda: float

    def __post_init__(self):
        if self.rate_lambda <= 0:
            raise TrafficError(f"arrival rate must be positive, got {self.rate_lambda}")


@dataclass(frozen=True)
class FlowArrival:
    flow_id: int
    arrival_time: float
    source: int
    destination: int
    demand: float


def sample_demand(dist: DemandDistribution, rng: np.random.Generator) -> float:
    """Draw one demand from the distribution's support."""
    if dist.kind == EXPONENTIAL:
        while True:
            x = rng.exponential(dist.mean)
            if 0.0 < x <= dist.max_demand:
                return x
    if dist.kind == PARETO:
        inv_shape = 1.0 / dist.pareto_shape
        while True:
            x = dist.min_demand * (1.0 - rng.random()) ** -inv_shape
            if x <= dist.max_demand:
                return x
    return _sample_empirical(dist.cdf_points, rng.random())


def _sample_empirical(points, u):
    probs = [p for _, p in points]
    if u <= probs[0]:
        return points[0][0]
    i = bisect_left(probs, u)
    if i >= len(points):
        return points[-1][0]
    v0, p0 = points[i - 1]
    v1, p1 = points[i]
    return v0 + (v1 - v0) * (u - p0) / (p1 - p0)


def generate_workload(topology: Topology, process: ArrivalProcess,
                      dist: DemandDistribution, flow_count: int, seed: int) -> list[FlowArrival]:
    """Poisson arrivals with uniformly random distinct endpoint pairs.

    Fully determined by the seed; flow ids follow arrival order.
    """
    if flow_count < 1:
        raise TrafficError(f"flow_count must be >= 1, got {flow_count}")
    if topology.node_count < 2:
        raise TrafficError("need at least 2 nodes to generate flows")
    rng = np.random.default_rng(seed)
    n = topology.node_count
    mean_gap = 1.0 / process.rate_lambda
    arrivals = []
    clock = 0.0
    for flow_id in range(flow_count):
        clock += rng.exponential(mean_gap)
        src = int(rng.integers(n))
        dst = int(rng.integers(n))
        while dst == src:
            dst = int(rng.integers(n))
        arrivals.append(FlowArrival(flow_id=flow_id, arrival_time=clock,
                                    source=src, destination=dst,
                                    demand=sample_demand(dist, rng)))
    return arrivals


def load_empirical_cdf(source: TextIO | Iterable[str]) -> DemandDistribution:
    """Parse '<value> <cumulative_probability>' lines into a distribution."""
    points = []
    for lineno, raw in enumerate(source, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if len(fields) != 2:
            raise TrafficError(f"line {lineno}: expected '<value> <probability>', got {line!r}")
        try:
            points.append((float(fields[0]), float(fields[1])))
        except ValueError:
            raise TrafficError(f"line {lineno}: malformed CDF point {line!r}") from None
    if not points:
        raise TrafficError("empty CDF file")
    return DemandDistribution.empirical(points)
