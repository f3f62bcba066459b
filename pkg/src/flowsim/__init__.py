"""Flow-level event-driven simulator of adaptive single-path WAN routing."""

__version__ = "0.1.0"

from .engine import EngineError, ScenarioConfig, Simulation, run, simulate
from .metrics import CompletedFlow, RunReport, comparison_matrix, compute_report
from .routing import SCHEMES, Path, RoutingError, link_cost, min_max_path, min_sum_path, select_path
from .scheduling import POLICIES, SchedulingError, allocate
from .topology import Link, Topology, TopologyError, dump_topology, load_topology, make_uniform_capacity
from .traffic import (ArrivalProcess, DemandDistribution, FlowArrival, TrafficError,
                      generate_workload, load_empirical_cdf, sample_demand)

__all__ = [
    "ArrivalProcess",
    "CompletedFlow",
    "DemandDistribution",
    "EngineError",
    "FlowArrival",
    "Link",
    "POLICIES",
    "Path",
    "RoutingError",
    "RunReport",
    "SCHEMES",
    "ScenarioConfig",
    "SchedulingError",
    "Simulation",
    "Topology",
    "TopologyError",
    "TrafficError",
    "allocate",
    "comparison_matrix",
    "compute_report",
    "dump_topology",
    "generate_workload",
    "link_cost",
    "load_empirical_cdf",
    "load_topology",
    "make_uniform_capacity",
    "min_max_path",
    "min_sum_path",
    "run",
    "sample_demand",
    "select_path",
    "simulate",
]
