"""Per-run summary statistics and cross-scheme comparison tables.

MFCT is the arithmetic mean flow completion time, TFCT the tail FCT
(99th percentile, nearest-rank), and total bandwidth the byte-hops sum
(demand times assigned hop count): every byte consumes one capacity
unit per hop, so byte-hops measures total network resource used.

The comparison matrix averages each scheme's metric over seeds within a
(policy, distribution) group, then reports each scheme's percent above
the per-group minimum and its bin, with the half-open bins
[0,10) [10,20) [20,30) [30,40) [40,50) [50,inf).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, NamedTuple


class MetricsError(ValueError):
    """Empty flow sets or inconsistent comparison groups."""


@dataclass(frozen=True)
class CompletedFlow:
    flow_id: int
    arrival_time: float
    completion_time: float
    demand: float
    hop_count: int

    @property
    def fct(self) -> float:
        return self.completion_time - self.arrival_time


@dataclass
class RunReport:
    config: dict
    mfct: float
    tfct: float
    total_bandwidth: float
    flow_records: list[CompletedFlow] = field(repr=False, default_factory=list)
    realized_demand_mean: float = 0.0


class RunRow(NamedTuple):
    """One runs.csv row; the matrix is recomputable from these alone."""

    scheme: str
    policy: str
    distribution: str
    seed: int
    flows: int
    mfct: float
    tfct: float
    bandwidth: float


@dataclass(frozen=True)
class ComparisonCell:
    metric: str
    policy: str
    distribution: str
    scheme: str
    value: float
    percent_from_min: float
    bin: str


BIN_EDGES = (10.0, 20.0, 30.0, 40.0, 50.0)
BIN_LABELS = ("<10", "<20", "<30", "<40", "<50", ">=50")
METRIC_NAMES = ("mfct", "tfct", "bandwidth")


def bin_for(percent_from_min: float) -> str:
    for edge, label in zip(BIN_EDGES, BIN_LABELS):
        if percent_from_min < edge:
            return label
    return BIN_LABELS[-1]


def nearest_rank_percentile(values: Iterable[float], percentile: float) -> float:
    ordered = sorted(values)
    if not ordered:
        raise MetricsError("percentile of an empty set")
    rank = math.ceil(percentile / 100.0 * len(ordered))
    return ordered[max(rank, 1) - 1]


def compute_report(completed: list[CompletedFlow], warmup_skip: int = 0,
                   config: dict | None = None) -> RunReport:
    """Summarize completed flows, excluding the first warmup_skip ids."""
    counted = [f for f in completed if f.flow_id >= warmup_skip]
    if not counted:
        raise MetricsError("no flows left to report after warm-up exclusion")
    fcts = [f.fct for f in counted]
    return RunReport(
        config=dict(config or {}),
        mfct=sum(fcts) / len(fcts),
        tfct=nearest_rank_percentile(fcts, 99.0),
        total_bandwidth=sum(f.demand * f.hop_count for f in counted),
        flow_records=completed,
        realized_demand_mean=sum(f.demand for f in counted) / len(counted),
    )


def report_row(report: RunReport) -> RunRow:
    cfg = report.config
    return RunRow(scheme=cfg["scheme"], policy=cfg["policy"],
                  distribution=cfg["distribution"], seed=cfg["seed"],
                  flows=cfg["flows"], mfct=report.mfct, tfct=report.tfct,
                  bandwidth=report.total_bandwidth)


def comparison_matrix(rows: Iterable[RunRow]) -> list[ComparisonCell]:
    """Seed-averaged percent-from-minimum cells per (metric, policy, distribution)."""
    rows = [RunRow(*r) for r in rows]
    if not rows:
        raise MetricsError("no runs to compare")
    schemes = sorted({r.scheme for r in rows})
    groups: dict[tuple[str, str], dict[str, list[RunRow]]] = {}
    for r in rows:
        groups.setdefault((r.policy, r.distribution), {}).setdefault(r.scheme, []).append(r)

    cells = []
    for (policy, distribution), by_scheme in sorted(groups.items()):
        missing = [s for s in schemes if s not in by_scheme]
        if missing:
            raise MetricsError(
                f"group policy={policy} distribution={distribution} is missing scheme(s): "
                + ", ".join(missing))
        for metric in METRIC_NAMES:
            averages = {
                scheme: sum(getattr(r, metric if metric != "bandwidth" else "bandwidth")
                            for r in runs) / len(runs)
                for scheme, runs in by_scheme.items()
            }
            low = min(averages.values())
            if low <= 0:
                raise MetricsError(f"nonpositive group minimum for {metric}: {low}")
            for scheme in schemes:
                value = averages[scheme]
                percent = 100.0 * (value - low) / low
                cells.append(ComparisonCell(metric=metric, policy=policy,
                                            distribution=distribution, scheme=scheme,
                                            value=value, percent_from_min=percent,
                                            bin=bin_for(percent)))
    cells.sort(key=lambda c: (METRIC_NAMES.index(c.metric), c.policy, c.distribution, c.scheme))
    return cells


def _fmt(x: float) -> str:
    # 12 significant digits when that text round-trips exactly, else the
    # shortest exact representation; either way parsing recovers the value
    text = f"{x:.12g}"
    return text if float(text) == x else repr(x)


RUNS_CSV_HEADER = ["scheme", "policy", "distribution", "seed", "flows", "mfct", "tfct", "bandwidth"]


def runs_csv_text(rows: Iterable[RunRow]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(RUNS_CSV_HEADER)
    for r in sorted(rows, key=lambda r: (r.scheme, r.policy, r.distribution, r.seed)):
        writer.writerow([r.scheme, r.policy, r.distribution, r.seed, r.flows,
                         _fmt(r.mfct), _fmt(r.tfct), _fmt(r.bandwidth)])
    return out.getvalue()


def parse_runs_csv(text: str) -> list[RunRow]:
    reader = csv.DictReader(io.StringIO(text))
    return [RunRow(scheme=rec["scheme"], policy=rec["policy"],
                   distribution=rec["distribution"], seed=int(rec["seed"]),
                   flows=int(rec["flows"]), mfct=float(rec["mfct"]),
                   tfct=float(rec["tfct"]), bandwidth=float(rec["bandwidth"]))
            for rec in reader]


def matrix_csv_text(cells: Iterable[ComparisonCell]) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["metric", "policy", "distribution", "scheme", "value",
                     "percent_from_min", "bin"])
    for c in cells:
        writer.writerow([c.metric, c.policy, c.distribution, c.scheme,
                         _fmt(c.value), _fmt(c.percent_from_min), c.bin])
    return out.getvalue()


def matrix_table_text(cells: Iterable[ComparisonCell]) -> str:
    """Aligned binned table: schemes as rows, distribution x policy columns,
    one block per metric."""
    cells = list(cells)
    schemes = sorted({c.scheme for c in cells})
    dists = sorted({c.distribution for c in cells})
    policies = sorted({c.policy for c in cells})
    by_key = {(c.metric, c.distribution, c.policy, c.scheme): c for c in cells}

    name_w = max(len("scheme"), *(len(s) for s in schemes)) + 2
    col_w = max(6, *(len(p) for p in policies)) + 2
    blocks = []
    for metric in METRIC_NAMES:
        lines = [f"== {metric.upper()} (% from minimum, binned) =="]
        header1 = " " * name_w
        header2 = "scheme".ljust(name_w)
        for dist in dists:
            group_w = col_w * len(policies)
            header1 += dist[:group_w - 2].ljust(group_w)
            for policy in policies:
                header2 += policy.ljust(col_w)
        lines.append(header1.rstrip())
        lines.append(header2.rstrip())
        for scheme in schemes:
            line = scheme.ljust(name_w)
            for dist in dists:
                for policy in policies:
                    cell = by_key.get((metric, dist, policy, scheme))
                    line += (cell.bin if cell else "-").ljust(col_w)
            lines.append(line.rstrip())
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks) + "\n"
