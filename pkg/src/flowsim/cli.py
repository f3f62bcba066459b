"""Experiment-grid sweep driver.

One run per (scheme, policy, distribution, seed) cell. Cells execute
independently (optionally in parallel worker processes) and results are
sorted before writing, so runs.csv is byte-identical for any --jobs
value. Outputs: runs.csv, matrix.csv, and matrix.txt in --out.

Precedence for every setting: command-line flag, then config file key,
then FLOWSIM_<KEY> environment variable, then built-in default.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

from .engine import ScenarioConfig, run
from .metrics import (comparison_matrix, matrix_csv_text, matrix_table_text,
                      parse_runs_csv, report_row, runs_csv_text)
from .routing import SCHEMES
from .scheduling import POLICIES
from .topology import load_topology
from .traffic import DemandDistribution, load_empirical_cdf

ENV_PREFIX = "FLOWSIM_"

DEFAULTS = {
    "capacity": None,
    "scheme": ["all"],
    "policy": ["all"],
    "dist": ["exp:mean=20,max=500"],
    "lambda": 1.0,
    "flows": 50000,
    "seeds": "1..10",
    "warmup": 0,
    "out": "results",
    "jobs": 1,
}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DistSpec:
    label: str
    distribution: DemandDistribution


@dataclass
class SweepConfig:
    topology_path: str
    capacity: float | None
    schemes: list[str]
    policies: list[str]
    dists: list[DistSpec]
    rate_lambda: float
    flow_count: int
    seeds: list[int]
    warmup: int
    out_dir: str
    jobs: int


def parse_dist_spec(spec: str) -> DistSpec:
    """`exp:mean=20,max=500` | `pareto:mean=20,min=2,max=500` | `cdf:<path>`"""
    kind, _, rest = spec.partition(":")
    kind = kind.strip()
    if kind == "cdf":
        path = rest.strip()
        if not path:
            raise ConfigError("cdf spec needs a file path: cdf:<path>")
        try:
            with open(path, encoding="utf-8") as fh:
                dist = load_empirical_cdf(fh)
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot load CDF file {path}: {exc}") from None
        return DistSpec(label=f"cdf:{path}", distribution=dist)
    params = {}
    if rest.strip():
        for item in rest.split(","):
            key, eq, value = item.partition("=")
            if not eq:
                raise ConfigError(f"bad distribution parameter {item!r} in {spec!r}")
            try:
                params[key.strip()] = float(value)
            except ValueError:
                raise ConfigError(f"bad numeric value in {item!r}") from None
    try:
        if kind == "exp":
            mean = params.pop("mean", 20.0)
            cap = params.pop("max", 500.0)
            dist = DemandDistribution.exponential(mean=mean, max_demand=cap)
            label = f"exp:mean={mean:g},max={cap:g}"
        elif kind == "pareto":
            mean = params.pop("mean", 20.0)
            low = params.pop("min", 2.0)
            cap = params.pop("max", 500.0)
            dist = DemandDistribution.pareto(mean=mean, min_demand=low, max_demand=cap)
            label = f"pareto:mean={mean:g},min={low:g},max={cap:g}"
        else:
            raise ConfigError(
                f"unknown distribution kind {kind!r}; valid kinds: exp, pareto, cdf")
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"invalid distribution {spec!r}: {exc}") from None
    if params:
        raise ConfigError(f"unknown parameter(s) {sorted(params)} in {spec!r}")
    return DistSpec(label=label, distribution=dist)


def parse_seeds(text: str) -> list[int]:
    """`a..b` inclusive range or comma-separated list."""
    text = text.strip()
    if ".." in text:
        lo, _, hi = text.partition("..")
        try:
            start, stop = int(lo), int(hi)
        except ValueError:
            raise ConfigError(f"bad seed range {text!r}") from None
        if stop < start:
            raise ConfigError(f"empty seed range {text!r}")
        return list(range(start, stop + 1))
    try:
        return [int(s) for s in text.split(",") if s.strip()]
    except ValueError:
        raise ConfigError(f"bad seed list {text!r}") from None


def _expand_names(values: list[str], registry, what: str) -> list[str]:
    names: list[str] = []
    for value in values:
        for name in str(value).split(","):
            name = name.strip()
            if not name:
                continue
            if name == "all":
                names.extend(sorted(registry))
            elif name in registry:
                names.append(name)
            else:
                raise ConfigError(
                    f"unknown {what} {name!r}; valid names: {', '.join(sorted(registry))}")
    seen = {}
    for n in names:
        seen.setdefault(n, None)
    return list(seen)


def read_config_file(path: str) -> dict[str, list[str]]:
    """Flat `key = value` lines; repeated keys accumulate."""
    values: dict[str, list[str]] = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, raw in enumerate(fh, start=1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                key, eq, value = line.partition("=")
                if not eq:
                    raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line!r}")
                values.setdefault(key.strip(), []).append(value.strip())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from None
    return values


def _env(key: str) -> str | None:
    return os.environ.get(ENV_PREFIX + key.upper())


def _layered(flag_value, file_values: dict[str, list[str]], key: str, multi: bool = False):
    """flag > config file > environment > default."""
    if flag_value is not None and flag_value != []:
        return flag_value
    if key in file_values:
        return file_values[key] if multi else file_values[key][-1]
    env = _env(key)
    if env is not None:
        return env.split(";") if multi else env
    return DEFAULTS.get(key)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowsim",
        description="Sweep adaptive-routing schemes and scheduling policies over a WAN topology.")
    parser.add_argument("--topology", help="topology file path")
    parser.add_argument("--capacity", type=float, help="override every link capacity")
    parser.add_argument("--scheme", action="append", default=[],
                        help="path-selection scheme name or 'all' (repeatable)")
    parser.add_argument("--policy", action="append", default=[],
                        help="scheduling policy name or 'all' (repeatable)")
    parser.add_argument("--dist", action="append", default=[],
                        help="demand distribution spec (repeatable): exp:mean=,max= | "
                             "pareto:mean=,min=,max= | cdf:<path>")
    parser.add_argument("--lambda", dest="rate_lambda", type=float, help="flow arrival rate")
    parser.add_argument("--flows", type=int, help="flows per run")
    parser.add_argument("--seeds", help="seed range a..b or comma list")
    parser.add_argument("--warmup", type=int, help="exclude the first K flows from statistics")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--jobs", type=int, help="parallel runs")
    parser.add_argument("--config", help="flat key = value config file")
    return parser


def parse_config(argv: list[str] | None = None) -> SweepConfig:
    args = build_parser().parse_args(argv)
    file_values = read_config_file(args.config) if args.config else {}

    topology = _layered(args.topology, file_values, "topology")
    if not topology:
        raise ConfigError("no topology given (flag --topology, config key, or FLOWSIM_TOPOLOGY)")
    if not Path(topology).is_file():
        raise ConfigError(f"topology file not found: {topology}")

    capacity = _layered(args.capacity, file_values, "capacity")
    capacity = float(capacity) if capacity is not None else None

    schemes = _expand_names(_layered(args.scheme, file_values, "scheme", multi=True),
                            SCHEMES, "scheme")
    policies = _expand_names(_layered(args.policy, file_values, "policy", multi=True),
                             dict.fromkeys(POLICIES), "policy")
    dist_values = _layered(args.dist, file_values, "dist", multi=True)
    if isinstance(dist_values, str):
        dist_values = [dist_values]
    dists = [parse_dist_spec(s) for s in dist_values]

    return SweepConfig(
        topology_path=str(topology),
        capacity=capacity,
        schemes=schemes,
        policies=policies,
        dists=dists,
        rate_lambda=float(_layered(args.rate_lambda, file_values, "lambda")),
        flow_count=int(_layered(args.flows, file_values, "flows")),
        seeds=parse_seeds(str(_layered(args.seeds, file_values, "seeds"))),
        warmup=int(_layered(args.warmup, file_values, "warmup")),
        out_dir=str(_layered(args.out, file_values, "out")),
        jobs=int(_layered(args.jobs, file_values, "jobs")),
    )


def _cell_config(sweep: SweepConfig, scheme: str, policy: str, dist: DistSpec,
                 seed: int) -> ScenarioConfig:
    return ScenarioConfig(
        topology=sweep.topology_path,
        scheme=scheme,
        policy=policy,
        seed=seed,
        flow_count=sweep.flow_count,
        distribution=dist.distribution,
        rate_lambda=sweep.rate_lambda,
        dist_label=dist.label,
        capacity_override=sweep.capacity,
        warmup_skip=sweep.warmup,
    )


def _run_cell(config: ScenarioConfig):
    return report_row(run(config))


def run_sweep(sweep: SweepConfig) -> int:
    """Execute the grid, write runs.csv / matrix.csv / matrix.txt.

    Returns 0 iff every cell succeeded; a failed cell is named on stderr
    and in-flight runs are allowed to finish first.
    """
    if not sweep.seeds:
        raise ConfigError("empty seed list")
    if sweep.flow_count < 1:
        raise ConfigError(f"flow count must be >= 1, got {sweep.flow_count}")
    # fail fast on an unreadable topology before spawning workers
    try:
        with open(sweep.topology_path, encoding="utf-8") as fh:
            load_topology(fh)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"invalid topology {sweep.topology_path}: {exc}") from None

    cells = [(scheme, policy, dist, seed)
             for scheme in sweep.schemes
             for policy in sweep.policies
             for dist in sweep.dists
             for seed in sweep.seeds]
    configs = [_cell_config(sweep, *cell) for cell in cells]

    rows = []
    failures = []
    if sweep.jobs <= 1:
        for cell, config in zip(cells, configs):
            try:
                rows.append(_run_cell(config))
            except Exception as exc:
                failures.append((cell, exc))
                break
    else:
        with concurrent.futures.ProcessPoolExecutor(max_workers=sweep.jobs) as pool:
            futures = {pool.submit(_run_cell, config): cell
                       for cell, config in zip(cells, configs)}
            for future in concurrent.futures.as_completed(futures):
                cell = futures[future]
                try:
                    rows.append(future.result())
                except Exception as exc:
                    failures.append((cell, exc))
                    for f in futures:
                        f.cancel()

    for (scheme, policy, dist, seed), exc in failures:
        print(f"flowsim: run failed: scheme={scheme} policy={policy} dist={dist.label} "
              f"seed={seed}: {exc}", file=sys.stderr)
    if failures:
        return 1

    out = Path(sweep.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    runs_text = runs_csv_text(rows)
    (out / "runs.csv").write_text(runs_text, encoding="utf-8")
    # matrix derives from the written rows, so it is recomputable from
    # runs.csv alone
    cells_table = comparison_matrix(parse_runs_csv(runs_text))
    (out / "matrix.csv").write_text(matrix_csv_text(cells_table), encoding="utf-8")
    (out / "matrix.txt").write_text(matrix_table_text(cells_table), encoding="utf-8")
    print(f"flowsim: {len(rows)} runs -> {out / 'runs.csv'}, {out / 'matrix.csv'}, "
          f"{out / 'matrix.txt'}")
    return 0


def main(argv: list[str] | None = None) -> int:
    try:
        sweep = parse_config(argv)
        return run_sweep(sweep)
    except ConfigError as exc:
        print(f"flowsim: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
