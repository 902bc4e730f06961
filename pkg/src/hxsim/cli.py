"""Command-line front end: experiment files in, CSV result files out.

An experiment file is plain text, one ``key = value`` assignment per line
(values are Python literals; a bare word is taken as a string).  The CLI
expands the Cartesian product of routings x patterns x fault specs x loads
x seeds, runs each point and writes one CSV row per point in deterministic
sorted order.  ``--analyze`` switches to graph-only mode (fault sweeps,
no simulation); ``--verify`` only checks escape acyclicity and fault-set
validity for the configured points.
"""

from __future__ import annotations

import argparse
import ast
import csv
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import product
from pathlib import Path

from hxsim.engine import (
    ROUTINGS,
    SimConfig,
    SimulationError,
    build_topology,
    run,
    run_completion,
)
from hxsim.escape import EscapeNetwork, verify_escape_acyclic
from hxsim.faults import random_fault_sequence, shaped_faults, validate_faults
from hxsim.topology import HyperXTopology
from hxsim.traffic import PatternKind

RESULT_COLUMNS = (
    "topology",
    "routing",
    "pattern",
    "faults",
    "load",
    "seed",
    "cycles",
    "throughput",
    "latency",
    "jain",
    "forced_hops",
    "escape_hops",
)

ANALYZE_COLUMNS = ("seed", "faults", "diameter", "avg_distance", "connected")

_SHAPED = ("row", "subplane", "cross", "subcube", "star")

#: Recognized experiment-file keys and their expected container shape.
_LIST_KEYS = {"routings", "patterns", "loads", "seeds", "faults", "fault_seeds"}
_SCALAR_KEYS = {
    "sides",
    "servers_per_switch",
    "routing",
    "pattern",
    "load",
    "seed",
    "warmup",
    "measure",
    "num_vcs",
    "omni_m",
    "pattern_seed",
    "escape_root",
    "mode",
    "packets_per_server",
    "bucket",
    "drain_limit",
    "deadlock_limit",
    "output",
    "fault_step",
    "max_faults",
    "fault",
}
_KNOWN_KEYS = _LIST_KEYS | _SCALAR_KEYS


class ConfigError(ValueError):
    pass


def parse_experiment(path: str | Path) -> dict:
    """Parse a key/value experiment file into a validated dict."""
    text = Path(path).read_text()
    out: dict = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
        key, _, rhs = line.partition("=")
        key, rhs = key.strip(), rhs.strip()
        if key not in _KNOWN_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            value = ast.literal_eval(rhs)
        except (ValueError, SyntaxError):
            value = rhs  # bare word, e.g. pattern = uniform
        if key in out:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        out[key] = value
    if "sides" not in out or "servers_per_switch" not in out:
        raise ConfigError(f"{path}: 'sides' and 'servers_per_switch' are required")
    _validate(out, path)
    return out


def _as_list(cfg: dict, plural: str, singular: str, default) -> list:
    if plural in cfg and singular in cfg:
        raise ConfigError(f"give either {singular!r} or {plural!r}, not both")
    if plural in cfg:
        v = cfg[plural]
        return list(v) if isinstance(v, (list, tuple)) else [v]
    if singular in cfg:
        return [cfg[singular]]
    return list(default)


def _validate(cfg: dict, path) -> None:
    sides = cfg["sides"]
    if not isinstance(sides, (list, tuple)) or not all(
        isinstance(k, int) and k >= 2 for k in sides
    ):
        raise ConfigError(f"{path}: sides must be a list of integers >= 2")
    for r in _as_list(cfg, "routings", "routing", ["pol_sp"]):
        if r not in ROUTINGS:
            raise ConfigError(
                f"{path}: unknown routing {r!r} (choose from {sorted(ROUTINGS)})"
            )
    valid_patterns = {p.value for p in PatternKind}
    for p in _as_list(cfg, "patterns", "pattern", ["uniform"]):
        if p not in valid_patterns:
            raise ConfigError(
                f"{path}: unknown pattern {p!r} (choose from {sorted(valid_patterns)})"
            )
    for spec in _as_list(cfg, "faults", "fault", ["none"]):
        _check_fault_spec(spec, len(sides), path)
    for load in _as_list(cfg, "loads", "load", [0.5]):
        f = Fraction(load).limit_denominator(1_000_000)
        if not 0 <= f <= 1:
            raise ConfigError(f"{path}: load {load} outside [0, 1]")
    mode = cfg.get("mode", "rate")
    if mode not in ("rate", "completion"):
        raise ConfigError(f"{path}: mode must be 'rate' or 'completion'")


def _check_fault_spec(spec, n_dims: int, path) -> None:
    if not isinstance(spec, str):
        raise ConfigError(f"{path}: fault spec must be a string, got {spec!r}")
    if spec == "none" or spec in _SHAPED:
        return
    parts = spec.split(":")
    if len(parts) == 3 and parts[0] == "random":
        try:
            int(parts[1]), int(parts[2])
            return
        except ValueError:
            pass
    raise ConfigError(
        f"{path}: bad fault spec {spec!r} "
        "(use none, random:<seed>:<count>, or row/subplane/cross/subcube/star)"
    )


def resolve_faults(topo: HyperXTopology, spec: str, root) -> frozenset:
    """Turn a fault spec string into a concrete link set."""
    if spec == "none":
        return frozenset()
    if spec in _SHAPED:
        return frozenset(shaped_faults(topo, spec, root))
    _, seed, count = spec.split(":")
    return frozenset(random_fault_sequence(topo, int(seed), int(count)))


def _default_root(sides) -> tuple:
    return (0,) * len(sides)


@dataclass(frozen=True)
class Point:
    """One (routing, pattern, faults, load, seed) simulation point."""

    routing: str
    pattern: str
    fault_spec: str
    load: object
    seed: int


def expand_points(cfg: dict) -> list[Point]:
    return [
        Point(r, p, f, load, int(seed))
        for r, p, f, load, seed in product(
            _as_list(cfg, "routings", "routing", ["pol_sp"]),
            _as_list(cfg, "patterns", "pattern", ["uniform"]),
            _as_list(cfg, "faults", "fault", ["none"]),
            _as_list(cfg, "loads", "load", [0.5]),
            _as_list(cfg, "seeds", "seed", [1]),
        )
    ]


def _topology_tag(cfg: dict) -> str:
    return "x".join(str(k) for k in cfg["sides"]) + f"/{cfg['servers_per_switch']}"


def _sim_config(cfg: dict, pt: Point) -> SimConfig:
    sides = tuple(cfg["sides"])
    root = tuple(cfg["escape_root"]) if "escape_root" in cfg else _default_root(sides)
    scratch = HyperXTopology(sides, cfg["servers_per_switch"])
    faults = resolve_faults(scratch, pt.fault_spec, root)
    return SimConfig(
        sides=sides,
        servers_per_switch=cfg["servers_per_switch"],
        routing=pt.routing,
        pattern=pt.pattern,
        load=pt.load,
        seed=pt.seed,
        num_vcs=cfg.get("num_vcs"),
        omni_m=cfg.get("omni_m"),
        pattern_seed=cfg.get("pattern_seed"),
        warmup=cfg.get("warmup", 20_000),
        measure=cfg.get("measure", 20_000),
        faults=faults or None,
        escape_root=root,
        deadlock_limit=cfg.get("deadlock_limit", 10_000),
    )


def _fmt(x) -> str:
    if x is None:
        return "nan"
    if isinstance(x, float):
        return "nan" if math.isnan(x) else f"{x:.6g}"
    return str(x)


def run_point(cfg: dict, pt: Point):
    """Execute one point; returns (row dict, time series or None, error)."""
    error = None
    series = None
    try:
        sim_cfg = _sim_config(cfg, pt)
        if cfg.get("mode", "rate") == "completion":
            rec = run_completion(
                sim_cfg,
                cfg.get("packets_per_server", 500),
                bucket=cfg.get("bucket", 256),
                drain_limit=cfg.get("drain_limit", 5_000_000),
            )
            cycles = rec.completion_cycle
            series = rec.time_series
        else:
            rec = run(sim_cfg)
            cycles = rec.cycles
        row = {
            "cycles": cycles,
            "throughput": rec.throughput,
            "latency": rec.latency,
            "jain": rec.jain,
            "forced_hops": rec.forced_hops,
            "escape_hops": rec.escape_hops,
        }
    except (SimulationError, ValueError) as exc:
        error = str(exc)
        row = {
            "cycles": 0,
            "throughput": float("nan"),
            "latency": float("nan"),
            "jain": float("nan"),
            "forced_hops": 0,
            "escape_hops": 0,
        }
    row.update(
        topology=_topology_tag(cfg),
        routing=pt.routing,
        pattern=pt.pattern,
        faults=pt.fault_spec,
        load=_fmt(pt.load),
        seed=pt.seed,
    )
    return row, series, error


def _point_key(pt: Point):
    return (pt.routing, pt.pattern, pt.fault_spec, str(pt.load), pt.seed)


def _series_name(stem: str, pt: Point) -> str:
    tag = f"{pt.routing}_{pt.pattern}_{pt.fault_spec}_{pt.load}_{pt.seed}"
    tag = tag.replace(":", "-").replace("/", "-").replace(".", "p")
    return f"{stem}_series_{tag}.csv"


def run_experiment(cfg: dict, out_dir: Path, jobs: int = 1) -> int:
    """Run every point; write CSVs; return the number of aborted points."""
    points = sorted(expand_points(cfg), key=_point_key)
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_point, [cfg] * len(points), points))
    else:
        results = [run_point(cfg, pt) for pt in points]

    out_dir.mkdir(parents=True, exist_ok=True)
    out_name = cfg.get("output", "results.csv")
    out_path = out_dir / out_name
    failures = 0
    with open(out_path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS)
        writer.writeheader()
        for pt, (row, series, error) in zip(points, results):
            writer.writerow({k: _fmt(row[k]) for k in RESULT_COLUMNS})
            if series is not None:
                spath = out_dir / _series_name(Path(out_name).stem, pt)
                with open(spath, "w", newline="") as sf:
                    sw = csv.writer(sf)
                    sw.writerow(("cycle_bucket", "accepted_phits"))
                    for cyc, thr in series:
                        sw.writerow((cyc, _fmt(thr)))
            if error is not None:
                failures += 1
                print(f"ABORTED {_point_key(pt)}: {error}", file=sys.stderr)
    print(f"wrote {out_path} ({len(points)} rows, {failures} aborted)")
    return failures


def analyze_topology(cfg: dict, out_dir: Path) -> Path:
    """Graph-only fault sweep: diameter / average distance / connectivity."""
    sides = tuple(cfg["sides"])
    step = cfg.get("fault_step", 10)
    seeds = [int(s) for s in _as_list(cfg, "fault_seeds", "seed", [1])]
    out_dir.mkdir(parents=True, exist_ok=True)
    out_path = out_dir / cfg.get("output", "analyze.csv")
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(ANALYZE_COLUMNS)
        for seed in sorted(seeds):
            base = HyperXTopology(sides, cfg["servers_per_switch"])
            seq = random_fault_sequence(base, seed)
            limit = cfg.get("max_faults", len(seq))
            for count in range(0, limit + 1, step):
                topo = HyperXTopology(sides, cfg["servers_per_switch"])
                topo.apply_faults(seq[:count])
                connected = topo.is_connected()
                diam = topo.diameter()
                avg = topo.average_distance()
                writer.writerow(
                    (
                        seed,
                        count,
                        diam if connected else "inf",
                        _fmt(float(avg)) if connected else "inf",
                        int(connected),
                    )
                )
                if not connected:
                    break
    print(f"wrote {out_path}")
    return out_path


def verify(cfg: dict) -> int:
    """Check escape acyclicity and fault-set validity; return failure count."""
    sides = tuple(cfg["sides"])
    root = tuple(cfg["escape_root"]) if "escape_root" in cfg else _default_root(sides)
    failures = 0
    for spec in sorted(set(_as_list(cfg, "faults", "fault", ["none"]))):
        topo = HyperXTopology(sides, cfg["servers_per_switch"])
        try:
            faults = resolve_faults(topo, spec, root)
        except ValueError as exc:
            print(f"faults={spec}: INVALID ({exc})")
            failures += 1
            continue
        report = validate_faults(topo, set(faults), root)
        topo.apply_faults(faults)
        esc = EscapeNetwork(topo, root)
        ok, witness = verify_escape_acyclic(esc)
        status = "ok" if ok else f"CYCLIC {witness}"
        print(
            f"faults={spec}: count={report.count} connected={report.connected} "
            f"diameter={report.diameter} root_degree={report.anchor_degree} "
            f"escape={status}"
        )
        if not ok:
            failures += 1
    return failures


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hxsim", description="HyperX network simulation experiment runner"
    )
    parser.add_argument("--experiment", required=True, help="experiment file path")
    parser.add_argument(
        "--analyze",
        action="store_true",
        help="graph-only fault sweep (no simulation)",
    )
    parser.add_argument(
        "--verify",
        action="store_true",
        help="only validate fault sets and escape acyclicity",
    )
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--jobs", type=int, default=1, help="parallel workers")
    args = parser.parse_args(argv)

    try:
        cfg = parse_experiment(args.experiment)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    if args.verify:
        return 1 if verify(cfg) else 0
    if args.analyze:
        analyze_topology(cfg, Path(args.out))
        return 0
    failures = run_experiment(cfg, Path(args.out), max(1, args.jobs))
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
