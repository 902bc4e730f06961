"""Benchmark: compiled Cython kernel vs. the pure-Python fallback.

Runs identical short simulations through both kernels, checks the results
are bit-identical, and reports cycles/second for each plus the speedup.

    python3 benchmarks/bench_kernel.py [--cycles N]
"""

from __future__ import annotations

import argparse
import time

from hxsim import core
from hxsim.engine import SimConfig, build_sim

CASES = [
    ("4x4/4 uniform pol_sp", SimConfig(sides=(4, 4), servers_per_switch=4)),
    (
        "8x8x8/8 uniform pol_sp",
        SimConfig(sides=(8, 8, 8), servers_per_switch=8, load=1.0),
    ),
    (
        "8x8x8/8 rpn omni_sp",
        SimConfig(
            sides=(8, 8, 8),
            servers_per_switch=8,
            routing="omni_sp",
            pattern="rpn",
            load=1.0,
        ),
    ),
]


def bench_one(config: SimConfig, cycles: int, pure: bool):
    cfg = SimConfig(**{**config.__dict__, "pure": pure})
    _, _, sim = build_sim(cfg)
    t0 = time.perf_counter()
    rc = sim.run_rate(0, cycles)
    elapsed = time.perf_counter() - t0
    stats = sim.stats()
    assert rc == 0, f"kernel error {rc}"
    return elapsed, stats


def comparable(stats: dict) -> dict:
    out = {}
    for k, v in stats.items():
        out[k] = tuple(v.tolist()) if hasattr(v, "tolist") else v
    return out


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--cycles", type=int, default=300)
    args = parser.parse_args()

    if not core.KERNEL_COMPILED:
        print("warning: compiled kernel unavailable; comparing pure vs pure")
    print(f"kernel module: {core.KERNEL_NAME}")
    print(f"{'case':28s} {'compiled':>12s} {'pure':>12s} {'speedup':>9s}  identical")
    for name, cfg in CASES:
        tc, sc = bench_one(cfg, args.cycles, pure=False)
        tp, sp = bench_one(cfg, args.cycles, pure=True)
        same = comparable(sc) == comparable(sp)
        print(
            f"{name:28s} {args.cycles / tc:9.1f} c/s {args.cycles / tp:9.1f} c/s"
            f" {tp / tc:8.1f}x  {same}"
        )
        if not same:
            raise SystemExit(f"kernel mismatch on {name}")


if __name__ == "__main__":
    main()
