#!/usr/bin/env python3
"""Benchmark: compiled kernels vs the numpy fallback.

Times the four hot paths (counter-based bit generation, selected-index
extraction, checkpointed bit counting, compensated weighted prefix sums)
and one end-to-end experiment, on whichever backends are importable.

Usage:
    python benchmarks/bench_kernels.py [--horizon H] [--repeat R]
"""

from __future__ import annotations

import argparse
import time

import numpy as np


def load_backends():
    backends = {}
    from idealconv._kernels import _py
    backends["python"] = _py
    try:
        from idealconv._kernels import _fast
        backends["compiled"] = _fast
    except ImportError:
        pass
    return backends


def best_of(repeat, fn, *args):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def kernel_benchmarks(horizon, repeat):
    half = 1 << 63
    ns = np.asarray(sorted({horizon // (2 ** k) for k in range(12)}),
                    dtype=np.int64)
    return [
        ("counter_mask", lambda b: b.counter_mask(7, 1, horizon + 1, half)),
        ("counter_select", lambda b: b.counter_select(7, 1, horizon + 1, half)),
        ("counter_count_at", lambda b: b.counter_count_at(7, ns, half)),
        ("prefix 1/n", lambda b: b.prefix_weight_at(b.W_ONE_OVER_N, 0.0, ns)),
        ("prefix i^2", lambda b: b.prefix_weight_at(b.W_POW, 2.0, ns)),
        ("masked 1/n (evens)", lambda b: b.masked_weight_at(
            b.W_ONE_OVER_N, 0.0,
            np.arange(2, horizon + 1, 2, dtype=np.int64), ns)),
    ]


def end_to_end(horizon, trials):
    import idealconv as ic
    config = ic.ExperimentConfig(sequence="spike:squares:2:alternating",
                                 ideal="density0", horizon=horizon,
                                 trials=trials, grid=(-1.0, 0.0, 1.0, 2.0),
                                 epsilon=0.25)
    return ic.run_main_theorem(config)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--horizon", type=int, default=4_000_000)
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--trials", type=int, default=20)
    args = parser.parse_args()

    backends = load_backends()
    print(f"backends: {', '.join(backends)}   horizon={args.horizon:,}")
    print()
    header = f"{'kernel':<22}" + "".join(f"{name:>12}" for name in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    print(header)
    print("-" * len(header))
    for label, fn in kernel_benchmarks(args.horizon, args.repeat):
        times = [best_of(args.repeat, fn, b) for b in backends.values()]
        row = f"{label:<22}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times)
        if len(times) == 2:
            row += f"{times[0] / times[1]:>9.1f}x"
        print(row)

    print()
    print(f"end-to-end cluster-invariance run "
          f"({args.trials} trials, H={args.horizon:,}):", flush=True)
    import os
    for name in backends:
        env_name = {"python": "py", "compiled": "c"}[name]
        os.environ["IDEALCONV_KERNELS"] = env_name
        # subprocess keeps the import-time backend selection honest
        import subprocess
        import sys
        code = (
            "import time, idealconv as ic\n"
            f"cfg = ic.ExperimentConfig(sequence='spike:squares:2:alternating',"
            f" ideal='density0', horizon={args.horizon}, trials={args.trials},"
            " grid=(-1.0, 0.0, 1.0, 2.0), epsilon=0.25)\n"
            "t0 = time.perf_counter()\n"
            "rep = ic.run_main_theorem(cfg)\n"
            "dt = time.perf_counter() - t0\n"
            "print(f'{ic.kernel_backend():>10}: {dt:6.2f}s  "
            "agreement={rep.agreement_fraction:.3f}')\n")
        subprocess.run([sys.executable, "-c", code])
    os.environ.pop("IDEALCONV_KERNELS", None)


if __name__ == "__main__":
    main()
