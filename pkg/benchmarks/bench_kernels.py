"""Time the numba and numpy kernel backends on the same inputs.

    python benchmarks/bench_kernels.py [--repeat 5] [--scale 1.0] [--json out.json]
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from berryem import _kernels as kern
from berryem.berry import chern_number
from berryem.media import NonlocalParams, PlasmaParams


def cases(scale: float):
    rng = np.random.default_rng(0)
    n = max(8, int(512 * scale))
    w = rng.normal(size=(n, n, 3)) + 1j * rng.normal(size=(n, n, 3))
    K = np.logspace(-6, 6, max(100, int(1_000_000 * scale)))
    k = np.linspace(3e5, 5e6, max(100, int(1_000_000 * scale)))
    model = NonlocalParams.from_ratio(PlasmaParams.from_thz(10.0, 2.0), 100.0)
    nr = max(16, int(256 * scale))
    return {
        "plaquette_phases": lambda: kern.plaquette_phases(w),
        "tm_band_y": lambda: kern.tm_band_y(1.0, K, 0.04, True),
        "spp_residual_scan": lambda: kern.spp_residual_scan(k, 2e5, -2.0, -0.7, 0.4, -0.3),
        "chern_number": lambda: chern_number(model, "lower", nr, nr),
    }


def best_of(fn, repeat):
    fn()  # warm-up, includes JIT compilation
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def run(repeat: int = 5, scale: float = 1.0) -> dict:
    backends = ["numpy"] + (["numba"] if kern.HAS_NUMBA else [])
    out = {}
    for name, fn in cases(scale).items():
        row = {}
        for b in backends:
            with kern.use_backend(b):
                row[b] = best_of(fn, repeat)
        if "numba" in row:
            row["speedup"] = row["numpy"] / row["numba"]
        out[name] = row
    return out


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--scale", type=float, default=1.0, help="problem size multiplier")
    ap.add_argument("--json", help="also write results here")
    args = ap.parse_args(argv)
    res = run(args.repeat, args.scale)
    print(f"{'kernel':<20}{'numpy [s]':>12}{'numba [s]':>12}{'speedup':>10}")
    for name, row in res.items():
        nb = row.get("numba", float("nan"))
        print(f"{name:<20}{row['numpy']:>12.4g}{nb:>12.4g}{row.get('speedup', float('nan')):>10.2f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(res, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
