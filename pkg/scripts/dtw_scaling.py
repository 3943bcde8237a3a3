"""Time FastDTW against series length; near-linear growth keeps the ratio per doubling near 2."""

import argparse
import time

import numpy as np

from phasepat.similarity import dtw_exact, dtw_fast


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--radius", type=int, default=1)
    ap.add_argument("--max-power", type=int, default=15)
    ap.add_argument("--exact-up-to", type=int, default=2**11, help="also time exact DTW up to this length")
    args = ap.parse_args()

    rng = np.random.default_rng(0)
    dtw_fast(rng.normal(size=32), rng.normal(size=32), args.radius)
    dtw_exact(rng.normal(size=32), rng.normal(size=32))
    prev = None
    for p in range(8, args.max_power + 1):
        n = 2**p
        x, y = np.cumsum(rng.normal(size=(2, n)), axis=1)
        t = time.perf_counter()
        fast, _ = dtw_fast(x, y, args.radius)
        elapsed = time.perf_counter() - t
        line = f"n={n:6d} fast {elapsed * 1e3:8.2f} ms"
        if prev:
            line += f"  x{elapsed / prev:.2f}"
        if n <= args.exact_up_to:
            exact, _ = dtw_exact(x, y)
            line += f"  approx ratio {fast / exact:.4f}"
        print(line)
        prev = elapsed


if __name__ == "__main__":
    main()
