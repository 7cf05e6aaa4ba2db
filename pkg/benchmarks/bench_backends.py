"""Time the numba kernels against the pure-numpy fallback.

    python benchmarks/bench_backends.py [--repeats 5] [--sizes 20,1000,20000]

Prints the best-of-repeats wall time per call for one Euler-Maruyama update
and for a full sphere or torus preset run, on both backends.
"""
import argparse
import time

import numpy as np

from hypercbo import _accel
from hypercbo.dynamics import run
from hypercbo.kernels import update_particles
from hypercbo.manifold import Sphere, Torus
from hypercbo.presets import preset_config
from hypercbo.rng import KeyedRNG


def best_time(fn, repeats):
    fn()  # warm-up, includes numba compilation or cache load
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def bench(repeats, sizes):
    rows = []
    key = KeyedRNG(0).key
    for m in (Sphere(1.0, 3), Torus(1.0, 0.5)):
        for n in sizes:
            pos = m.sample_uniform(n, np.random.default_rng(0))
            v = m.closest_point(pos[0] + 0.05)
            row = [f"update {m.spec_string()} N={n}"]
            for backend in ("numba", "numpy"):
                _accel.set_backend(backend)
                row.append(best_time(lambda: update_particles(m, pos, v, 1.0, 0.25, 0.05, key, 0), repeats))
            rows.append(row)
    for name in ("sphere", "torus"):
        cfg = preset_config(name, 0)
        row = [f"run preset {name} (100 steps)"]
        for backend in ("numba", "numpy"):
            _accel.set_backend(backend)
            row.append(best_time(lambda: run(cfg), repeats))
        rows.append(row)
    return rows


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--sizes", default="20,1000,20000")
    args = p.parse_args(argv)
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    prev = _accel.get_backend()
    try:
        rows = bench(args.repeats, [int(s) for s in args.sizes.split(",")])
    finally:
        _accel.set_backend(prev)
    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'numba':>10}  {'numpy':>10}  {'speed-up':>8}")
    for label, t_nb, t_np in rows:
        print(f"{label:<{width}}  {t_nb * 1e3:8.3f}ms  {t_np * 1e3:8.3f}ms  {t_np / t_nb:7.1f}x")


if __name__ == "__main__":
    main()
