"""Compare the compiled and pure-Python reduction kernels.

    python3 benchmarks/bench_reduction.py [--repeat 3] [--shape 100,100,20]

Both backends must produce identical pairs; the script checks that before
reporting timings.
"""

import argparse
import time

import numpy as np

from cubedisp import _backend, synthetic
from cubedisp.grid import ScalarVolume
from cubedisp.reduction import persistence_pairs
from cubedisp.tconstruction import build_filtered_complex


def volumes(shape, seed):
    rng = np.random.default_rng(seed)
    noise = ScalarVolume(rng.integers(0, 101, shape), np.zeros(shape, dtype=bool))
    return {
        "neighbourhood-like": synthetic.neighbourhood_volume(shape, seed=seed),
        "uniform noise": noise,
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--shape", default="100,100,20")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=1)
    args = ap.parse_args(argv)
    shape = tuple(int(x) for x in args.shape.split(","))

    backends = ["python"] + (["cython"] if _backend.compiled_kernels is not None else [])
    print(f"shape={shape} repeat={args.repeat} backends={','.join(backends)}")
    print(f"{'volume':<20}{'cells':>10}{'build s':>10}" + "".join(f"{b + ' s':>12}" for b in backends) + f"{'speedup':>10}")
    for name, vol in volumes(shape, args.seed).items():
        build, complex_ = best_of(lambda: build_filtered_complex(vol), args.repeat)
        timings, results = {}, {}
        for b in backends:
            timings[b], results[b] = best_of(lambda: persistence_pairs(complex_, b), args.repeat)
        ref = results[backends[0]]
        for b in backends[1:]:
            assert all(np.array_equal(x, y) for x, y in zip(ref, results[b])), f"{b} disagrees"
        speedup = timings["python"] / timings["cython"] if "cython" in timings else float("nan")
        print(
            f"{name:<20}{complex_.num_cells():>10}{build:>10.3f}"
            + "".join(f"{timings[b]:>12.3f}" for b in backends)
            + f"{speedup:>9.1f}x"
        )


if __name__ == "__main__":
    main()
