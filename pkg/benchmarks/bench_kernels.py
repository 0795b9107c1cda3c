"""Compare the compiled kernels with the pure-Python fallback.

Run from the repository root after building the extension:

    python3 benchmarks/bench_kernels.py [--repeat 5]

Kernel timings call both implementations directly. The end-to-end rows run
``evaluate`` and ``run_sequence`` in a subprocess per backend, selected with
``SHOALTRACK_PURE_PYTHON``.
"""
from __future__ import annotations

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from shoaltrack import _kernels_py

try:
    from shoaltrack import _kernels
except ImportError:
    _kernels = None

END_TO_END = """
import time
from shoaltrack.synth import CorruptionConfig, SchoolConfig, corrupt, generate_school
from shoaltrack.tracker import run_sequence
from shoaltrack.metrics import evaluate
gt = generate_school(SchoolConfig(seed=1, duration=30.0))
det = corrupt(gt, CorruptionConfig(position_jitter_std=2.0, dropout_prob=0.05, clutter_rate=0.5,
                                   true_conf_mean=0.8, true_conf_std=0.1, seed=1))
t0 = time.perf_counter(); tracks = run_sequence(det); t1 = time.perf_counter()
evaluate(gt, tracks); t2 = time.perf_counter()
print(f"{t1 - t0:.4f} {t2 - t1:.4f}")
"""


def boxes(rng, n):
    return np.c_[rng.uniform(0, 500, (n, 2)), rng.uniform(20, 80, (n, 2))]


def best_of(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def end_to_end(pure: bool) -> tuple[float, float]:
    env = dict(os.environ, SHOALTRACK_PURE_PYTHON="1" if pure else "0")
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, check=True,
                         capture_output=True, text=True).stdout.split()
    return float(out[0]), float(out[1])


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        sys.exit("compiled kernels not built; run `pip install --no-build-isolation -e .` first")
    rng = np.random.default_rng(0)
    rows = []
    for n in (10, 30, 100):
        a, b = boxes(rng, n), boxes(rng, n)
        number = max(1, 2000 // n)
        rows.append((f"iou_matrix {n}x{n}",
                     best_of(lambda: _kernels.iou_matrix(a, b), args.repeat, number),
                     best_of(lambda: _kernels_py.iou_matrix(a, b), args.repeat, number)))
    for n in (6, 12, 40):
        cost = rng.random((n, n))
        number = max(1, 400 // n)
        rows.append((f"lap_square {n}x{n}",
                     best_of(lambda: _kernels.lap_square(cost), args.repeat, number),
                     best_of(lambda: _kernels_py.lap_square(cost), args.repeat, number)))
    (track_c, eval_c), (track_p, eval_p) = end_to_end(False), end_to_end(True)
    rows.append(("run_sequence 10 fish x 450 frames", track_c, track_p))
    rows.append(("evaluate 10 fish x 450 frames", eval_c, eval_p))

    width = max(len(r[0]) for r in rows)
    print(f"{'case':<{width}}  {'compiled':>12}  {'python':>12}  {'speedup':>8}")
    for name, fast, slow in rows:
        print(f"{name:<{width}}  {fast * 1e3:10.4f}ms  {slow * 1e3:10.4f}ms  {slow / fast:7.1f}x")


if __name__ == "__main__":
    main()
