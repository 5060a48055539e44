#!/usr/bin/env python3
"""Benchmark the numeric kernels: compiled extension vs numpy fallback.

Shapes mirror what training actually runs: batch-4 rollout forwards,
batch-128 update minibatches, a (128, 4) advantage scan, and categorical
sampling. This is the measurement behind the default per-function dispatch
in decoyarena._kernels: the scan and sampling kernels go to the compiled
core, the matmul-bound MLP kernels stay on numpy's BLAS.

Usage: python benchmarks/bench_kernels.py [--repeats N]
"""

import argparse
import time

import numpy as np

from decoyarena._kernels import _pykernels

try:
    from decoyarena._kernels import _ckernels
except ImportError:
    _ckernels = None


def timeit(fn, args, repeats):
    fn(*args)  # warm up
    start = time.perf_counter()
    for _ in range(repeats):
        fn(*args)
    return (time.perf_counter() - start) / repeats * 1e6


def row(label, py_us, c_us):
    if c_us is None:
        print(f"{label:<38} {py_us:>10.1f} {'n/a':>10}")
        return
    winner = "compiled" if c_us < py_us else "numpy"
    print(f"{label:<38} {py_us:>10.1f} {c_us:>10.1f}   {py_us / c_us:>5.1f}x  -> {winner}")


def mlp_args(rng, batch, obs_dim=42, hidden=64, actions=7):
    x = rng.standard_normal((batch, obs_dim))
    w1 = rng.standard_normal((obs_dim, hidden)) * 0.2
    w2 = rng.standard_normal((hidden, hidden)) * 0.2
    w3 = rng.standard_normal((hidden, actions)) * 0.2
    return x, w1, np.zeros(hidden), w2, np.zeros(hidden), w3, np.zeros(actions)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=2000)
    args = parser.parse_args()
    rng = np.random.default_rng(0)

    print(f"{'kernel (shape)':<38} {'numpy us':>10} {'compiled us':>10}   speedup")
    if _ckernels is None:
        print("compiled extension not built; showing numpy fallback only")

    for batch, label in ((4, "rollout"), (128, "minibatch")):
        fwd = mlp_args(rng, batch)
        repeats = args.repeats if batch <= 16 else max(args.repeats // 5, 50)
        py = timeit(_pykernels.mlp_forward, fwd, repeats)
        cy = timeit(_ckernels.mlp_forward, fwd, repeats) if _ckernels else None
        row(f"mlp_forward ({label}, B={batch})", py, cy)

        out, h1, h2 = _pykernels.mlp_forward(*fwd)
        dout = rng.standard_normal(out.shape)
        bargs = (fwd[0], h1, h2, fwd[3], fwd[5], dout)
        py = timeit(_pykernels.mlp_backward, bargs, repeats)
        cy = timeit(_ckernels.mlp_backward, bargs, repeats) if _ckernels else None
        row(f"mlp_backward ({label}, B={batch})", py, cy)

    T, N = 128, 4
    gae_args = (rng.standard_normal((T, N)), rng.standard_normal((T, N)),
                (rng.random((T, N)) < 0.01).astype(float),
                rng.standard_normal(N), 0.99, 0.95)
    py = timeit(_pykernels.gae_scan, gae_args, args.repeats)
    cy = timeit(_ckernels.gae_scan, gae_args, args.repeats) if _ckernels else None
    row(f"gae_scan (T={T}, N={N})", py, cy)

    for batch in (4, 512):
        logits = rng.standard_normal((batch, 7))
        u = rng.random(batch)
        py = timeit(_pykernels.categorical_from_logits, (logits, u), args.repeats)
        cy = (timeit(_ckernels.categorical_from_logits, (logits, u), args.repeats)
              if _ckernels else None)
        row(f"categorical_from_logits (B={batch})", py, cy)


if __name__ == "__main__":
    main()
