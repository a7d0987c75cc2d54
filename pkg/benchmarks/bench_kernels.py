"""Time each hot kernel under the numba and pure-numpy backends.

    python benchmarks/bench_kernels.py [--sizes 32,128,256,512] [--reps 5]

Prints median seconds per call and the numpy/numba speed-up. Numba is
warmed up (JIT compiled) before timing. Also checks the two backends agree.
"""

import argparse
import time

import numpy as np

from relaxrank import kernels


def make_inputs(n, rng):
    s = rng.normal(size=n)
    labels = rng.integers(0, 5, n).astype(np.float64)
    gains = 2.0**labels - 1.0
    positions = np.empty(n, dtype=np.int64)
    positions[np.argsort(-s, kind="stable")] = np.arange(n)
    disc = 1.0 / np.log2(np.arange(2, n + 2))
    delta = kernels.numpy_impl.swap_delta_ndcg(gains, positions, disc, 0.01)
    return {
        "neural_sort_matrix": (s, 1.0),
        "softmax_rows": (rng.normal(size=(n, n)) * 5,),
        "sinkhorn": (rng.uniform(0.01, 1.0, size=(n, n)), 30, 1e-6),
        "swap_delta_ndcg": (gains, positions, disc, 0.01),
        "lambda_gradients": (s, labels, delta),
    }


def median_time(fn, args, reps, inner):
    samples = []
    for _ in range(reps):
        t0 = time.perf_counter()
        for _ in range(inner):
            fn(*args)
        samples.append((time.perf_counter() - t0) / inner)
    return float(np.median(samples))


def first(out):
    return out[0] if isinstance(out, tuple) else out


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--sizes", default="32,128,256,512")
    p.add_argument("--reps", type=int, default=5, help="timing samples; the median is reported")
    p.add_argument("--inner", type=int, default=20, help="calls per sample")
    args = p.parse_args()
    if kernels.numba_impl is None:
        raise SystemExit("numba is not importable; nothing to compare")

    rng = np.random.default_rng(0)
    print(f"{'kernel':<20} {'n':>5} {'numpy s':>11} {'numba s':>11} {'speed-up':>9}")
    for n in (int(v) for v in args.sizes.split(",")):
        for name, call_args in make_inputs(n, rng).items():
            np_fn = getattr(kernels.numpy_impl, name)
            nb_fn = getattr(kernels.numba_impl, name)
            a, b = first(np_fn(*call_args)), first(nb_fn(*call_args))  # also warms up the JIT
            if not np.allclose(a, b, rtol=1e-9, atol=1e-12):
                raise SystemExit(f"{name} n={n}: backends disagree")
            t_np = median_time(np_fn, call_args, args.reps, args.inner)
            t_nb = median_time(nb_fn, call_args, args.reps, args.inner)
            print(f"{name:<20} {n:>5} {t_np:>11.3e} {t_nb:>11.3e} {t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
