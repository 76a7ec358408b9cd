"""Timing comparison of the compiled recurrence kernels against the
numpy fallback.

Run as:  python benchmarks/bench_kernels.py [--n 128] [--t 70] [--batch 10]
"""

import argparse
import time

import numpy as np

from schurrnn._backend import get_kernels


def _setup(n, t_len, batch, seed=0):
    rng = np.random.default_rng(seed)
    v = rng.normal(0.0, 1.0 / np.sqrt(n), size=(n, n))
    pre = rng.normal(size=(t_len, batch, n))
    bias = rng.normal(size=n) * 0.01
    h0 = rng.normal(size=(batch, n))
    gout = rng.normal(size=(t_len, batch, n))
    return (np.ascontiguousarray(x) for x in (v, pre, bias, h0, gout))


def _time(fn, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--n", type=int, default=128)
    parser.add_argument("--t", type=int, default=70)
    parser.add_argument("--batch", type=int, default=10)
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args()

    v, pre, bias, h0, gout = _setup(args.n, args.t, args.batch)

    results = {}
    for name in ("python", "compiled"):
        try:
            k = get_kernels(name)
        except ImportError:
            print(f"{name:>9}: extension not built, skipping")
            continue
        h = k.rnn_forward(v, pre, bias, h0, False)
        fwd = _time(lambda: k.rnn_forward(v, pre, bias, h0, False),
                    args.repeats)
        bwd = _time(lambda: k.rnn_backward(v, h, gout, False), args.repeats)
        results[name] = (fwd, bwd)
        print(f"{name:>9}: forward {fwd * 1e3:8.2f} ms   "
              f"backward {bwd * 1e3:8.2f} ms")

    if len(results) == 2:
        fp, bp = results["python"]
        fc, bc = results["compiled"]
        print(f"  speedup: forward {fp / fc:5.2f}x   backward {bp / bc:5.2f}x")

    # agreement check on the same inputs
    if len(results) == 2:
        hp = get_kernels("python").rnn_forward(v, pre, bias, h0, False)
        hc = get_kernels("compiled").rnn_forward(v, pre, bias, h0, False)
        print(f"  max |forward diff|: {np.max(np.abs(hp - hc)):.3e}")


if __name__ == "__main__":
    main()
