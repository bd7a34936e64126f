"""Compare the compiled and pure-Python backends on the hot paths.

Usage: python3 benchmarks/bench_backends.py [--size 512] [--repeats 5]
"""
import argparse
import time

from ringbf._backend import backend_name, load_backend, set_backend
from ringbf.analysis import NoiseDistribution, estimate_K
from ringbf.ctmodel import synth_phantom
from ringbf.filter import FilterConfig, filter_image_values
from ringbf.kernel import KernelSpec, VFamily, WFamily

FILTER_BUDGET_S = 0.250  # soft target for one 512x512, n=3 pass


def best_of(repeats, fn):
    times = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--size", type=int, default=512, help="test image side length")
    ap.add_argument("--repeats", type=int, default=5, help="best-of repeat count")
    ap.add_argument("--trials", type=int, default=20000, help="estimator trials")
    args = ap.parse_args()

    img = synth_phantom([0, 120], sigma=40.0, seed=0, size=(args.size, args.size))
    spec = KernelSpec(v=VFamily.Frac, t=0.02, w=WFamily.power(), n=3)
    cfg = FilterConfig(spec=spec)
    est_spec = spec.with_t(0.0)

    backends = ["python"]
    try:
        load_backend("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("note: compiled backend not built; timing pure Python only")

    rows = []
    original = backend_name()
    try:
        for name in backends:
            set_backend(name)
            t_filter = best_of(
                args.repeats, lambda: filter_image_values(img, cfg)
            )
            t_est = best_of(
                args.repeats,
                lambda: estimate_K(
                    est_spec, 1.4, NoiseDistribution.Normal,
                    trials=args.trials, seed=0,
                ),
            )
            rows.append((name, t_filter, t_est))
    finally:
        set_backend(original)

    print(f"\nimage: {args.size}x{args.size}, n=3  |  "
          f"estimator: {args.trials} trials  |  best of {args.repeats}")
    print(f"{'backend':<10} {'filter (ms)':>12} {'estimate (ms)':>14}")
    for name, t_filter, t_est in rows:
        print(f"{name:<10} {t_filter * 1e3:>12.2f} {t_est * 1e3:>14.2f}")
    if len(rows) == 2:
        print(f"{'speedup':<10} {rows[1][1] / rows[0][1]:>11.1f}x "
              f"{rows[1][2] / rows[0][2]:>13.1f}x")

    fastest = rows[0][1]
    status = "within" if fastest <= FILTER_BUDGET_S else "OVER"
    print(f"\nfilter budget: {fastest * 1e3:.1f} ms vs "
          f"{FILTER_BUDGET_S * 1e3:.0f} ms soft target ({status})")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
