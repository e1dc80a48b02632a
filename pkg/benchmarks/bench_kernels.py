"""Compare the compiled kernels against the numpy reference.

    python3 benchmarks/bench_kernels.py [--repeat N]

Prints the best-of-N time per call for each kernel and backend, the
speed-up, and the maximum difference between the two results.
"""
import argparse
import timeit

import numpy as np

from vpamr import interp, kernels


def cases(rng):
    f = rng.random((70, 134))          # a 64 x 128 patch with 3 ghosts
    E = rng.standard_normal(70)
    vbar = np.linspace(-8, 10, 134)
    u = rng.random((68, 68))
    fx, fv = kernels.python.vlasov_fluxes(f, E, vbar, 0.1, 3, 1e-6, True, 1.0)
    return {
        "vlasov_fluxes (limited)": lambda k: k.vlasov_fluxes(f, E, vbar, 0.1, 3, 1e-6, True, 1.0),
        "vlasov_fluxes (unlimited)": lambda k: k.vlasov_fluxes(f, E, vbar, 0.1, 3, 1e-6, False, 1.0),
        "flux_divergence": lambda k: k.flux_divergence(fx, fv, 0.2, 0.1),
        "weno5_refine_axis R=4": lambda k: k.weno5_refine_axis(u, 4, 0, 1e-6, interp.subcell_ideal_weights(4)),
        "linear5_refine_axis R=4": lambda k: k.linear5_refine_axis(u, 4, 1, interp.linear5_coeffs(4).b),
    }


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--number", type=int, default=20)
    args = ap.parse_args(argv)
    if kernels.compiled is None:
        print("compiled kernels not available; only the numpy reference can be timed")
    backends = [("numpy", kernels.python)] + ([("cython", kernels.compiled)] if kernels.compiled else [])
    rng = np.random.default_rng(0)
    print(f"{'kernel':28s} " + " ".join(f"{n + ' ms':>10s}" for n, _ in backends) + "   speed-up   max |diff|")
    for name, fn in cases(rng).items():
        times, results = [], []
        for _, mod in backends:
            t = min(timeit.repeat(lambda: fn(mod), number=args.number, repeat=args.repeat)) / args.number
            times.append(t)
            results.append(fn(mod))
        line = f"{name:28s} " + " ".join(f"{1e3 * t:10.3f}" for t in times)
        if len(times) == 2:
            a, b = results
            a = a if isinstance(a, tuple) else (a,)
            b = b if isinstance(b, tuple) else (b,)
            diff = max(float(np.max(np.abs(x - y))) for x, y in zip(a, b))
            line += f"   {times[0] / times[1]:8.1f}x   {diff:.2e}"
        print(line)


if __name__ == "__main__":
    main()
