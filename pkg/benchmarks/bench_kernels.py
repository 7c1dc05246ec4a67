"""Time the compiled kernels against the numpy fallback.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--sizes 8,64,256]

Each kernel is run on identical inputs with both backends; the table lists
the best wall time per call and the speedup, and the script checks that the
two backends agree before timing.
"""

import argparse
import timeit

import numpy as np

from propopt import _kernels
from propopt.functions import generate_points
from propopt.similarity import SimilaritySpec, make_bundle


def _inputs(N, D=3, seed=0):
    rng = np.random.default_rng(seed)
    P = generate_points(D, "uniform", N, bounds=(-1, 1), seed=seed)
    b = make_bundle(P, SimilaritySpec("gaussian", 0.5))
    G = rng.normal(size=(N, D))
    L, Lt = np.ascontiguousarray(b.L), np.ascontiguousarray(b.L_tilde)
    lip = 2 + 4 * 0.5 * np.linalg.eigvalsh(L)[-1] + 4 * 0.2 * np.linalg.eigvalsh(Lt)[-1]
    mask = (b.S > 0.1).astype(np.uint8)
    return G, np.ascontiguousarray(b.S), L, Lt, lip, mask


def _cases(N, steps):
    G, S, L, Lt, lip, mask = _inputs(N)
    return {
        "pairwise_sq_sum": lambda m: m.pairwise_sq_sum(G, S),
        "masked_max_sq": lambda m: m.masked_max_sq(G, mask),
        f"quadratic_gd x{steps}": lambda m: m.quadratic_gd(G, L, Lt, 1.0, 0.5, 0.2, 1.0 / lip, steps, G.copy()),
        "fista_l1": lambda m: m.fista_l1(G, L, Lt, 1.0, 0.5, 0.2, 0.3, lip, 1e-10, 2000, G.copy()),
    }


def _first(out):
    return out[0] if isinstance(out, tuple) else out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", default="8,64,256", help="comma-separated point counts N (D=3)")
    ap.add_argument("--steps", type=int, default=2000, help="gradient descent steps per call")
    args = ap.parse_args(argv)

    backends = _kernels.backends()
    if "compiled" not in backends:
        print("compiled extension not built; only the python backend is available")
    names = list(backends)
    print(f"{'kernel':<22}{'N':>6}" + "".join(f"{n + ' ms':>14}" for n in names)
          + ("    speedup" if len(names) == 2 else ""))
    for N in (int(s) for s in args.sizes.split(",")):
        for label, fn in _cases(N, args.steps).items():
            outs = [_first(fn(backends[n])) for n in names]
            # iterative kernels stop on a relative step of 1e-10, so iterates may differ at that level
            for o in outs[1:]:
                if not np.allclose(o, outs[0], rtol=1e-8, atol=1e-8):
                    raise SystemExit(f"backends disagree on {label} at N={N}")
            times = []
            for n in names:
                t = timeit.repeat(lambda: fn(backends[n]), number=1, repeat=args.repeat)
                times.append(min(t) * 1e3)
            line = f"{label:<22}{N:>6}" + "".join(f"{t:>14.3f}" for t in times)
            if len(times) == 2:
                line += f"{times[0] / times[1]:>10.1f}x"
            print(line)


if __name__ == "__main__":
    main()
