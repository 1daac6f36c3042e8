"""Time the compiled and pure-Python explicit flow kernels on the same problem.

    python benchmarks/bench_flow.py --k 4 --l 2 --n 64 --steps 500
"""
import argparse
import timeit

import numpy as np

from monochain import _flow_py, toda
from monochain.ansatz import make_grid
from monochain.spectral import build_params

try:
    from monochain import _flow as _flow_c
except ImportError:
    _flow_c = None


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=4)
    ap.add_argument("--l", type=int, default=2)
    ap.add_argument("--n", type=int, default=64, help="grid points per direction")
    ap.add_argument("--steps", type=int, default=500)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    p = build_params(args.k, args.l)
    g = make_grid(p, args.n, args.n)
    prob = toda.build_problem(p, g)
    psi0 = toda.initial_guess(prob)
    dt = toda.stable_step(prob, psi0)
    common = (prob.a, prob.slope, g.h_r, g.h_t, prob.shift)

    backends = {"python": _flow_py}
    if _flow_c is not None:
        backends["cython"] = _flow_c
    else:
        print("compiled extension not available; timing the Python kernel only")

    results = {}
    for name, mod in backends.items():
        def run_steps():
            psi = psi0.copy()
            mod.explicit_steps(psi, *common[:-1], common[-1], dt, args.steps)
            return psi
        t_steps = min(timeit.repeat(run_steps, number=1, repeat=args.repeat))
        t_res = min(timeit.repeat(lambda: mod.residual(psi0, *common), number=20,
                                  repeat=args.repeat)) / 20
        results[name] = (t_steps, t_res, run_steps())
        print(f"{name:7s} {args.steps} steps: {t_steps * 1e3:9.2f} ms "
              f"({t_steps / args.steps * 1e6:8.1f} us/step)   residual: {t_res * 1e6:8.1f} us")

    if "cython" in results:
        (tp, rp, psi_p), (tc, rc, psi_c) = results["python"], results["cython"]
        print(f"speedup  steps x{tp / tc:.2f}   residual x{rp / rc:.2f}   "
              f"max |difference| {np.abs(psi_p - psi_c).max():.2e}")


if __name__ == "__main__":
    main()
