"""Benchmark the compiled kernel core against the numpy fallback.

Times the three hot kernels on training-sized batches and a full
residual-Jacobian assembly, then one LM training stage end to end.

    python3 benchmarks/bench_backends.py [--points 400] [--repeats 50]
"""

import argparse
import time

import numpy as np

from fblin import benchmark_design, benchmark_system, equilibrium_data, solve_pinning
from fblin.backends import numpy_backend as nb
from fblin.lm import LmSettings, minimize
from fblin.network import NetworkParams
from fblin.residuals import residual_functions
from fblin.training import BoxDomain, bootstrap_params, make_grid

try:
    from fblin.backends import _core
except ImportError:
    _core = None


def time_call(fn, *args, repeats=50):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_kernels(points, repeats):
    rng = np.random.default_rng(0)
    params = NetworkParams.random(2, 5, 5, seed=0)
    arrs = params._arrays()
    X = np.ascontiguousarray(rng.uniform(-0.495, 0.0, (points, 2)))
    rows = []
    for name, np_fn, c_fn in (
        ("forward_batch", nb.forward_batch, getattr(_core, "forward_batch", None)),
        ("input_jacobian_batch", nb.input_jacobian_batch,
         getattr(_core, "input_jacobian_batch", None)),
        ("param_jacobian_batch", nb.param_jacobian_batch,
         getattr(_core, "param_jacobian_batch", None)),
    ):
        t_np = time_call(np_fn, X, *arrs, repeats=repeats)
        t_c = time_call(c_fn, X, *arrs, repeats=repeats) if c_fn else float("nan")
        rows.append((name, t_np, t_c))
    return rows


def bench_stage(backend_env):
    import importlib
    import os

    os.environ["FBLIN_BACKEND"] = backend_env
    import fblin.backends
    import fblin.network
    import fblin.residuals

    importlib.reload(fblin.backends)
    importlib.reload(fblin.network)
    importlib.reload(fblin.residuals)

    sysm = benchmark_system()
    spec = benchmark_design()
    target = solve_pinning(equilibrium_data(sysm), spec)
    grid = make_grid(BoxDomain.square(-0.2), 20)
    init = bootstrap_params(2, 5, 5, 0, "sigmoid", target.jac0, grid)
    res_fn, jac_fn = fblin.residuals.residual_functions(sysm, spec, init, grid, target)
    settings = LmSettings(max_function_evals=600, max_iterations=300)
    t0 = time.perf_counter()
    result = minimize(res_fn, jac_fn, init.flatten(), settings)
    return time.perf_counter() - t0, result.final_loss


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--points", type=int, default=400)
    parser.add_argument("--repeats", type=int, default=50)
    args = parser.parse_args()

    if _core is None:
        print("compiled core not built (python3 setup.py build_ext --inplace); "
              "showing numpy-only timings")

    print(f"kernel timings, batch of {args.points} points (best of {args.repeats}):")
    print(f"{'kernel':24s} {'numpy':>12s} {'compiled':>12s} {'speedup':>9s}")
    for name, t_np, t_c in bench_kernels(args.points, args.repeats):
        ratio = t_np / t_c if t_c == t_c else float("nan")
        print(f"{name:24s} {t_np * 1e6:9.1f} us {t_c * 1e6:9.1f} us {ratio:8.1f}x")

    print("\none 600-evaluation training stage on the first continuation box:")
    for backend in (["numpy"] + (["compiled"] if _core is not None else [])):
        wall, loss = bench_stage(backend)
        print(f"  {backend:9s} {wall:7.2f} s  (final loss {loss:.3e})")


if __name__ == "__main__":
    main()
