"""Compare the compiled and pure numerics backends.

Times the four hot kernels at bandit-relevant sizes, then (optionally) runs
one end-to-end synthetic trial per backend in subprocesses, since the
backend is chosen at import time.

Usage:
    python benchmarks/bench_backends.py            # kernel table + end-to-end
    python benchmarks/bench_backends.py --kernels  # kernel table only
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from consbandit.numerics import _pure

try:
    from consbandit.numerics import _spdcore
except ImportError:
    _spdcore = None


def spd(rng, d):
    mat = np.eye(d)
    for _ in range(2 * d):
        v = rng.standard_normal(d)
        mat += np.outer(v, v)
    return (mat + mat.T) / 2


def best_of(fn, repeats, number):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for _ in range(number):
            fn()
        best = min(best, (time.perf_counter() - t0) / number)
    return best


def kernel_table(dims=(15, 60, 240), k_actions=24):
    rng = np.random.default_rng(0)
    impls = [("pure", _pure)] + ([("compiled", _spdcore)] if _spdcore else [])
    print(f"{'kernel':<22} {'d':>4} " + "".join(f"{name:>12}" for name, _ in impls)
          + ("     speedup" if _spdcore else ""))
    for d in dims:
        mat = spd(rng, d)
        vec = rng.standard_normal(d)
        rows = np.ascontiguousarray(rng.standard_normal((k_actions, d)))
        number = max(3, int(40_000 / (d * d) ** 0.5))
        cases = {
            "cholesky_factor": lambda impl, m=mat: impl.cholesky_lower(m),
            "rank_one_update": None,  # handled below (stateful)
            "solve": None,
            "batched_quad_forms": None,
        }
        timings = {name: {} for name in cases}
        for impl_name, impl in impls:
            low = impl.cholesky_lower(mat)
            timings["cholesky_factor"][impl_name] = best_of(
                lambda: impl.cholesky_lower(mat), 3, number)
            work = low.copy()
            timings["rank_one_update"][impl_name] = best_of(
                lambda: impl.rank_one_update(work, 1e-8 * vec), 3, number)
            timings["solve"][impl_name] = best_of(
                lambda: impl.solve_cholesky(low, vec), 3, number)
            timings["batched_quad_forms"][impl_name] = best_of(
                lambda: impl.inv_quad_forms(low, rows), 3, number)
        for kernel, per_impl in timings.items():
            row = f"{kernel:<22} {d:>4} "
            row += "".join(f"{per_impl[name] * 1e6:>10.1f}us" for name, _ in impls)
            if _spdcore:
                row += f"{per_impl['pure'] / per_impl['compiled']:>10.1f}x"
            print(row)
        print()


END_TO_END_SNIPPET = r"""
import time
import numpy as np
from consbandit.harness import ExperimentConfig, run_experiment
from consbandit.numerics import backend_name

cfg = ExperimentConfig(environment="synthetic", policies=("cslucb",),
                       alphas=(0.5,), horizon=2000, trials=5, seed=7,
                       prepass_draws=2000)
t0 = time.time()
run_experiment(cfg)
print(f"{backend_name()}: 5 trials x 2000 rounds in {time.time() - t0:.2f}s")
"""


def end_to_end():
    for backend in ("pure", "compiled"):
        env = dict(os.environ, CONSBANDIT_NUMERICS=backend)
        proc = subprocess.run([sys.executable, "-c", END_TO_END_SNIPPET],
                              env=env, capture_output=True, text=True)
        if proc.returncode != 0:
            print(f"{backend}: unavailable ({proc.stderr.strip().splitlines()[-1]})")
        else:
            print(proc.stdout.strip())


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--kernels", action="store_true", help="skip the end-to-end runs")
    args = parser.parse_args()
    if _spdcore is None:
        print("compiled backend not built; timing the pure backend only\n")
    kernel_table()
    if not args.kernels:
        print("end-to-end (subprocess per backend):")
        end_to_end()


if __name__ == "__main__":
    main()
