"""Compare the compiled and pure-Python kernel backends.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from remod.kernels import _pure

try:
    from remod.kernels import _fast
except ImportError:
    _fast = None


def workload(seed=0, n_classes=10_000, n_modules=200, n_deps=60_000, n_commits=5_000):
    rng = np.random.default_rng(seed)
    assign = rng.integers(0, n_modules, n_classes).astype(np.int64)
    src = rng.integers(0, n_classes, n_deps).astype(np.int64)
    dst = rng.integers(0, n_classes, n_deps).astype(np.int64)
    sizes = rng.integers(1, 9, n_commits)
    ptr = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
    cls = np.concatenate([rng.choice(n_classes, s, replace=False) for s in sizes]).astype(np.int64)
    clients = rng.integers(2, 6, n_classes // 2)
    cptr = np.concatenate([[0], np.cumsum(clients)]).astype(np.int64)
    cmem = np.concatenate([rng.choice(n_classes, s, replace=False) for s in clients]).astype(np.int64)
    objs = rng.integers(0, 50, (1_000, 4)).astype(np.float64)
    return {
        "dependency_matrix": (assign, src, dst, n_modules),
        "commit_stats": (assign, ptr, cls, n_modules),
        "colocated_pairs": (assign, cptr, cmem),
        "nondominated_ranks": (objs,),
    }


E2E = """
import time
import numpy as np
from remod import kernels
from remod.buildcost import BuildCostModel
from remod.ingest import PlantedSpec, generate_planted
from remod.metrics import Evaluator
from remod.search import random_solution
s = generate_planted(PlantedSpec(modules=20, classes=(40, 60), commits=2000, seed=1))
ev = Evaluator(s, BuildCostModel(1, 1, 0))
rng = np.random.default_rng(0)
xs = [random_solution(s, (1, 10), rng) for _ in range(200)]
t = time.perf_counter()
for x in xs:
    ev(x)
print(kernels.BACKEND, (time.perf_counter() - t) / len(xs))
"""


def end_to_end():
    out = {}
    for pure in (True, False):
        env = dict(os.environ)
        env.pop("REMOD_PURE_PYTHON", None)
        if pure:
            env["REMOD_PURE_PYTHON"] = "1"
        r = subprocess.run([sys.executable, "-c", E2E], env=env, capture_output=True, text=True, check=True)
        name, t = r.stdout.split()
        out[name] = float(t)
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    cases = workload()
    backends = [("python", _pure)] + ([("cython", _fast)] if _fast else [])
    print(f"{'kernel':<20} " + " ".join(f"{name:>12}" for name, _ in backends) + "   speedup")
    for kernel, kargs in cases.items():
        times = []
        for _, mod in backends:
            fn = getattr(mod, kernel)
            times.append(min(timeit.repeat(lambda: fn(*kargs), number=1, repeat=args.repeat)))
        cells = " ".join(f"{t * 1000:10.2f}ms" for t in times)
        speedup = f"{times[0] / times[1]:8.1f}x" if len(times) == 2 else "       -"
        print(f"{kernel:<20} {cells} {speedup}")
    e2e = end_to_end()
    cells = " ".join(f"{e2e[name] * 1000:10.2f}ms" for name, _ in backends if name in e2e)
    speedup = f"{e2e['python'] / e2e['cython']:8.1f}x" if "cython" in e2e else "       -"
    print(f"{'evaluate (per sol.)':<20} {cells} {speedup}")


if __name__ == "__main__":
    main()
