"""Time the compiled kernels against the pure-numpy fallback.

    python3 benchmarks/bench_kernels.py            # both backends, side by side
    python3 benchmarks/bench_kernels.py --single   # current backend only, JSON

Each backend runs in its own interpreter because the choice is made when
:mod:`g2sym` is first imported.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np


def workloads():
    from g2sym import fhn_structure as fhn
    from g2sym import multimoment as mm
    from g2sym import tracer as tr

    sol = fhn.bryant_salamon_solution(c=1.0, r_max=5.0)
    ts = np.linspace(sol.t_min, sol.t_max, 2000)

    def integrate():
        fhn.bryant_salamon_solution(c=1.0, r_max=5.0)

    def evaluate():
        sol.values(ts)

    def eta():
        for t in ts[::20]:
            mm.eta(sol, t)

    def trace():
        for level in (1.0, 10.0, 50.0):
            tr.trace_associative(sol, level)
            tr.trace_coassociative(sol, level - 20.0)

    return {"integrate_fhn": integrate, "table_eval": evaluate, "eta": eta, "trace": trace}


def measure(repeats):
    from g2sym import _jit

    results = {}
    for name, job in workloads().items():
        start = time.perf_counter()
        job()
        first = time.perf_counter() - start
        best = np.inf
        for _ in range(repeats):
            start = time.perf_counter()
            job()
            best = min(best, time.perf_counter() - start)
        results[name] = {"first": first, "best": best}
    return {"numba": _jit.NUMBA_ACTIVE, "results": results}


def run_backend(disable, repeats):
    env = dict(os.environ, G2SYM_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run([sys.executable, __file__, "--single", "--repeats", str(repeats)],
                         env=env, capture_output=True, text=True, check=True)
    return json.loads(out.stdout)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--single", action="store_true", help="measure the current backend only")
    parser.add_argument("--repeats", type=int, default=5)
    args = parser.parse_args(argv)
    if args.single:
        print(json.dumps(measure(args.repeats)))
        return
    compiled = run_backend(False, args.repeats)
    plain = run_backend(True, args.repeats)
    print(f"{'kernel':<14}{'numba first':>13}{'numba best':>12}{'numpy best':>12}{'speedup':>9}")
    for name, fast in compiled["results"].items():
        slow = plain["results"][name]
        print(f"{name:<14}{fast['first']:>12.3f}s{fast['best']:>11.4f}s{slow['best']:>11.4f}s"
              f"{slow['best'] / fast['best']:>8.1f}x")


if __name__ == "__main__":
    main()
