"""Time the compiled kernels against the NumPy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import sys
import timeit

import numpy as np

from edgeoffload import _purepy, kernels
from edgeoffload.experiments import build_paper_scenario, run_experiment


def _cases(rng):
    rates = rng.uniform(1, 200, size=7)
    arrival = 0.6 * rates.sum()
    free = rng.uniform(1, 200, size=7)
    delays = np.append(rng.uniform(0.005, 0.1, size=6), 0.0)
    rho = rng.dirichlet(np.ones(7))
    avail = rho * 5.0 + rng.uniform(1, 50, size=7)
    game = build_paper_scenario(0.3, 1).game()
    return {
        "waterfill": lambda k: k.waterfill(rates, arrival),
        "admissible_rates": lambda k: k.admissible_rates(free, delays, 0.25),
        "response_time": lambda k: k.response_time(rho, avail, delays, 5.0),
        "best_response_sweep": lambda k: k.best_response_sweep(
            game.edge_rates, game.local_rates, game.delays, game.deadlines, game.arrivals,
            game.rho.copy(), game.last_times.copy(), game.edge_loads.copy()),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=2000)
    args = ap.parse_args(argv)
    compiled = kernels.compiled()
    if compiled is None:
        print("compiled extension not built; only the fallback is available", file=sys.stderr)
    backends = [("python", _purepy)] + ([("cython", compiled)] if compiled else [])
    print(f"{'kernel':<22}" + "".join(f"{name:>14}" for name, _ in backends) + "   speedup")
    for name, fn in _cases(np.random.default_rng(0)).items():
        us = [min(timeit.repeat(lambda: fn(k), number=args.repeat, repeat=3)) / args.repeat * 1e6
              for _, k in backends]
        speed = f"{us[0] / us[1]:8.1f}x" if len(us) == 2 else ""
        print(f"{name:<22}" + "".join(f"{u:12.2f}us" for u in us) + f"  {speed}")

    template = build_paper_scenario(0.3, 0)
    t = min(timeit.repeat(lambda: run_experiment(template, "DITOA", 100), number=1, repeat=3))
    print(f"\nDITOA, 100 repetitions at u=0.3 with the active backend ({kernels.BACKEND}): {t:.3f}s")


if __name__ == "__main__":
    main()
