"""Throughput comparison of the identification loop backends.

Runs the same recursive identification problem through the compiled
kernel and the pure-python fallback, reports steps per second for each,
and cross-checks that both backends produce the same estimate.

Usage:
    python benchmarks/bench_ident.py [--samples N] [--scheme S] [--repeats R]
"""
import argparse
import time

import numpy as np

from gobfid._kernels import HAVE_COMPILED
from gobfid.adaptation import AdaptationOptions, run_identification
from gobfid.basis import validate_basis
from gobfid.lti import NoiseSpec, prbs, simulate
from gobfid.bench import stiff_benchmark
from gobfid.predictor import PredictorConfig


def build_problem(samples: int, scheme: str):
    system = stiff_benchmark()
    u = prbs(20, samples, 1.0).samples
    clean = simulate(system.model, u).samples
    sigma = float(np.std(clean)) * 10.0 ** (-22.0 / 20.0)
    y = clean + NoiseSpec(sigma, 1234).realize(samples)
    structure = {"hrls": "arx", "herls": "armax", "holoe": "oe"}[scheme]
    spec = validate_basis((0.6, 0.9996))
    config = PredictorConfig(structure, spec, 10)
    return config, u, y


def time_backend(config, u, y, backend: str, repeats: int):
    options = AdaptationOptions(f0_scale=1000.0, backend=backend)
    best = np.inf
    result = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = run_identification(config, u, y, options)
        best = min(best, time.perf_counter() - t0)
    return result, best


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--samples", type=int, default=200_000,
                        help="record length (default 200000)")
    parser.add_argument("--scheme", default="herls",
                        choices=("hrls", "herls", "holoe"))
    parser.add_argument("--repeats", type=int, default=3,
                        help="timing repeats, best-of (default 3)")
    args = parser.parse_args()

    config, u, y = build_problem(args.samples, args.scheme)
    steps = args.samples - 1
    print(f"scheme={args.scheme}  samples={args.samples}  "
          f"parameters={config.n_params}")

    res_py, t_py = time_backend(config, u, y, "py", args.repeats)
    print(f"py : {t_py:8.3f} s   {steps / t_py:12,.0f} steps/s")

    if not HAVE_COMPILED:
        print("cy : compiled kernel not available in this install")
        return

    res_cy, t_cy = time_backend(config, u, y, "cy", args.repeats)
    print(f"cy : {t_cy:8.3f} s   {steps / t_cy:12,.0f} steps/s")
    print(f"speedup: {t_py / t_cy:.1f}x")

    drift = np.max(np.abs(res_py.theta.theta - res_cy.theta.theta))
    print(f"max |theta_py - theta_cy| = {drift:.3e}")
    if drift > 1e-9:
        raise SystemExit("backends disagree beyond tolerance")


if __name__ == "__main__":
    main()
