#!/usr/bin/env python3
"""Benchmark the pattern-evaluation kernels: numba njit vs pure numpy.

The synthesis loop spends its time building steering matrices for the two
principal cuts and evaluating |a^H w|^2 over them for many taper candidates,
so those two kernels are timed here at the production problem size
(100 elements, 0.05 degree grids).

Run:  python benchmarks/bench_kernels.py [--elements 100] [--dirs 10800]
"""

import argparse
import time

import numpy as np

from uavisac import _kernels
from uavisac.geometry import ArrayConfig, centered_grid_offsets


def make_inputs(num_elements, num_dirs, seed=0):
    rng = np.random.default_rng(seed)
    config = ArrayConfig(num_elements=num_elements, carrier_hz=0.3e12)
    offsets = centered_grid_offsets(config)
    dirs = rng.normal(size=(num_dirs, 3))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    weights = rng.normal(size=num_elements) + 1j * rng.normal(size=num_elements)
    return config, offsets, dirs, weights


def time_fn(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--elements", type=int, default=100)
    parser.add_argument("--dirs", type=int, default=10800)
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--candidates", type=int, default=50,
                        help="cut_power evaluations per steering matrix, as in synthesis")
    args = parser.parse_args()

    config, offsets, dirs, weights = make_inputs(args.elements, args.dirs)
    k = config.wavenumber

    backends = [("numpy", _kernels.steering_matrix_numpy, _kernels.cut_power_numpy)]
    if _kernels.NUMBA_ENABLED:
        backends.append(("numba", _kernels.steering_matrix_numba, _kernels.cut_power_numba))
        # trigger compilation outside the timed region
        emat = _kernels.steering_matrix_numba(dirs[:64], offsets, k)
        _kernels.cut_power_numba(emat, weights)
    else:
        print("numba backend unavailable (UAVISAC_NUMBA=0 or numba not importable)")

    print(f"elements={args.elements} dirs={args.dirs} candidates={args.candidates} "
          f"(selected backend: {_kernels.backend()})")
    print(f"{'backend':8s} {'steering_matrix':>16s} {'cut_power x N':>14s} {'total':>10s}")
    reference = None
    for name, steering_fn, power_fn in backends:
        t_steer, emat = time_fn(lambda: steering_fn(dirs, offsets, k), args.repeats)

        def candidates():
            out = None
            for _ in range(args.candidates):
                out = power_fn(emat, weights)
            return out

        t_power, power = time_fn(candidates, args.repeats)
        total = t_steer + t_power
        print(f"{name:8s} {t_steer*1e3:13.2f} ms {t_power*1e3:11.2f} ms {total*1e3:7.2f} ms")
        if reference is None:
            reference = power
        else:
            err = float(np.max(np.abs(power - reference) / np.maximum(np.abs(reference), 1e-30)))
            print(f"{'':8s} max relative deviation vs numpy: {err:.2e}")


if __name__ == "__main__":
    main()
