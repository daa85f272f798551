"""Compare the numba and numpy kernel paths on representative inputs.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from thermosep import _kernels


def _random_state(rng, D):
    x = rng.normal(size=(D, D)) + 1j * rng.normal(size=(D, D))
    rho = x @ x.conj().T
    return np.ascontiguousarray(rho / np.trace(rho))


def _dichotomic(rng, d):
    x = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    w, v = np.linalg.eigh(x + x.conj().T)
    return np.ascontiguousarray((v * np.sign(w)) @ v.conj().T)


def _time(fn, repeat):
    fn()  # warm-up (includes JIT compile for the numba path)
    best = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if not _kernels.HAVE_NUMBA:
        print("numba not installed; only the numpy path is available")
    rng = np.random.default_rng(0)
    print(f"{'kernel':<22}{'dims':>8}{'numpy [ms]':>14}{'numba [ms]':>14}{'max |diff|':>14}")
    for da, db in [(4, 4), (8, 8), (16, 16)]:
        rho = _random_state(rng, da * db)
        obs = [_dichotomic(rng, da), _dichotomic(rng, da), _dichotomic(rng, db), _dichotomic(rng, db)]
        cases = {
            "partial_transpose": (_kernels.partial_transpose_numpy, _kernels.partial_transpose_numba, (rho, da, db)),
            "realign": (_kernels.realign_numpy, _kernels.realign_numba, (rho, da, db)),
            "chsh_ascent": (_kernels.chsh_ascent_numpy, _kernels.chsh_ascent_numba, (rho, da, db, *obs, 200, 1e-13)),
        }
        for name, (f_np, f_nb, a) in cases.items():
            t_np = _time(lambda: f_np(*a), args.repeat)
            r_np = f_np(*a)
            if _kernels.HAVE_NUMBA:
                t_nb = _time(lambda: f_nb(*a), args.repeat)
                r_nb = f_nb(*a)
                first_np = r_np[0] if isinstance(r_np, tuple) else r_np
                first_nb = r_nb[0] if isinstance(r_nb, tuple) else r_nb
                diff = float(np.max(np.abs(np.asarray(first_np) - np.asarray(first_nb))))
                print(f"{name:<22}{f'{da}x{db}':>8}{1e3 * t_np:>14.3f}{1e3 * t_nb:>14.3f}{diff:>14.2e}")
            else:
                print(f"{name:<22}{f'{da}x{db}':>8}{1e3 * t_np:>14.3f}{'-':>14}{'-':>14}")


if __name__ == "__main__":
    main()
