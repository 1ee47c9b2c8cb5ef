"""Timing comparison for the two eigensolver kernel backends.

Diagonalizes random Hermitian matrices with the compiled Jacobi kernel and
its pure NumPy twin, checks that both agree to round-off, and prints a
timing table. Run from the repository root:

    python3 benchmarks/bench_eig.py
    python3 benchmarks/bench_eig.py --sizes 8 27 64 81 --repeats 5
"""

import argparse
import time

import numpy as np

from bekbench import _kernels_py
from bekbench._backend import backend_name

try:
    from bekbench import _kernels
except ImportError:
    _kernels = None

OFF_TOL_REL = 1e-14
MAX_SWEEPS = 60
AGREE_TOL = 1e-11


def random_hermitian(rng, n):
    g = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return np.ascontiguousarray((g + g.conj().T) / 2.0)


def run_kernel(kernel, a):
    """One diagonalization; returns (seconds, sorted eigenvalues, residual)."""
    h = a.copy()
    v = np.eye(a.shape[0], dtype=np.complex128)
    tol = OFF_TOL_REL * np.linalg.norm(a)
    t0 = time.perf_counter()
    sweeps = kernel.jacobi_sweeps(h, v, tol, MAX_SWEEPS)
    dt = time.perf_counter() - t0
    if sweeps < 0:
        raise RuntimeError("kernel did not converge")
    w = np.sort(np.real(np.diag(h)))
    resid = np.linalg.norm(v @ np.diag(np.diag(h)) @ v.conj().T - a)
    return dt, w, resid


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[8, 27, 64, 81])
    parser.add_argument("--repeats", type=int, default=5)
    parser.add_argument("--seed", type=int, default=20260814)
    args = parser.parse_args()

    rng = np.random.default_rng(args.seed)
    print(f"selected backend: {backend_name()}")
    if _kernels is None:
        print("compiled kernel not importable; timing the NumPy twin only")
    header = f"{'n':>5s} {'python (ms)':>12s} {'c (ms)':>10s} {'speedup':>8s} {'agree':>10s}"
    print(header)
    print("-" * len(header))
    ok = True
    for n in args.sizes:
        a = random_hermitian(rng, n)
        t_py = min(run_kernel(_kernels_py, a)[0] for _ in range(args.repeats))
        _, w_py, r_py = run_kernel(_kernels_py, a)
        ok &= r_py <= AGREE_TOL * max(1.0, np.linalg.norm(a))
        if _kernels is None:
            print(f"{n:5d} {1e3 * t_py:12.3f} {'-':>10s} {'-':>8s} {'-':>10s}")
            continue
        t_c = min(run_kernel(_kernels, a)[0] for _ in range(args.repeats))
        _, w_c, r_c = run_kernel(_kernels, a)
        agree = float(np.max(np.abs(w_py - w_c))) / max(1.0, np.linalg.norm(a))
        ok &= agree <= AGREE_TOL
        ok &= r_c <= AGREE_TOL * max(1.0, np.linalg.norm(a))
        print(
            f"{n:5d} {1e3 * t_py:12.3f} {1e3 * t_c:10.3f} "
            f"{t_py / t_c:7.1f}x {agree:10.1e}"
        )
    if not ok:
        print(f"FAIL: backends disagree beyond {AGREE_TOL:.0e}")
        return 1
    print(f"backends agree to {AGREE_TOL:.0e} (relative) on all sizes")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
