"""Pure NumPy twin of the compiled eigensolver kernel.

Cyclic Jacobi diagonalization for complex Hermitian matrices. Each 2x2
subproblem is first de-phased so that the pivot entry becomes real, then
rotated with the classic symmetric Schur parametrization. The same arithmetic
(in the same order) as the compiled kernel, so both backends agree to
round-off on identical input.
"""

import numpy as np


def jacobi_sweeps(a, v, off_tol, max_sweeps):
    """Diagonalize Hermitian ``a`` in place, accumulating the unitary in ``v``.

    Parameters
    ----------
    a : (n, n) complex128, C-contiguous
        Hermitian matrix; overwritten with a (numerically) diagonal matrix.
    v : (n, n) complex128, C-contiguous
        Must arrive as the identity; exits with eigenvectors in its columns,
        so that a_in = v @ diag(a_out) @ v.conj().T.
    off_tol : float
        Absolute Frobenius threshold on the off-diagonal part.
    max_sweeps : int
        Upper bound on full cyclic sweeps.

    Returns
    -------
    int
        Number of sweeps used, or -1 if the tolerance was not reached.
    """
    n = a.shape[0]
    if n <= 1:
        return 0
    # Rotations below this size cannot move the off-norm past the target and
    # are skipped so that converged pairs are not churned forever.
    skip = off_tol / (4.0 * n * n)
    for sweep in range(max_sweeps):
        off2 = np.abs(a) ** 2
        np.fill_diagonal(off2, 0.0)
        if np.sqrt(off2.sum()) <= off_tol:
            return sweep
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                m = abs(apq)
                if m <= skip:
                    continue
                app = a[p, p].real
                aqq = a[q, q].real
                tau = (aqq - app) / (2.0 * m)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                f = apq / m
                fc = f.conjugate()
                # A <- A U with U = [[c, s], [-s fc, c fc]] on (p, q) columns
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - (s * fc) * col_q
                a[:, q] = s * col_p + (c * fc) * col_q
                # A <- U^dagger A on (p, q) rows
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - (s * f) * row_q
                a[q, :] = s * row_p + (c * f) * row_q
                # Closed-form values for the rotated 2x2 block are exact.
                a[p, p] = app - t * m
                a[q, q] = aqq + t * m
                a[p, q] = 0.0
                a[q, p] = 0.0
                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - (s * fc) * vq
                v[:, q] = s * vp + (c * fc) * vq
    off2 = np.abs(a) ** 2
    np.fill_diagonal(off2, 0.0)
    if np.sqrt(off2.sum()) <= off_tol:
        return max_sweeps
    return -1
