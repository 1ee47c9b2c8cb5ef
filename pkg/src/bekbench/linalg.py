"""Deterministic dense linear algebra on complex Hermitian matrices.

All eigenproblems in the package funnel through :func:`herm_eig`, which wraps
the cyclic Jacobi kernel (compiled or pure NumPy, see ``_backend``) and then
canonicalizes the eigenbasis so that repeated runs, and runs across backends,
produce the same `Spectrum` for the same input:

* eigenvalues sorted ascending with a stable order,
* each nondegenerate eigenvector phase-fixed by making its largest-modulus
  entry (first such index) real and positive,
* each degenerate cluster replaced by the Gram-Schmidt orthonormalization of
  the projections of the canonical basis vectors, taken in index order.

Matrix functions, Frechet derivatives and the antilinear (conjugation)
helpers used by modular theory all build on that one spectrum.

Vectorization convention used across the package: ``vec_r`` is row-major
(C order) flattening, so ``(A kron B) vec_r(X) = vec_r(A X B^T)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._backend import jacobi_sweeps
from .errors import (
    DimensionMismatch,
    NegativeSpectrum,
    NoConvergence,
    NonHermitian,
    SingularWithoutSupport,
    BekbenchError,
)

# ---------------------------------------------------------------------------
# tolerances (single global policy; callers scale where the contract says so)
# ---------------------------------------------------------------------------

RANK_CUT_REL = 1e-10     # relative eigenvalue cut deciding numerical rank
HERM_TOL_REL = 1e-8      # allowed relative deviation from Hermiticity
OFF_TOL_REL = 1e-14      # Jacobi off-diagonal target, relative to ||A||_F
CLUSTER_TOL_REL = 1e-12  # eigenvalue clustering width, relative to max |w|
GS_ACCEPT = 1e-6         # norm threshold accepting a projected basis vector
MAX_SWEEPS = 60


def as_cmatrix(a) -> np.ndarray:
    """Validate and return a square complex128 C-contiguous copy."""
    m = np.array(a, dtype=np.complex128, order="C")
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionMismatch(f"expected a square matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m.view(np.float64))):
        raise DimensionMismatch("matrix contains non-finite entries")
    return m


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product Tr(a^dagger b), linear in b."""
    return complex(np.sum(a.conj() * b))


def hs_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def vec_r(x: np.ndarray) -> np.ndarray:
    """Row-major flattening; (A kron B) vec_r(X) = vec_r(A X B^T)."""
    return np.ascontiguousarray(x).reshape(-1)


def unvec_r(v: np.ndarray, rows: int, cols: int) -> np.ndarray:
    return np.ascontiguousarray(v).reshape(rows, cols)


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Spectrum:
    """Canonical eigendecomposition of a Hermitian matrix.

    ``eigenvalues`` ascending, ``eigenvectors`` unitary with matching columns,
    ``tolerance`` is the absolute rank cut used to decide which eigenvalues
    count as zero.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    tolerance: float

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def support_mask(self) -> np.ndarray:
        return np.abs(self.eigenvalues) > self.tolerance

    def rank(self) -> int:
        return int(self.support_mask().sum())

    def support_projector(self) -> np.ndarray:
        v = self.eigenvectors[:, self.support_mask()]
        return v @ dagger(v)

    def reconstruct(self) -> np.ndarray:
        return (self.eigenvectors * self.eigenvalues) @ dagger(self.eigenvectors)


def _canonicalize(w: np.ndarray, v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(w, kind="stable")
    w = w[order]
    v = v[:, order]
    n = w.shape[0]
    scale = float(np.abs(w).max()) if n else 0.0
    ctol = CLUSTER_TOL_REL * scale
    i = 0
    while i < n:
        j = i + 1
        while j < n and (w[j] - w[j - 1]) <= ctol:
            j += 1
        if j - i == 1:
            col = v[:, i]
            mags = np.abs(col)
            top = mags.max()
            k = int(np.argmax(mags >= top * (1.0 - 1e-12)))
            phase = col[k] / mags[k]
            v[:, i] = col * phase.conjugate()
        else:
            block = v[:, i:j]
            proj = block @ dagger(block)
            picked = []
            for col_idx in range(n):
                u = proj[:, col_idx].copy()
                for b in picked:      # two-pass reorthogonalization
                    u -= b * (b.conj() @ u)
                for b in picked:
                    u -= b * (b.conj() @ u)
                nrm = np.linalg.norm(u)
                if nrm > GS_ACCEPT:
                    picked.append(u / nrm)
                    if len(picked) == j - i:
                        break
            if len(picked) != j - i:
                raise BekbenchError("degenerate cluster basis extraction failed")
            v[:, i:j] = np.column_stack(picked)
        i = j
    return w, v


def herm_eig(a, *, max_sweeps: int = MAX_SWEEPS) -> Spectrum:
    """Eigendecomposition of a Hermitian matrix with a canonical basis.

    Raises NonHermitian if ``a`` deviates from its adjoint by more than
    ``HERM_TOL_REL`` relatively; the symmetrized matrix is what gets
    diagonalized. Raises NoConvergence if the sweep budget is exhausted.
    """
    m = as_cmatrix(a)
    nrm = hs_norm(m)
    if hs_norm(m - dagger(m)) > HERM_TOL_REL * max(nrm, 1e-300):
        raise NonHermitian("matrix is not Hermitian within tolerance")
    h = (m + dagger(m)) / 2.0
    n = h.shape[0]
    v = np.eye(n, dtype=np.complex128, order="C")
    fro = hs_norm(h)
    if fro == 0.0:
        w = np.zeros(n)
        return Spectrum(w, v, 0.0)
    sweeps = jacobi_sweeps(h, v, OFF_TOL_REL * fro, max_sweeps)
    if sweeps < 0:
        raise NoConvergence(f"Jacobi did not converge in {max_sweeps} sweeps")
    w = np.real(np.diag(h)).copy()
    w, v = _canonicalize(w, v)
    cut = RANK_CUT_REL * float(np.abs(w).max())
    return Spectrum(w, np.ascontiguousarray(v), cut)


# ---------------------------------------------------------------------------
# matrix functions through the spectrum
# ---------------------------------------------------------------------------

_PSD_TAGS = {"log", "sqrt", "pinv", "power"}


def _fn_values(tag, exponent, w, mask):
    out = np.zeros(w.shape[0], dtype=np.complex128)
    ws = np.where(mask, w, 1.0)  # dummy value off support, zeroed below
    if tag == "log":
        out = np.where(mask, np.log(ws), 0.0)
    elif tag == "sqrt":
        out = np.where(mask, np.sqrt(ws), 0.0)
    elif tag == "exp":
        out = np.exp(w).astype(np.complex128)
    elif tag == "pinv":
        out = np.where(mask, 1.0 / ws, 0.0)
    elif tag == "power":
        out = np.where(mask, np.power(ws.astype(np.complex128), exponent), 0.0)
    else:
        raise BekbenchError(f"unknown spectral function tag {tag!r}")
    return out


def spectral_fn(a, fn, on_support: bool = False, *, _spec: Spectrum | None = None):
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    ``fn`` is one of ``"log"``, ``"sqrt"``, ``"exp"``, ``"pinv"`` or a pair
    ``("power", z)`` with ``z`` possibly complex (``("power", 1j*t)`` yields
    the unitary one-parameter group of a positive matrix).

    Tags other than ``exp`` require a positive semidefinite input
    (NegativeSpectrum otherwise). Functions unbounded or discontinuous at 0
    (log, pinv, power with Re z <= 0 or nonreal z) require ``on_support=True``
    when the matrix is singular; eigenvalues under the rank cut then map to 0.
    """
    if isinstance(fn, tuple):
        tag, exponent = fn
    else:
        tag, exponent = fn, None
    spec = _spec if _spec is not None else herm_eig(a)
    w, v = spec.eigenvalues, spec.eigenvectors
    if tag in _PSD_TAGS:
        if w.shape[0] and w[0] < -spec.tolerance:
            raise NegativeSpectrum(
                f"matrix has negative eigenvalue {w[0]:.3e} beyond the rank cut"
            )
        w = np.maximum(w, 0.0)
    mask = w > spec.tolerance
    if tag == "exp":
        mask = np.ones_like(mask)
    singular = not mask.all()
    needs_support = tag in ("log", "pinv") or (
        tag == "power"
        and exponent != 0
        and (complex(exponent).real <= 0 or complex(exponent).imag != 0)
    )
    if singular and needs_support and not on_support:
        raise SingularWithoutSupport(
            f"{tag} of a singular matrix requires on_support=True"
        )
    fw = _fn_values(tag, exponent, w, mask)
    out = (v * fw) @ dagger(v)
    if np.abs(fw.imag).max(initial=0.0) == 0.0:
        out = (out + dagger(out)) / 2.0
    return out


def mat_log(a, on_support=False):
    return spectral_fn(a, "log", on_support)


def mat_sqrt(a):
    return spectral_fn(a, "sqrt")


def mat_exp(a):
    return spectral_fn(a, "exp")


def mat_pinv(a, on_support=True):
    return spectral_fn(a, "pinv", on_support)


def mat_power(a, z, on_support=False):
    return spectral_fn(a, ("power", z), on_support)


def frechet_spectral(a, h, fn_vals, dfn_vals):
    """Frechet derivative of a spectral function at Hermitian ``a``.

    ``fn_vals`` and ``dfn_vals`` map an eigenvalue array to f and f' values.
    Uses first divided differences, with f' at the midpoint on near-degenerate
    pairs. The returned map H -> V (Gamma o (V* H V)) V* is symmetric for the
    trace pairing, which the optimizers rely on.
    """
    spec = herm_eig(a)
    w, v = spec.eigenvalues, spec.eigenvectors
    n = w.shape[0]
    fw = fn_vals(w)
    gamma = np.empty((n, n), dtype=np.complex128)
    scale = max(float(np.abs(w).max()), 1e-300)
    for i in range(n):
        for j in range(n):
            dw = w[i] - w[j]
            if abs(dw) > 1e-9 * scale:
                gamma[i, j] = (fw[i] - fw[j]) / dw
            else:
                gamma[i, j] = dfn_vals(np.array([(w[i] + w[j]) / 2.0]))[0]
    inner = dagger(v) @ h @ v
    return v @ (gamma * inner) @ dagger(v)


# ---------------------------------------------------------------------------
# orthonormalization helpers
# ---------------------------------------------------------------------------


def orthonormalize_columns(vectors: np.ndarray, tol_rel: float = RANK_CUT_REL):
    """Modified Gram-Schmidt with reorthogonalization over the columns.

    Returns (basis, kept_indices); the acceptance cut is relative to the
    largest input column norm, squared to mirror an eigenvalue rank cut.
    """
    cols = [np.asarray(vectors[:, j], dtype=np.complex128) for j in range(vectors.shape[1])]
    if not cols:
        return np.zeros((vectors.shape[0], 0), dtype=np.complex128), []
    scale = max(np.linalg.norm(c) for c in cols)
    if scale == 0.0:
        return np.zeros((vectors.shape[0], 0), dtype=np.complex128), []
    cut = np.sqrt(tol_rel) * scale
    basis, kept = [], []
    for j, c in enumerate(cols):
        u = c.copy()
        for b in basis:
            u -= b * (b.conj() @ u)
        for b in basis:
            u -= b * (b.conj() @ u)
        nrm = np.linalg.norm(u)
        if nrm > cut:
            basis.append(u / nrm)
            kept.append(j)
    if basis:
        return np.column_stack(basis), kept
    return np.zeros((vectors.shape[0], 0), dtype=np.complex128), kept


def hs_orthonormalize(mats, tol_rel: float = RANK_CUT_REL):
    """Gram-Schmidt in the Hilbert-Schmidt geometry over a list of matrices."""
    if not mats:
        return []
    d = mats[0].shape[0]
    stacked = np.column_stack([vec_r(m) for m in mats])
    basis, _ = orthonormalize_columns(stacked, tol_rel)
    return [unvec_r(basis[:, j], d, mats[0].shape[1]) for j in range(basis.shape[1])]


def gram_orthonormalize(gram: np.ndarray, tol_rel: float = RANK_CUT_REL):
    """Orthonormalize abstract vectors known only through their Gram matrix.

    Returns coefficient rows C (shape rank x count) with C G C^dagger = 1.
    Uses the same two-pass Gram-Schmidt as above, in index order, with the
    rank cut relative to the largest eigenvalue of G.
    """
    g = as_cmatrix(gram)
    k = g.shape[0]
    top = herm_eig(g).eigenvalues
    scale = float(top.max(initial=0.0))
    if scale <= 0.0:
        return np.zeros((0, k), dtype=np.complex128)
    cut2 = tol_rel * scale  # squared-norm acceptance threshold
    rows = []
    for j in range(k):
        c = np.zeros(k, dtype=np.complex128)
        c[j] = 1.0
        for r in rows:
            c = c - r * (r.conj() @ (g @ c))
        for r in rows:
            c = c - r * (r.conj() @ (g @ c))
        nrm2 = float(np.real(c.conj() @ (g @ c)))
        if nrm2 > cut2:
            rows.append(c / np.sqrt(nrm2))
    if rows:
        return np.array(rows)
    return np.zeros((0, k), dtype=np.complex128)


def solve_in_span(stack: np.ndarray, target: np.ndarray):
    """Least-squares coefficients expressing ``target`` in spanned columns.

    ``stack`` has one spanning element per column. Returns (coeffs, residual).
    """
    coeffs, *_ = np.linalg.lstsq(stack, target, rcond=None)
    residual = float(np.linalg.norm(stack @ coeffs - target))
    return coeffs, residual


# ---------------------------------------------------------------------------
# antilinear operators
# ---------------------------------------------------------------------------


class AntilinearOp:
    """Antilinear map x -> K conj(x), stored through its linear part K."""

    def __init__(self, mat: np.ndarray):
        self.mat = np.asarray(mat, dtype=np.complex128)

    def apply(self, x: np.ndarray) -> np.ndarray:
        return self.mat @ np.conj(x)

    def adjoint(self) -> "AntilinearOp":
        # (x, S y) = conj((S* x, y)) gives the transpose, not the conjugate
        # transpose, as the linear part of the adjoint.
        return AntilinearOp(self.mat.T)

    def sandwich(self, t: np.ndarray) -> np.ndarray:
        """Linear matrix of J T J for linear T."""
        return self.mat @ np.conj(t) @ np.conj(self.mat)

    def unitary_defect(self) -> float:
        k = self.mat
        return float(np.linalg.norm(dagger(k) @ k - np.eye(k.shape[0])))

    def symmetry_defect(self) -> float:
        return float(np.linalg.norm(self.mat - self.mat.T))


def antilinear_lstsq(sources: np.ndarray, images: np.ndarray):
    """Least-squares antilinear K with K conj(sources) = images columnwise.

    Returns (AntilinearOp, residual); residual measures how consistently the
    prescribed pairs define a single antilinear map.
    """
    a = np.conj(sources).T
    k_t, *_ = np.linalg.lstsq(a, images.T, rcond=None)
    k = k_t.T
    residual = float(np.linalg.norm(k @ np.conj(sources) - images))
    return AntilinearOp(k), residual


def modular_from_s(k_s: np.ndarray, *, tol: float = 1e-9):
    """Split the closure data S = K conj into Delta = S*S and J.

    Returns (delta, AntilinearOp(J)); validates that J is antiunitary and
    symmetric to ``tol`` (relative to dimension).
    """
    delta = k_s.T @ np.conj(k_s)
    delta = (delta + dagger(delta)) / 2.0
    spec = herm_eig(delta)
    if spec.eigenvalues[0] <= spec.tolerance:
        raise NegativeSpectrum("modular operator is not positive definite")
    inv_sqrt = spectral_fn(delta, ("power", -0.5), _spec=spec)
    k_j = k_s @ np.conj(inv_sqrt)
    j = AntilinearOp(k_j)
    n = k_j.shape[0]
    if j.unitary_defect() > tol * np.sqrt(n) or j.symmetry_defect() > tol * np.sqrt(n):
        raise BekbenchError("modular conjugation failed antiunitarity checks")
    return delta, j
