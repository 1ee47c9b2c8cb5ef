import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bekbench._backend import backend_name, jacobi_sweeps
from bekbench import _kernels_py
from bekbench.errors import NegativeSpectrum, NonHermitian, SingularWithoutSupport
from bekbench.linalg import (
    AntilinearOp,
    antilinear_lstsq,
    dagger,
    frechet_spectral,
    gram_orthonormalize,
    herm_eig,
    hs_inner,
    hs_norm,
    hs_orthonormalize,
    mat_exp,
    mat_log,
    mat_pinv,
    mat_power,
    mat_sqrt,
    modular_from_s,
    orthonormalize_columns,
    solve_in_span,
    unvec_r,
    vec_r,
)
from conftest import haar_unitary_np, np_expm, np_logm, random_hermitian_np


def test_backend_is_reported():
    assert backend_name() in ("c", "python")


def test_kernel_backends_agree(rng):
    # compiled kernel and the reference implementation must land on the
    # same spectra for the same input
    for d in (3, 6, 9):
        a = random_hermitian_np(rng, d)
        a1 = a.copy()
        v1 = np.eye(d, dtype=np.complex128)
        s1 = _kernels_py.jacobi_sweeps(a1, v1, 1e-13, 60)
        a2 = a.copy()
        v2 = np.eye(d, dtype=np.complex128)
        s2 = jacobi_sweeps(a2, v2, 1e-13, 60)
        assert s1 >= 0 and s2 >= 0
        assert np.allclose(np.sort(np.diagonal(a1).real),
                           np.sort(np.diagonal(a2).real), atol=1e-11)


def test_herm_eig_matches_numpy(rng):
    for d in (2, 5, 8):
        a = random_hermitian_np(rng, d)
        spec = herm_eig(a)
        assert np.allclose(spec.eigenvalues, np.linalg.eigvalsh(a), atol=1e-10)
        assert hs_norm(spec.reconstruct() - a) < 1e-10
        v = spec.eigenvectors
        assert hs_norm(dagger(v) @ v - np.eye(d)) < 1e-10


def test_herm_eig_is_deterministic(rng):
    a = random_hermitian_np(rng, 6)
    s1 = herm_eig(a)
    s2 = herm_eig(a.copy())
    assert np.array_equal(s1.eigenvalues, s2.eigenvalues)
    assert np.array_equal(s1.eigenvectors, s2.eigenvectors)


def test_herm_eig_degenerate_spectrum(rng):
    # projector with a 3-fold eigenvalue: reconstruction must still be exact
    u = haar_unitary_np(rng, 5)
    p = u @ np.diag([1.0, 1.0, 1.0, 0.0, 0.0]) @ dagger(u)
    spec = herm_eig(p)
    assert hs_norm(spec.reconstruct() - p) < 1e-10
    assert spec.rank() == 3


def test_herm_eig_rejects_non_hermitian():
    with pytest.raises(NonHermitian):
        herm_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))


def test_spectral_functions_match_numpy(rng):
    a = random_hermitian_np(rng, 5)
    p = a @ dagger(a) + 0.3 * np.eye(5)
    assert hs_norm(mat_log(p) - np_logm(p)) < 1e-10
    assert hs_norm(mat_exp(a) - np_expm(a)) < 1e-9
    assert hs_norm(mat_sqrt(p) @ mat_sqrt(p) - p) < 1e-10
    assert hs_norm(mat_pinv(p) - np.linalg.pinv(p)) < 1e-10


def test_mat_power(rng):
    a = random_hermitian_np(rng, 4)
    p = a @ dagger(a) + 0.2 * np.eye(4)
    assert hs_norm(mat_power(p, 0.5) - mat_sqrt(p)) < 1e-10
    u = mat_power(p, 0.7j)
    # imaginary powers of a positive matrix are unitary
    assert hs_norm(dagger(u) @ u - np.eye(4)) < 1e-10


def test_psd_functions_reject_negative_spectrum():
    with pytest.raises(NegativeSpectrum):
        mat_sqrt(np.diag([1.0, -0.5]))


def test_log_of_singular_requires_support_flag():
    p = np.diag([1.0, 0.0]).astype(np.complex128)
    with pytest.raises(SingularWithoutSupport):
        mat_log(p)
    on_supp = mat_log(p, on_support=True)
    assert hs_norm(on_supp) < 1e-12


def test_support_projector(rng):
    u = haar_unitary_np(rng, 4)
    p = u @ np.diag([0.5, 0.3, 0.0, 0.0]) @ dagger(u)
    p = (p + dagger(p)) / 2
    spec = herm_eig(p)
    assert spec.rank() == 2
    proj = spec.support_projector()
    assert hs_norm(proj @ p - p) < 1e-12
    assert hs_norm(proj @ proj - proj) < 1e-12


def test_frechet_matches_finite_difference(rng):
    a = random_hermitian_np(rng, 4)
    p = a @ dagger(a) + 0.5 * np.eye(4)
    h = random_hermitian_np(rng, 4)
    got = frechet_spectral(p, h, np.log, lambda w: 1.0 / w)
    eps = 1e-6
    fd = (np_logm(p + eps * h) - np_logm(p - eps * h)) / (2 * eps)
    assert hs_norm(got - fd) < 1e-5


@settings(max_examples=25, deadline=None)
@given(st.integers(min_value=1, max_value=4), st.integers(min_value=1, max_value=4))
def test_vec_r_kron_identity(n, m):
    # row-major vectorization: (A kron B) vec(X) = vec(A X B^T)
    rng = np.random.default_rng(n * 17 + m)
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    b = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    x = rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))
    lhs = np.kron(a, b) @ vec_r(x)
    rhs = vec_r(a @ x @ b.T)
    assert np.linalg.norm(lhs - rhs) < 1e-10
    assert hs_norm(unvec_r(vec_r(x), n, m) - x) < 1e-14


def test_hs_geometry(rng):
    a = random_hermitian_np(rng, 3)
    b = random_hermitian_np(rng, 3)
    assert abs(hs_inner(a, b) - np.trace(dagger(a) @ b)) < 1e-12
    assert abs(hs_norm(a) - np.linalg.norm(a)) < 1e-12


def test_orthonormalize_columns_drops_dependent(rng):
    cols = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
    stack = np.column_stack([cols, cols[:, 0] + cols[:, 1]])
    basis, kept = orthonormalize_columns(stack)
    assert basis.shape[1] == 3
    assert kept == [0, 1, 2]
    assert hs_norm(dagger(basis) @ basis - np.eye(3)) < 1e-10


def test_hs_orthonormalize(rng):
    mats = [random_hermitian_np(rng, 3) for _ in range(4)]
    mats.append(mats[0] + 2.0 * mats[1])
    basis = hs_orthonormalize(mats)
    assert len(basis) == 4
    for i, x in enumerate(basis):
        for j, y in enumerate(basis):
            want = 1.0 if i == j else 0.0
            assert abs(hs_inner(x, y) - want) < 1e-10


def test_gram_orthonormalize_property(rng):
    v = rng.standard_normal((5, 3)) + 1j * rng.standard_normal((5, 3))
    g = dagger(v) @ v
    rows = gram_orthonormalize(g)
    assert rows.shape[0] == 3
    # rows combine the abstract family into an orthonormal one
    assert hs_norm(rows.conj() @ g @ rows.T - np.eye(3)) < 1e-9


def test_gram_orthonormalize_rank_deficient(rng):
    v = rng.standard_normal((5, 2)) + 1j * rng.standard_normal((5, 2))
    v = np.column_stack([v, v[:, 0] - v[:, 1]])
    g = dagger(v) @ v
    rows = gram_orthonormalize(g)
    assert rows.shape == (2, 3)
    assert hs_norm(rows.conj() @ g @ rows.T - np.eye(2)) < 1e-9


def test_solve_in_span(rng):
    mats = [random_hermitian_np(rng, 3) for _ in range(4)]
    stack = np.column_stack([vec_r(m) for m in mats])
    coeffs = rng.standard_normal(4)
    target = stack @ coeffs
    got, resid = solve_in_span(stack, target)
    assert resid < 1e-10
    assert np.linalg.norm(stack @ got - target) < 1e-10
    outside = vec_r(random_hermitian_np(rng, 3))
    _, resid2 = solve_in_span(stack[:, :1], outside)
    assert resid2 > 1e-3


def test_antilinear_op(rng):
    d = 3
    mat = haar_unitary_np(rng, d)
    op = AntilinearOp(mat)
    x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    assert np.linalg.norm(op.apply(x) - mat @ x.conj()) < 1e-12
    t = random_hermitian_np(rng, d)
    # J T J for antilinear J with linear part K is K conj(T) conj(K)
    assert hs_norm(op.sandwich(t) - mat @ t.conj() @ mat.conj()) < 1e-12
    assert op.unitary_defect() < 1e-12
    y = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    # antilinear adjoint pairing <Sx, y> = <S*y, x>
    lhs = np.vdot(op.apply(x), y)
    rhs = np.vdot(op.adjoint().apply(y), x)
    assert abs(lhs - rhs) < 1e-12


def test_antilinear_lstsq(rng):
    d = 3
    k = haar_unitary_np(rng, d)
    sources = rng.standard_normal((d, 5)) + 1j * rng.standard_normal((d, 5))
    images = k @ sources.conj()
    op, resid = antilinear_lstsq(sources, images)
    assert resid < 1e-10
    assert hs_norm(op.mat - k) < 1e-10


def test_modular_from_s():
    # closure of x Omega -> x* Omega for the full algebra in its GNS space
    # with Omega = rho^(1/2):  S(A) = rho^(-1/2) A* rho^(1/2), so the
    # modular operator must act as A -> rho A rho^(-1)
    d = 3
    w = np.array([0.5, 0.3, 0.2])
    half = np.diag(np.sqrt(w)).astype(np.complex128)
    inv_half = np.diag(1.0 / np.sqrt(w)).astype(np.complex128)
    perm = np.zeros((d * d, d * d), dtype=np.complex128)
    for i in range(d):
        for j in range(d):
            perm[i * d + j, j * d + i] = 1.0
    k_s = np.kron(inv_half, half) @ perm
    delta, j_op = modular_from_s(k_s)
    expect = np.kron(np.diag(w), np.diag(1.0 / w))
    assert hs_norm(delta - expect) < 1e-9
    assert j_op.unitary_defect() < 1e-9
    assert j_op.symmetry_defect() < 1e-9
    # for this standard form J is plain adjoint, linear part the swap
    assert hs_norm(j_op.mat - perm) < 1e-9
