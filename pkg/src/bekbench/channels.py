"""Unital completely positive maps between matrix algebras.

Channels act in the Heisenberg picture: alpha maps the input-side algebra N
into the output-side algebra M, is unital, and is completely positive. The
representation is a coefficient matrix over the Hilbert-Schmidt orthonormal
bases of the two spans, so composition, adjoints and Choi positivity checks
are all small dense linear algebra.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .algebras import Functional, MatrixAlgebra
from .errors import (
    DimensionMismatch,
    NotAChannel,
    NotASubalgebra,
    NotFaithful,
)
from .linalg import dagger, herm_eig, hs_norm, mat_pinv, mat_sqrt, unvec_r, vec_r

CHANNEL_TOL = 1e-9


def tensor_algebra(a: MatrixAlgebra, b: MatrixAlgebra) -> MatrixAlgebra:
    """Spatial tensor product on C^{da*db} (Kronecker of the spans)."""
    if a.is_full and b.is_full:
        return MatrixAlgebra.full(a.dim * b.dim)
    mats = [np.kron(x, y) for x in a.basis for y in b.basis]
    gens = [np.kron(x, np.eye(b.dim)) for x in a.gen_set]
    gens += [np.kron(np.eye(a.dim), y) for y in b.gen_set]
    return MatrixAlgebra.from_span(mats, gen_set=gens)


class QuantumChannel:
    """Unital completely positive map alpha: N -> M (Heisenberg picture)."""

    def __init__(self, domain: MatrixAlgebra, codomain: MatrixAlgebra, matrix,
                 *, check: bool = True):
        self.domain = domain
        self.codomain = codomain
        self.matrix = np.asarray(matrix, dtype=np.complex128)
        if self.matrix.shape != (codomain.span_dim, domain.span_dim):
            raise DimensionMismatch("channel matrix does not match the bases")
        if check:
            self.validate()

    # -- constructors --------------------------------------------------------

    @classmethod
    def from_map(cls, domain, codomain, fn, *, check: bool = True):
        cols = []
        for b in domain.basis:
            img = np.asarray(fn(b), dtype=np.complex128)
            resid = codomain.membership_residual(img)
            if resid > CHANNEL_TOL * max(hs_norm(img), 1e-300):
                raise NotAChannel("image leaves the codomain span")
            cols.append(codomain.coefficients(img))
        return cls(domain, codomain, np.column_stack(cols), check=check)

    @classmethod
    def from_kraus(cls, domain, codomain, kraus, *, check: bool = True):
        """alpha(x) = sum_a V_a x V_a^dagger with sum_a V_a V_a^dagger = 1."""
        vs = [np.asarray(v, dtype=np.complex128) for v in kraus]
        for v in vs:
            if v.shape != (codomain.dim, domain.dim):
                raise DimensionMismatch("Kraus operator has the wrong shape")
        return cls.from_map(
            domain, codomain,
            lambda x: sum(v @ x @ dagger(v) for v in vs),
            check=check,
        )

    @classmethod
    def from_inclusion(cls, small, big, *, check: bool = True):
        """The inclusion map of a subalgebra, as a channel."""
        if small.dim != big.dim:
            raise DimensionMismatch("inclusion channels need a common ambient")
        return cls.from_map(small, big, lambda x: x, check=check)

    @classmethod
    def from_expectation(cls, expectation, *, check: bool = True):
        """A conditional expectation big -> small, as a channel."""
        return cls.from_map(
            expectation.big, expectation.small, expectation, check=check
        )

    @classmethod
    def from_unitary(cls, domain, codomain, u, *, check: bool = True):
        u = np.asarray(u, dtype=np.complex128)
        return cls.from_map(domain, codomain, lambda x: u @ x @ dagger(u),
                            check=check)

    @classmethod
    def unit_channel(cls, codomain, *, check: bool = True):
        """The unit map from the scalars: lambda -> lambda * 1."""
        domain = MatrixAlgebra.scalars(1)
        eye = np.eye(codomain.dim, dtype=np.complex128)
        return cls.from_map(domain, codomain, lambda x: complex(x[0, 0]) * eye,
                            check=check)

    @classmethod
    def identity(cls, algebra, *, check: bool = False):
        return cls(algebra, algebra,
                   np.eye(algebra.span_dim, dtype=np.complex128), check=check)

    # -- the map -------------------------------------------------------------

    def __call__(self, x) -> np.ndarray:
        return self.codomain.from_coefficients(
            self.matrix @ self.domain.coefficients(x)
        )

    def compose(self, other: "QuantumChannel") -> "QuantumChannel":
        """self after other (self.compose(other) = self o other)."""
        if other.codomain.span_dim != self.domain.span_dim:
            raise DimensionMismatch("channels do not compose")
        return QuantumChannel(
            other.domain, self.codomain, self.matrix @ other.matrix, check=False
        )

    def tensor(self, other: "QuantumChannel") -> "QuantumChannel":
        dom = tensor_algebra(self.domain, other.domain)
        cod = tensor_algebra(self.codomain, other.codomain)

        def fn(x):
            # expand on the product basis of the two factors
            out = np.zeros((cod.dim, cod.dim), dtype=np.complex128)
            for a in self.domain.basis:
                for b in other.domain.basis:
                    coeff = np.trace(dagger(np.kron(a, b)) @ x)
                    if abs(coeff) > 1e-15:
                        out += coeff * np.kron(self(a), other(b))
            return out

        return QuantumChannel.from_map(dom, cod, fn, check=False)

    def adjoint_matrix(self) -> np.ndarray:
        """Coefficient matrix of the trace-pairing adjoint alpha^t: M -> N.

        Defined by Tr_N(alpha^t(m) n) = Tr_M(m alpha(n)); solved through the
        nondegenerate bilinear Gram Tr(b_k b_l) of the domain span.
        """
        cached = getattr(self, "_adjoint_matrix", None)
        if cached is not None:
            return cached
        nb = self.domain.basis
        mb = self.codomain.basis
        k = len(nb)
        gram = np.empty((k, k), dtype=np.complex128)
        for a in range(k):
            for b in range(k):
                gram[a, b] = np.trace(nb[a] @ nb[b])
        imgs = [self(b) for b in nb]
        cols = []
        for c in mb:
            t = np.array([np.trace(c @ img) for img in imgs])
            cols.append(np.linalg.solve(gram, t))
        coeff_in_plain = np.column_stack(cols)  # expansion over nb, not HS-dual
        # convert "sum_j c_j b_j" coefficients to HS coefficients (identical
        # here because nb is HS-orthonormal and expansion is linear)
        self._adjoint_matrix = coeff_in_plain
        return coeff_in_plain

    def adjoint(self) -> "QuantumChannel":
        """Trace-pairing adjoint as a map (not a channel in general)."""
        return QuantumChannel(
            self.codomain, self.domain, self.adjoint_matrix(), check=False
        )

    def apply_adjoint(self, m) -> np.ndarray:
        return self.domain.from_coefficients(
            self.adjoint_matrix() @ self.codomain.coefficients(m)
        )

    # -- validation ----------------------------------------------------------

    def unitality_defect(self) -> float:
        eye_n = np.eye(self.domain.dim, dtype=np.complex128)
        eye_m = np.eye(self.codomain.dim, dtype=np.complex128)
        return hs_norm(self(eye_n) - eye_m) / np.sqrt(self.codomain.dim)

    def choi_matrix(self) -> np.ndarray:
        """Block operator [alpha(b_i^dagger b_j)]_{ij} over the domain basis."""
        nb = self.domain.basis
        k = len(nb)
        dm = self.codomain.dim
        choi = np.zeros((k * dm, k * dm), dtype=np.complex128)
        for i in range(k):
            for j in range(k):
                choi[i * dm : (i + 1) * dm, j * dm : (j + 1) * dm] = self(
                    dagger(nb[i]) @ nb[j]
                )
        return choi

    def cp_defect(self) -> float:
        """Most negative Choi eigenvalue, relative to the largest."""
        spec = herm_eig(self.choi_matrix())
        w = spec.eigenvalues
        scale = max(float(w[-1]), 1e-300)
        return max(0.0, -float(w[0])) / scale

    def validate(self, tol: float = CHANNEL_TOL):
        unit = self.unitality_defect()
        if unit > tol:
            raise NotAChannel(f"map is not unital (defect {unit:.3e})")
        cp = self.cp_defect()
        if cp > tol:
            raise NotAChannel(f"map is not completely positive (CP defect {cp:.3e})")

    def is_faithful(self, tol: float = 1e-10) -> bool:
        """Whether alpha(n*n) = 0 forces n = 0 (positivity-improving dual)."""
        eye_m = np.eye(self.codomain.dim, dtype=np.complex128)
        probe = self.apply_adjoint(eye_m)
        probe = (probe + dagger(probe)) / 2.0
        f = Functional(self.domain, self.domain.hs_project(probe))
        return f.is_faithful(tol)

    def choi_distance(self, other: "QuantumChannel") -> float:
        """HS distance of Choi blocks; zero iff the maps agree on the span."""
        if self.domain.span_dim != other.domain.span_dim:
            raise DimensionMismatch("channels have different domains")
        return hs_norm(self.choi_matrix() - other.choi_matrix())

    def __repr__(self):
        return (f"QuantumChannel({self.domain.dim}->{self.codomain.dim}, "
                f"span {self.domain.span_dim}->{self.codomain.span_dim})")


def output_state(alpha: QuantumChannel, omega: Functional) -> Functional:
    """omega o alpha as a functional on the domain algebra."""
    if omega.algebra is not alpha.codomain and (
        omega.algebra.span_dim != alpha.codomain.span_dim
    ):
        raise NotASubalgebra("state does not live on the channel codomain")
    density = alpha.apply_adjoint(omega.density)
    density = (density + dagger(density)) / 2.0
    return Functional(alpha.domain, alpha.domain.hs_project(density))


def transpose_channel(alpha: QuantumChannel, omega: Functional) -> QuantumChannel:
    """The state-dual (transpose) channel alpha': M -> N.

    alpha'(m) = S^{-1/2} alpha^t(D^{1/2} m D^{1/2}) S^{-1/2}, where D is the
    density of the faithful output-side state omega and S = alpha^t(D) is the
    density of omega o alpha. alpha' is unital and completely positive, and
    (omega o alpha) o alpha' = omega identically.
    """
    if not omega.is_faithful():
        raise NotFaithful("transpose channel needs a faithful state")
    d_m = omega.density
    s_n = output_state(alpha, omega)
    if not s_n.is_faithful():
        raise NotFaithful("induced input-side state is not faithful")
    d_half = mat_sqrt(d_m)
    s_invhalf = mat_pinv(mat_sqrt(s_n.density), on_support=False)

    def fn(m):
        return s_invhalf @ alpha.apply_adjoint(d_half @ m @ d_half) @ s_invhalf

    return QuantumChannel.from_map(alpha.codomain, alpha.domain, fn)
