"""The two-sided representation carried by a channel and a faithful state.

Given a unital CP map alpha: N -> M and a faithful state omega on M, the
formal tensors n (x) m generate a Hilbert space with inner product

    <b_i (x) c_j, b_i' (x) c_j'> = Tr( D^{1/2} alpha(b_i^* b_i') D^{1/2}
                                       c_j' c_j^* ),

on which N acts from the left through alpha's twist and M from the right.
Both actions are *-preserving, the class of 1 (x) 1 is a unit vector xi, and
(xi, l(n) xi) = omega(alpha(n)), (xi, r(m) xi) = omega(m). The carrier is cut
out of the formal span by Gram-matrix orthonormalization, so its dimension is
exactly the rank of the form.

The original channel can be reconstructed from the carrier alone through the
modular conjugation of the right action, and the state-dual channel through
the modular conjugation of the left action; agreement of those
reconstructions with the direct formulas is one of the package invariants.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .algebras import MatrixAlgebra, Functional, _tomita_conjugation
from .channels import QuantumChannel, output_state, transpose_channel
from .errors import (
    InvariantViolation,
    NotFaithful,
    PathsDisagree,
)
from .linalg import (
    dagger,
    gram_orthonormalize,
    hs_norm,
    mat_sqrt,
    orthonormalize_columns,
    solve_in_span,
    vec_r,
)

PATH_TOL = 1e-9


class ChannelBimodule:
    """Carrier space of a channel with left N-action and right M-action."""

    def __init__(self, alpha: QuantumChannel, omega: Functional):
        self.alpha = alpha
        if not omega.is_faithful():
            raise NotFaithful("bimodule construction needs a faithful state")
        self.omega = omega.normalized()
        self.omega_out = output_state(alpha, self.omega)
        if not self.omega_out.is_faithful():
            raise NotFaithful("output state is not faithful")
        dom, cod = alpha.domain, alpha.codomain
        nb, mb = dom.basis, cod.basis
        kn, km = len(nb), len(mb)
        d_half = mat_sqrt(self.omega.density)
        mstack = np.array(mb)

        gram = np.zeros((kn * km, kn * km), dtype=np.complex128)
        for i in range(kn):
            for i2 in range(kn):
                t = d_half @ alpha(dagger(nb[i]) @ nb[i2]) @ d_half
                # block[j, j2] = Tr(t c_{j2} c_j^dagger)
                block = np.einsum(
                    "ab,qbc,pac->pq", t, mstack, mstack.conj(), optimize=True
                )
                gram[i * km : (i + 1) * km, i2 * km : (i2 + 1) * km] = block
        gram = (gram + dagger(gram)) / 2.0

        rows = gram_orthonormalize(gram)
        self._coords = rows.conj() @ gram       # (r, K): formal -> carrier
        self._embed = rows.T                    # (K, r): carrier basis in formal coords
        self.carrier_dim = rows.shape[0]
        self._kn, self._km = kn, km
        self._nb, self._mb = nb, mb

        w0 = np.zeros(kn * km, dtype=np.complex128)
        w0[0] = np.sqrt(dom.dim * cod.dim)      # 1 (x) 1 over identity-first bases
        self.xi = self._coords @ w0

        self._validate()

    # -- actions -------------------------------------------------------------

    def left(self, a: np.ndarray) -> np.ndarray:
        """Carrier matrix of the left action of a (an element of N's span)."""
        la = np.column_stack(
            [self.alpha.domain.coefficients(np.asarray(a) @ b) for b in self._nb]
        )
        big = np.kron(la, np.eye(self._km))
        return self._coords @ big @ self._embed

    def right(self, m: np.ndarray) -> np.ndarray:
        """Carrier matrix of the right action of m (anti-multiplicative)."""
        rm = np.column_stack(
            [self.alpha.codomain.coefficients(c @ np.asarray(m)) for c in self._mb]
        )
        big = np.kron(np.eye(self._kn), rm)
        return self._coords @ big @ self._embed

    def left_algebra(self) -> MatrixAlgebra:
        gens = [self.left(g) for g in self.alpha.domain.gen_set]
        return MatrixAlgebra.from_span(
            [self.left(b) for b in self._nb], gen_set=gens
        )

    def right_algebra(self) -> MatrixAlgebra:
        gens = [self.right(g) for g in self.alpha.codomain.gen_set]
        return MatrixAlgebra.from_span(
            [self.right(c) for c in self._mb], gen_set=gens
        )

    # -- construction invariants ----------------------------------------------

    def _validate(self, tol: float = PATH_TOL):
        if abs(np.linalg.norm(self.xi) - 1.0) > 1e-8:
            raise InvariantViolation("unit class does not have unit norm")
        for b in self._nb:
            lhs = complex(self.xi.conj() @ (self.left(b) @ self.xi))
            rhs = self.omega.evaluate(self.alpha(b))
            if abs(lhs - rhs) > tol * max(abs(rhs), 1.0):
                raise InvariantViolation("left action does not implement the channel")
        for c in self._mb:
            lhs = complex(self.xi.conj() @ (self.right(c) @ self.xi))
            rhs = self.omega.evaluate(c)
            if abs(lhs - rhs) > tol * max(abs(rhs), 1.0):
                raise InvariantViolation("right action does not implement the state")
        for g in self.alpha.domain.gen_set:
            lg = self.left(g)
            for h in self.alpha.codomain.gen_set:
                rh = self.right(h)
                if hs_norm(lg @ rh - rh @ lg) > tol * max(
                    hs_norm(lg) * hs_norm(rh), 1e-300
                ):
                    raise InvariantViolation("left and right actions do not commute")

    # -- cyclicity of the right action ----------------------------------------

    def right_cyclic_rank(self) -> int:
        cols = np.column_stack([self.right(c) @ self.xi for c in self._mb])
        _, kept = orthonormalize_columns(cols)
        return len(kept)

    def is_right_cyclic(self) -> bool:
        return self.right_cyclic_rank() == self.carrier_dim


# ---------------------------------------------------------------------------
# reconstructions through modular conjugations
# ---------------------------------------------------------------------------


def channel_from_bimodule(bim: ChannelBimodule, tol: float = PATH_TOL) -> QuantumChannel:
    """Recover the channel from the carrier: r(alpha(n)) = J p l(n*) p J on
    the right-cyclic subspace p = [r(M) xi], with J the right modular
    conjugation. Raises PathsDisagree when the solve leaves the span."""
    cols = np.column_stack([bim.right(c) @ bim.xi for c in bim._mb])
    p_cols, _ = orthonormalize_columns(cols)
    comp_right = [dagger(p_cols) @ bim.right(c) @ p_cols for c in bim._mb]
    _, j_m = _tomita_conjugation(comp_right, dagger(p_cols) @ bim.xi)
    stack = np.column_stack([vec_r(x) for x in comp_right])

    images = []
    for b in bim._nb:
        ln_star = dagger(p_cols) @ bim.left(dagger(b)) @ p_cols
        target = j_m.sandwich(ln_star)
        coeffs, resid = solve_in_span(stack, vec_r(target))
        # scale 1: ON bases and unit xi; a zero image is legitimate
        if resid > tol * max(np.linalg.norm(target), 1.0):
            raise PathsDisagree(
                f"carrier reconstruction left the algebra (residual {resid:.2e})"
            )
        images.append(np.tensordot(coeffs, np.array(bim._mb), axes=(0, 0)))

    cod = bim.alpha.codomain
    cols_mat = np.column_stack([cod.coefficients(img) for img in images])
    return QuantumChannel(bim.alpha.domain, cod, cols_mat, check=False)


def transpose_from_bimodule(bim: ChannelBimodule, tol: float = PATH_TOL) -> QuantumChannel:
    """The state-dual channel from the carrier: l(alpha'(m)) = J q r(m*) q J
    on the left-cyclic subspace q = [l(N) xi]."""
    cols = np.column_stack([bim.left(b) @ bim.xi for b in bim._nb])
    q_cols, _ = orthonormalize_columns(cols)
    comp_left = [dagger(q_cols) @ bim.left(b) @ q_cols for b in bim._nb]
    _, j_n = _tomita_conjugation(comp_left, dagger(q_cols) @ bim.xi)
    stack = np.column_stack([vec_r(x) for x in comp_left])

    images = []
    for c in bim._mb:
        rm_star = dagger(q_cols) @ bim.right(dagger(c)) @ q_cols
        target = j_n.sandwich(rm_star)
        coeffs, resid = solve_in_span(stack, vec_r(target))
        # scale 1: ON bases and unit xi; a zero image is legitimate
        if resid > tol * max(np.linalg.norm(target), 1.0):
            raise PathsDisagree(
                f"carrier transpose left the algebra (residual {resid:.2e})"
            )
        images.append(np.tensordot(coeffs, np.array(bim._nb), axes=(0, 0)))

    dom = bim.alpha.domain
    cols_mat = np.column_stack([dom.coefficients(img) for img in images])
    return QuantumChannel(bim.alpha.codomain, dom, cols_mat, check=False)


# ---------------------------------------------------------------------------
# fullness
# ---------------------------------------------------------------------------


@dataclass
class FullnessResult:
    is_full: bool
    cyclic_rank: int
    carrier_dim: int
    roundtrip_defect: float
    transpose: QuantumChannel


def fullness(bim: ChannelBimodule, tol: float = PATH_TOL) -> FullnessResult:
    """Decide whether the state is full for the channel.

    Two conditions, both checked: the unit class must be cyclic for the right
    action, and the state-dual channel must invert the channel on its domain
    (alpha' o alpha = id). The returned defect is the Choi distance of the
    round trip from the identity.
    """
    rank = bim.right_cyclic_rank()
    tp = transpose_channel(bim.alpha, bim.omega)
    ident = QuantumChannel.identity(bim.alpha.domain, check=False)
    defect = tp.compose(bim.alpha).choi_distance(ident)
    full = (rank == bim.carrier_dim) and (defect <= tol)
    return FullnessResult(full, rank, bim.carrier_dim, defect, tp)
