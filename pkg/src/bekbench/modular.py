"""Relative modular operators on the channel carrier.

Two commuting pairs live on the carrier of a full (channel, state) couple:
the right algebra R with its commutant Rc containing the left copy A of the
input algebra, and A with its commutant Ac containing R. Each pair carries a
relative modular operator built from two functionals:

    log Delta       from  omega_xi o eps   on Rc  against  omega_xi on R,
    log Delta'      from  omega_xi on A    against  omega_xi o eps' on Ac,

where eps: Rc -> A and eps': Ac -> R are the minimal conditional
expectations. The two constructions use disjoint data (different
expectations, different block frames), yet must satisfy

    log Delta' = log Delta + h * 1,       h = log(minimal index),

exactly; the residual of that identity is the pair's consistency check and
the measured mean of log Delta' - log Delta in the unit class is reported
alongside the exact h.

Block recipe: a functional phi on a block-structured algebra P acts through
slot-1 densities rho_i (phi(x) = sum Tr(rho_i X_i)), and a functional psi on
P' through slot-2 densities tau_i over the same isometries; the derivative is
log Delta = sum_i U_i (log rho_i (x) 1 - 1 (x) log tau_i) U_i^dagger. All
densities must be positive definite, otherwise the state was not faithful.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .algebras import (
    ConditionalExpectation,
    Functional,
    MatrixAlgebra,
    commutant,
    inclusion_matrix,
    minimal_expectation,
)
from .bimodules import ChannelBimodule
from .channels import QuantumChannel
from .errors import (
    CommutantMismatch,
    InvariantViolation,
    NotFaithful,
)
from .linalg import RANK_CUT_REL, dagger, herm_eig, hs_norm

CHECK_TOL = 1e-8


def slot1_density(structure, ambient, i: int) -> np.ndarray:
    """Density pairing the factor component: Tr(W U(X (x) 1)U^+) = Tr(rho X)."""
    n, m = structure.blocks[i]
    u = structure.isometries[i]
    y = (dagger(u) @ ambient @ u).reshape(n, m, n, m)
    return np.einsum("akbk->ab", y)


def slot2_density(structure, ambient, i: int) -> np.ndarray:
    """Density pairing the multiplicity slot: Tr(W U(1 (x) Y)U^+) = Tr(tau Y)."""
    n, m = structure.blocks[i]
    u = structure.isometries[i]
    y = (dagger(u) @ ambient @ u).reshape(n, m, n, m)
    return np.einsum("kakb->ab", y)


def _pd_log(mat: np.ndarray, family: str) -> np.ndarray:
    spec = herm_eig((mat + dagger(mat)) / 2.0)
    w = spec.eigenvalues
    top = float(w.max(initial=0.0))
    if top <= 0.0 or float(w.min()) < RANK_CUT_REL * top:
        raise NotFaithful(f"{family} density is not positive definite")
    logs = (spec.eigenvectors * np.log(w)) @ dagger(spec.eigenvectors)
    return (logs + dagger(logs)) / 2.0


def spatial_log(structure, num_densities, den_densities) -> np.ndarray:
    """log of the derivative of (slot-1 functional) against (slot-2 functional)."""
    dim = structure.dim
    out = np.zeros((dim, dim), dtype=np.complex128)
    for i, (n, m) in enumerate(structure.blocks):
        u = structure.isometries[i]
        lr = _pd_log(num_densities[i], "numerator")
        lt = _pd_log(den_densities[i], "denominator")
        inner = np.kron(lr, np.eye(m)) - np.kron(np.eye(n), lt)
        out += u @ inner @ dagger(u)
    return (out + dagger(out)) / 2.0


@dataclass
class ModularPair:
    bimodule: ChannelBimodule
    index: float
    h: float                      # log index, the exact offset
    h_measured: float             # mean of log Delta' - log Delta in the unit class
    log_delta: np.ndarray
    log_delta_prime: np.ndarray
    check_residual: float
    left: MatrixAlgebra           # A on the carrier
    right: MatrixAlgebra          # R on the carrier
    left_commutant: MatrixAlgebra   # Ac
    right_commutant: MatrixAlgebra  # Rc
    eps: ConditionalExpectation     # Rc -> A
    eps_prime: ConditionalExpectation  # Ac -> R
    rho_left: list                # slot-1 densities of omega_xi over A's frame
    tau_left: list                # slot-2 densities of omega_xi o eps' over A's frame


def _flow_preserves(log_d, algebra, times, tol):
    spec = herm_eig(log_d)
    for t in times:
        phases = np.exp(1j * t * spec.eigenvalues)
        u_t = (spec.eigenvectors * phases) @ dagger(spec.eigenvectors)
        for g in algebra.gen_set:
            moved = u_t @ g @ dagger(u_t)
            resid = algebra.membership_residual(moved)
            if resid > tol * max(hs_norm(g), 1.0):
                raise CommutantMismatch(
                    f"modular flow leaves the algebra at t={t} "
                    f"(residual {resid:.2e})"
                )


def modular_pair(bim: ChannelBimodule, *, tol: float = CHECK_TOL,
                 validate: bool = True) -> ModularPair:
    """Both relative modular operators of a carrier, cross-checked."""
    a_alg = bim.left_algebra()
    r_alg = bim.right_algebra()
    rc_alg = commutant(r_alg)
    ac_alg = commutant(a_alg)

    ind_e, eps = minimal_expectation(a_alg, rc_alg)
    ind_p, eps_p = minimal_expectation(r_alg, ac_alg)
    if abs(ind_e - ind_p) > 1e-6 * (1.0 + abs(ind_e)):
        raise InvariantViolation(
            f"the two minimal indices disagree: {ind_e} vs {ind_p}"
        )
    index = ind_e
    h = math.log(index)

    xi = bim.xi
    w_xi = np.outer(xi, xi.conj())

    # pair (Rc, R): numerator omega_xi o eps, denominator omega_xi
    rc_s = rc_alg.structure
    rho_rc = eps.dual_factor_data(w_xi)
    rho_rc = [(x + dagger(x)) / 2.0 for x in rho_rc]
    tau_r = [slot2_density(rc_s, w_xi, i) for i in range(len(rc_s.blocks))]
    log_delta = spatial_log(rc_s, rho_rc, tau_r)

    # pair (A, Ac): numerator omega_xi, denominator omega_xi o eps'
    a_s = a_alg.structure
    rho_a = [slot1_density(a_s, w_xi, i) for i in range(len(a_s.blocks))]
    d_psi = eps_p.trace_adjoint(w_xi)
    d_psi = (d_psi + dagger(d_psi)) / 2.0
    tau_ac = [slot2_density(a_s, d_psi, i) for i in range(len(a_s.blocks))]
    log_delta_prime = spatial_log(a_s, rho_a, tau_ac)

    scale = max(hs_norm(log_delta), hs_norm(log_delta_prime), 1.0)
    gap = log_delta_prime - log_delta - h * np.eye(bim.carrier_dim)
    check_residual = hs_norm(gap) / scale
    if check_residual > tol:
        raise InvariantViolation(
            f"log Delta' - log Delta is not the index constant "
            f"(relative residual {check_residual:.2e})"
        )
    h_measured = float(np.real(
        xi.conj() @ ((log_delta_prime - log_delta) @ xi)
    ))

    if validate:
        times = (0.3, 1.0)
        _flow_preserves(log_delta, rc_alg, times, tol)
        _flow_preserves(log_delta, r_alg, times, tol)
        _flow_preserves(log_delta_prime, a_alg, times, tol)
        _flow_preserves(log_delta_prime, ac_alg, times, tol)

    return ModularPair(
        bimodule=bim, index=index, h=h, h_measured=h_measured,
        log_delta=log_delta, log_delta_prime=log_delta_prime,
        check_residual=check_residual,
        left=a_alg, right=r_alg,
        left_commutant=ac_alg, right_commutant=rc_alg,
        eps=eps, eps_prime=eps_p,
        rho_left=rho_a, tau_left=tau_ac,
    )


@dataclass
class CondEntropy:
    index: float
    value: float                  # log of the index


def conditional_entropy(alpha: QuantumChannel, omega: Functional,
                        *, bimodule: ChannelBimodule | None = None) -> CondEntropy:
    """Entropy of the channel relative to the state: log of the minimal index
    of the left copy of the input algebra inside the right commutant.

    The transposed inclusion (right algebra inside the left commutant) must
    give the same index; disagreement is an internal inconsistency.
    """
    bim = bimodule if bimodule is not None else ChannelBimodule(alpha, omega)
    a_alg = bim.left_algebra()
    r_alg = bim.right_algebra()
    rc_alg = commutant(r_alg)
    ac_alg = commutant(a_alg)
    lam1 = inclusion_matrix(a_alg, rc_alg)
    lam2 = inclusion_matrix(r_alg, ac_alg)
    if abs(lam1.norm_squared - lam2.norm_squared) > 1e-8 * (1.0 + lam1.norm_squared):
        raise InvariantViolation(
            "inclusion index differs between the two commutant pairs"
        )
    index = float(lam1.norm_squared)
    return CondEntropy(index=index, value=math.log(index))
