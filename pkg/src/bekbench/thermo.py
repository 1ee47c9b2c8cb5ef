"""Entropy, energy and free energy of a full (channel, state) couple.

The measured quantities live on the reduced space q = [A xi], where A is the
left copy of the input algebra on the carrier. There each block of A becomes
square and two density families face each other:

    rho_k   from omega_xi restricted to A          (the input state),
    psi_k   from omega_xi o eps' compressed to q   (the dual-transported one),

with eps': Ac -> R the minimal expectation onto the right algebra. The
compression uses the block co-isometries W_k = rho_k^{-1/2} Xi_k, and psi is
normalized across blocks so it is a state. The reduced relative modular
operator is block diagonal,

    log D = sum_k  log rho_k (x) 1  -  1 (x) (log psi_k)^T,

and with h the log-index of the couple, h~ its measured value, beta > 0 the
inverse temperature and K = -(log D - h~)/beta - h/(2 beta):

    S = - (xi^, log D xi^),     E = (xi^, K xi^),
    F = -log( xi^, exp(-beta K) xi^ ) / beta,

where xi^ is the reduced vector with blocks vec(psi_k^{1/2}). Everything is
evaluated as an explicit quadratic form; the report carries the residuals of
the identities F = E - S/beta and F = h/(2 beta) as measured, together with
the margin of beta E >= S. All three identities are theorems for full
couples, so the residuals are pure numerics; the margin is h/2 up to them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotFaithful
from .linalg import RANK_CUT_REL, dagger, herm_eig, hs_norm, vec_r
from .modular import ModularPair

_PD_REL = RANK_CUT_REL


@dataclass
class ReducedBlock:
    rho: np.ndarray          # input-state density, a x a, PD
    psi: np.ndarray          # transported density, a x a, PD
    co_isometry: np.ndarray  # W = rho^{-1/2} Xi, a x b with W W^+ = 1


@dataclass
class ReducedFrame:
    blocks: list
    weight: float            # normalization mass of psi before scaling

    @property
    def dim(self) -> int:
        return sum(b.rho.shape[0] ** 2 for b in self.blocks)


def _pd_spectrum(mat: np.ndarray, family: str):
    spec = herm_eig((mat + dagger(mat)) / 2.0)
    w = spec.eigenvalues
    top = float(w.max(initial=0.0))
    if top <= 0.0 or float(w.min()) < _PD_REL * top:
        raise NotFaithful(f"{family} density is not positive definite")
    return spec


def reduced_frame(pair: ModularPair) -> ReducedFrame:
    """Square-block frame of the couple on [A xi], with psi normalized."""
    a_s = pair.left.structure
    xis = a_s.xi_blocks(pair.bimodule.xi)
    raw = []
    weight = 0.0
    for k, xi_k in enumerate(xis):
        rho = xi_k @ dagger(xi_k)
        spec = _pd_spectrum(rho, "input-side")
        inv_half = (spec.eigenvectors * (spec.eigenvalues ** -0.5)) @ dagger(
            spec.eigenvectors
        )
        w_k = inv_half @ xi_k
        a = rho.shape[0]
        if hs_norm(w_k @ dagger(w_k) - np.eye(a)) > 1e-8 * a:
            raise NotFaithful("block compression is not a co-isometry")
        tau = pair.tau_left[k]
        psi_raw = w_k @ tau.T @ dagger(w_k)
        psi_raw = (psi_raw + dagger(psi_raw)) / 2.0
        weight += float(np.real(np.trace(psi_raw)))
        raw.append((rho, psi_raw, w_k))
    blocks = []
    for rho, psi_raw, w_k in raw:
        psi = psi_raw / weight
        _pd_spectrum(psi, "transported")
        blocks.append(ReducedBlock(rho=rho, psi=psi, co_isometry=w_k))
    return ReducedFrame(blocks=blocks, weight=weight)


@dataclass
class ThermoReport:
    beta: float
    index: float
    h: float                  # log index
    h_measured: float         # carrier measurement of the same constant
    entropy: float            # S
    energy: float             # E
    free_energy: float        # F
    residual_identity: float  # |F - E + S/beta|
    residual_geometric: float  # |F - h/(2 beta)|
    bound_margin: float       # beta E - S, the bound's slack
    check_residual: float     # consistency residual of the two carrier logs

    def bound_holds(self, slack: float = 1e-9) -> bool:
        return self.bound_margin >= -slack


def thermo_report(pair: ModularPair, beta: float) -> ThermoReport:
    """Measure S, E, F at inverse temperature beta and report the identities."""
    if not beta > 0.0:
        raise ValueError("inverse temperature must be positive")
    frame = reduced_frame(pair)
    h = pair.h
    h_meas = pair.h_measured

    s_val = 0.0
    e_val = 0.0
    gibbs = 0.0
    for blk in frame.blocks:
        rho, psi = blk.rho, blk.psi
        a = rho.shape[0]
        lr = _log_of(rho)
        lp = _log_of(psi)
        log_d = np.kron(lr, np.eye(a)) - np.kron(np.eye(a), lp.T)
        half = _sqrt_of(psi)
        vec = vec_r(half)
        s_val -= float(np.real(vec.conj() @ (log_d @ vec)))
        k_mat = -(log_d - h_meas * np.eye(a * a)) / beta \
            - (h / (2.0 * beta)) * np.eye(a * a)
        e_val += float(np.real(vec.conj() @ (k_mat @ vec)))
        kspec = herm_eig((k_mat + dagger(k_mat)) / 2.0)
        coeff = dagger(kspec.eigenvectors) @ vec
        gibbs += float(np.real(
            (coeff.conj() * np.exp(-beta * kspec.eigenvalues)) @ coeff
        ))
    f_val = -math.log(gibbs) / beta

    residual_identity = abs(f_val - e_val + s_val / beta)
    residual_geometric = abs(f_val - h / (2.0 * beta))
    bound_margin = beta * e_val - s_val
    return ThermoReport(
        beta=beta, index=pair.index, h=h, h_measured=h_meas,
        entropy=s_val, energy=e_val, free_energy=f_val,
        residual_identity=residual_identity,
        residual_geometric=residual_geometric,
        bound_margin=bound_margin,
        check_residual=pair.check_residual,
    )


def _log_of(mat: np.ndarray) -> np.ndarray:
    spec = _pd_spectrum(mat, "reduced")
    out = (spec.eigenvectors * np.log(spec.eigenvalues)) @ dagger(spec.eigenvectors)
    return (out + dagger(out)) / 2.0


def _sqrt_of(mat: np.ndarray) -> np.ndarray:
    spec = _pd_spectrum(mat, "reduced")
    out = (spec.eigenvectors * np.sqrt(spec.eigenvalues)) @ dagger(spec.eigenvectors)
    return (out + dagger(out)) / 2.0
