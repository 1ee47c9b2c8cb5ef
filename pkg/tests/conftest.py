"""Shared fixtures and independent oracles.

The oracle helpers below use numpy.linalg directly (never the package's own
spectral code) so that every derived expected value in the tests is computed
along an independent path.
"""

import numpy as np
import pytest


def np_dagger(a):
    return np.asarray(a).conj().T


def np_logm(a):
    w, v = np.linalg.eigh(a)
    return (v * np.log(w)) @ v.conj().T


def np_expm(a):
    w, v = np.linalg.eigh(a)
    return (v * np.exp(w)) @ v.conj().T


def np_umegaki(a, b):
    """Tr a (log a - log b) for positive definite a, b."""
    return float(np.real(np.trace(a @ (np_logm(a) - np_logm(b)))))


def np_entropy(rho):
    w = np.linalg.eigvalsh(rho)
    w = w[w > 1e-14]
    return float(-np.sum(w * np.log(w)))


def random_density_np(rng, d, floor=0.1):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    rho = (1.0 - floor) * rho + floor * np.eye(d) / d
    return (rho + rho.conj().T) / 2.0


def random_hermitian_np(rng, d):
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return (g + g.conj().T) / 2.0


def haar_unitary_np(rng, d):
    z = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


@pytest.fixture
def rng():
    return np.random.default_rng(20260814)
