"""Independent oracles shared by the test modules."""

import numpy as np
from scipy.linalg import expm


def omega(n):
    eye, zero = np.eye(n), np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


def random_symplectic(n, rng, scale=0.5):
    """exp(Omega H) with H symmetric is symplectic."""
    h = rng.normal(scale=scale, size=(2 * n, 2 * n))
    return expm(omega(n) @ (h + h.T) / 2)


def random_state_cov(n, rng, thermal=1.5):
    """S diag(nu) S^T with nu >= 1: a physical mixed Gaussian covariance."""
    s = random_symplectic(n, rng)
    nu = 1.0 + rng.uniform(0, thermal, size=n)
    return s @ np.diag(np.concatenate([nu, nu])) @ s.T


def min_uncertainty_eig(cov):
    """Smallest eigenvalue of cov + i Omega (>= 0 for physical states)."""
    n = cov.shape[0] // 2
    return float(np.linalg.eigvalsh(cov + 1j * omega(n)).min())
