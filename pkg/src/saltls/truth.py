"""Planted ground truth for experiments.

A :class:`GroundTruth` holds the planted decomposition A = U diag(lam) U^T + N
with the noise ranges orthogonal to U, plus the derived quantities every
harness measurement needs (singular values, relative gap, coherences).
All randomized experiments measure against an instance of this type.
"""

from dataclasses import dataclass
from functools import cached_property
import math

import numpy as np

from .errors import GapUndefined
from .linalg import OrthonormalBasis, coherence, complement_basis


@dataclass(frozen=True)
class GroundTruth:
    """Planted decomposition A = M + N with M = U diag(eigenvalues) U^T."""

    u_basis: OrthonormalBasis
    eigenvalues: np.ndarray
    noise: np.ndarray

    def __post_init__(self):
        lam = np.asarray(self.eigenvalues, dtype=float).ravel()
        N = np.asarray(self.noise, dtype=float)
        n, k = self.u_basis.n, self.u_basis.k
        if lam.shape != (k,):
            raise ValueError(f"expected {k} eigenvalues, got {lam.shape}")
        if np.any(lam == 0.0) or not np.all(np.isfinite(lam)):
            raise ValueError("eigenvalues must be finite and nonzero")
        if N.shape != (n, n):
            raise ValueError(f"noise must be {n} x {n}")
        if np.max(np.abs(N - N.T), initial=0.0) > 1e-10:
            raise ValueError("noise is not symmetric")
        cross = np.max(np.abs(self.u_basis.data.T @ N), initial=0.0)
        if cross > 1e-9:
            raise ValueError(f"noise not orthogonal to the planted range ({cross:.3e})")
        object.__setattr__(self, "eigenvalues", lam)
        object.__setattr__(self, "noise", N)

    @property
    def n(self):
        return self.u_basis.n

    @property
    def k(self):
        return self.u_basis.k

    @cached_property
    def low_rank(self):
        """The planted low-rank part M."""
        U = self.u_basis.data
        return (U * self.eigenvalues) @ U.T

    @cached_property
    def matrix(self):
        """The observed matrix A = M + N."""
        return self.low_rank + self.noise

    @cached_property
    def sigma(self):
        """Planted singular values |lam| sorted descending."""
        return np.sort(np.abs(self.eigenvalues))[::-1]

    @property
    def sigma_k(self):
        return float(self.sigma[-1])

    @cached_property
    def noise_norm(self):
        """Spectral norm of N, by a dense eigensolver (run once)."""
        if not np.any(self.noise):
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvalsh(self.noise))))

    @property
    def gamma_k(self):
        """Relative gap 1 - ||N|| / sigma_k(M)."""
        gap = 1.0 - self.noise_norm / self.sigma_k
        if gap <= 0.0:
            raise GapUndefined(
                f"noise norm {self.noise_norm:.3e} reaches sigma_k = {self.sigma_k:.3e}"
            )
        return float(gap)

    @cached_property
    def v_basis(self):
        """Orthonormal basis of the complement of range(U)."""
        return complement_basis(self.u_basis)

    @cached_property
    def mu_u(self):
        return coherence(self.u_basis)

    @cached_property
    def frob_norm(self):
        return float(np.linalg.norm(self.matrix, "fro"))

    @cached_property
    def mu_n(self):
        """Smallest noise-coherence value satisfying both noise ceilings:
        max_i ||e_i^T N||^2 <= (mu_n/n) sigma_k^2 and
        max_ij |N_ij| <= (mu_n/n) ||A||_F."""
        if not np.any(self.noise):
            return 0.0
        row_sq = float(np.max(np.einsum("ij,ij->i", self.noise, self.noise)))
        max_abs = float(np.max(np.abs(self.noise)))
        return self.n * max(row_sq / self.sigma_k**2, max_abs / self.frob_norm)

    @property
    def mu_star(self):
        return float(max(self.mu_u, self.mu_n, math.log(self.n)))

    def vt_norm(self, X):
        """Spectral norm of V^T X, the sine of the largest angle to U."""
        from .linalg import basis_matrix, spectral_norm

        return spectral_norm(self.v_basis.data.T @ basis_matrix(X))

    def vt_frobenius(self, X):
        from .linalg import basis_matrix

        return float(np.linalg.norm(self.v_basis.data.T @ basis_matrix(X), "fro"))


def spectral_split(A, k):
    """Top-k invariant subspace of symmetric A, its complement, and the
    singular values sorted descending.  One dense eigensolve."""
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k = {k} out of range for n = {n}")
    vals, vecs = np.linalg.eigh(A)
    order = np.argsort(np.abs(vals))[::-1]
    sigma = np.abs(vals)[order]
    U = OrthonormalBasis(vecs[:, order[:k]])
    V = OrthonormalBasis(vecs[:, order[k:]])
    return U, V, sigma
