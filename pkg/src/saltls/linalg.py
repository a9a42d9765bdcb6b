"""Core linear algebra: orthonormalization, coherence, principal angles.

Conventions used throughout the package:

* an orthonormal basis is an n x k matrix with orthonormal columns,
  k <= n, wrapped in :class:`OrthonormalBasis`;
* coherence of a basis X is (n/k) * max_i ||e_i^T X||^2, which lies in
  [1, n/k];
* the principal angle between two bases means the largest principal
  angle: sine = ||(I - XX^T) Y||, cosine = sigma_min(X^T Y), tangent
  infinite when X^T Y is singular.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GapUndefined, RankDeficient
from ._rng import derive_rng

# relative threshold below which a matrix counts as rank deficient
RANK_RTOL = 1e-12

# power iteration budget for spectral norms
_NORM_ITERS = 200
_NORM_RTOL = 1e-9
_NORM_SEED = 0x5A17


@dataclass(frozen=True)
class OrthonormalBasis:
    """An n x k matrix with orthonormal columns.

    Construction validates orthonormality to 1e-10 in max norm, so a
    value of this type can be trusted downstream without rechecking.
    """

    data: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.data, dtype=float)
        if mat.ndim != 2:
            raise ValueError("basis must be a 2-d array")
        n, k = mat.shape
        if k > n:
            raise ValueError(f"basis has more columns ({k}) than rows ({n})")
        gram = mat.T @ mat
        err = np.max(np.abs(gram - np.eye(k))) if k else 0.0
        if err > 1e-10:
            raise ValueError(f"columns not orthonormal (max deviation {err:.3e})")
        object.__setattr__(self, "data", mat)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def k(self):
        return self.data.shape[1]

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self.data.astype(dtype)
        return self.data


@dataclass(frozen=True)
class PrincipalAngle:
    """Sine, cosine and tangent of the largest principal angle."""

    sine: float
    cosine: float
    tangent: float


@dataclass(frozen=True)
class SpectralSummary:
    """Full singular value list of a symmetric matrix plus the gap at k."""

    singular_values: np.ndarray
    gap_k: float
    k: int = field(default=0)


def basis_matrix(X):
    """Return the ndarray behind a basis (accepts bare arrays too)."""
    if isinstance(X, OrthonormalBasis):
        return X.data
    return np.asarray(X, dtype=float)


def qr_orthonormalize(Y):
    """Thin QR factorization with a nonnegative diagonal on R.

    Returns ``(Q, R)`` where Q is an :class:`OrthonormalBasis` and
    ``Q @ R`` reproduces Y.  Raises :class:`RankDeficient` when the
    smallest singular value of Y falls below ``RANK_RTOL`` times the
    largest.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("expected a 2-d array")
    n, k = Y.shape
    if k > n:
        raise ValueError(f"cannot orthonormalize {n} x {k} with k > n")
    svals = np.linalg.svd(Y, compute_uv=False) if k else np.array([])
    if k and (svals[0] == 0.0 or svals[-1] <= RANK_RTOL * svals[0]):
        raise RankDeficient(
            f"rank deficient input: sigma_k = {svals[-1]:.3e}, sigma_1 = {svals[0]:.3e}",
            sigma_k=float(svals[-1]),
        )
    Q, R = np.linalg.qr(Y, mode="reduced")
    signs = np.sign(np.diag(R)).copy()
    signs[signs == 0.0] = 1.0
    Q = Q * signs
    R = signs[:, None] * R
    return OrthonormalBasis(Q), R


def coherence(X):
    """Coherence (n/k) * max_i ||e_i^T X||^2 of an orthonormal basis."""
    mat = basis_matrix(X)
    n, k = mat.shape
    if k == 0:
        raise ValueError("coherence of an empty basis is undefined")
    return float(n / k * np.max(np.einsum("ij,ij->i", mat, mat)))


def rho_coherence(G):
    """Row-coherence proxy (n/k) * max_i ||e_i^T G||^2 for any matrix."""
    mat = np.asarray(G, dtype=float)
    if mat.ndim != 2 or mat.shape[1] == 0:
        raise ValueError("expected a nonempty 2-d array")
    n, k = mat.shape
    return float(n / k * np.max(np.einsum("ij,ij->i", mat, mat)))


def spectral_norm(G, max_iters=_NORM_ITERS, rtol=_NORM_RTOL):
    """Largest singular value by power iteration on the Gram matrix.

    Deterministic: the start vector is normalized all-ones plus a small
    perturbation drawn from a generator seeded by the matrix shape.
    Fixed iteration budget, relative tolerance on the Rayleigh quotient.
    The value is extracted by Rayleigh-Ritz over the last two iterates,
    which stays accurate when the top of the spectrum is nearly
    degenerate and plain power iteration stalls.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim == 1:
        return float(np.linalg.norm(G))
    if G.size == 0:
        return 0.0
    if G.shape[0] < G.shape[1]:
        G = G.T
    k = G.shape[1]
    rng = derive_rng(_NORM_SEED, "spectral_norm", index=k)
    v = np.ones(k) + 1e-3 * rng.standard_normal(k)
    v /= np.linalg.norm(v)
    window = [v]
    lam_prev = -1.0
    lam = 0.0
    for _ in range(max_iters):
        w = G @ v
        lam = float(w @ w)
        if lam == 0.0:
            return 0.0
        u = G.T @ w
        v = u / np.linalg.norm(u)
        window = window[-2:] + [v]
        if abs(lam - lam_prev) <= rtol * lam:
            break
        lam_prev = lam
    if k == 1:
        return math.sqrt(lam)
    # Ritz step over the trailing iterates: when the iteration stalls on a
    # nearly degenerate top block, the stalled directions span the window
    # and the projected problem resolves them exactly
    W = np.stack(window, axis=1)
    basis, sv, _ = np.linalg.svd(W, full_matrices=False)
    Q = basis[:, sv > 1e-10 * sv[0]]
    GQ = G @ Q
    ritz = np.linalg.eigvalsh(GQ.T @ GQ)
    return math.sqrt(max(lam, float(ritz[-1])))


def principal_angle(X, Y):
    """Largest principal angle between the ranges of two bases.

    Both arguments must have orthonormal columns and equal column
    counts.  The tangent is ``inf`` when X^T Y is singular; that is an
    ordinary float value, not an error.
    """
    Xm = basis_matrix(X)
    Ym = basis_matrix(Y)
    if Xm.shape != Ym.shape:
        raise ValueError(f"shape mismatch {Xm.shape} vs {Ym.shape}")
    M = Xm.T @ Ym
    resid = Ym - Xm @ M
    sine = min(1.0, spectral_norm(resid))
    svals = np.linalg.svd(M, compute_uv=False)
    cosine = float(min(1.0, svals[-1])) if svals.size else 1.0
    if svals.size == 0:
        return PrincipalAngle(sine=0.0, cosine=1.0, tangent=0.0)
    if svals[-1] <= RANK_RTOL * max(1.0, svals[0]):
        return PrincipalAngle(sine=sine, cosine=cosine, tangent=math.inf)
    T = np.linalg.solve(M.T, resid.T).T
    tangent = spectral_norm(T)
    return PrincipalAngle(sine=sine, cosine=cosine, tangent=tangent)


def spectral_summary(A, k):
    """Singular values of a symmetric matrix and the relative gap at k.

    ``gap_k = 1 - sigma_{k+1} / sigma_k`` with sigma_{n+1} taken as 0.
    Raises :class:`GapUndefined` when sigma_k == 0 and ValueError when
    A is not symmetric to 1e-10.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("expected a square matrix")
    n = A.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k = {k} out of range for n = {n}")
    if np.max(np.abs(A - A.T)) > 1e-10:
        raise ValueError("matrix is not symmetric")
    eigvals = np.linalg.eigvalsh(A)
    svals = np.sort(np.abs(eigvals))[::-1]
    sigma_k = svals[k - 1]
    if sigma_k == 0.0:
        raise GapUndefined(f"sigma_{k} = 0, relative gap undefined")
    sigma_next = svals[k] if k < n else 0.0
    return SpectralSummary(singular_values=svals, gap_k=float(1.0 - sigma_next / sigma_k), k=k)


def complement_basis(X):
    """Orthonormal basis of the orthogonal complement of range(X)."""
    mat = basis_matrix(X)
    n, k = mat.shape
    if k == n:
        return OrthonormalBasis(np.zeros((n, 0)))
    full, _, _ = np.linalg.svd(mat, full_matrices=True)
    comp = full[:, k:]
    return OrthonormalBasis(comp)
