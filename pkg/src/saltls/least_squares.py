"""Row-wise least squares against observed entries, and its median variant.

For each row i the update solves

    min_y sum_{j in Omega_i} (A_ij - y^T x_j)^2

whose closed form is  e_i^T Y = e_i^T A P_i X B_i^{-1}  with
P_i = (1/p) sum_{j in Omega_i} e_j e_j^T  and  B_i = X^T P_i X.
Rows whose B_i has smallest eigenvalue below ``BI_EIG_FLOOR`` fall back
to the unregularized projection row e_i^T P_Omega(A) X and are flagged.

``median_ls`` splits the sample into t independent pieces, solves each,
and takes the componentwise lower median, which suppresses heavy-tailed
per-row failures at a log-factor sample cost.
"""

from dataclasses import dataclass

import numpy as np

from ._rng import as_generator
from .linalg import basis_matrix
from .sampling import split

# absolute floor on the smallest eigenvalue of B_i (E[B_i] = I)
BI_EIG_FLOOR = 1e-8

# tolerance for the decomposition identity Y = (M+N)X + GM + GN
DECOMP_TOL = 1e-7


@dataclass(frozen=True)
class LsSolveReport:
    """Per-solve diagnostics: flagged rows and the worst conditioning seen."""

    singular_rows: np.ndarray
    min_bi_eigenvalue: float


@dataclass(frozen=True)
class ErrorDecomposition:
    """Split of the solve error G = Y - AX into the low-rank-tracking part
    GM and the noise-driven part GN, with E = (I - XX^T) U."""

    G: np.ndarray
    GM: np.ndarray
    GN: np.ndarray
    E: np.ndarray
    singular_rows: np.ndarray


def _gram_and_rhs(sample, Xm):
    """Per-row B_i = X^T P_i X and r_i = e_i^T A P_i X, vectorized."""
    n = sample.n
    k = Xm.shape[1]
    rows, cols, vals = sample.rows, sample.cols, sample.vals
    XO = Xm[cols]
    scale = 1.0 / sample.p
    B = np.empty((n, k, k))
    for a in range(k):
        for b in range(a, k):
            w = np.bincount(rows, weights=XO[:, a] * XO[:, b], minlength=n)
            B[:, a, b] = w
            B[:, b, a] = w
    B *= scale
    rhs = np.empty((n, k))
    for a in range(k):
        rhs[:, a] = np.bincount(rows, weights=vals * XO[:, a], minlength=n)
    rhs *= scale
    return B, rhs


def _solve_rows(B, rhs, singular):
    k = B.shape[1]
    Bsafe = B.copy()
    Bsafe[singular] = np.eye(k)
    Y = np.linalg.solve(Bsafe, rhs[..., None])[..., 0]
    Y[singular] = rhs[singular]
    return Y


def ls_update(sample, X):
    """One least-squares update of the row factor.

    Returns ``(Y, report)`` where Y is dense n x k and the report lists
    rows that fell back to the projection because B_i was near singular
    (empty rows among them, with fallback value 0).
    """
    Xm = basis_matrix(X)
    B, rhs = _gram_and_rhs(sample, Xm)
    lam_min = np.linalg.eigvalsh(B)[:, 0]
    singular = lam_min < BI_EIG_FLOOR
    Y = _solve_rows(B, rhs, singular)
    report = LsSolveReport(
        singular_rows=np.flatnonzero(singular),
        min_bi_eigenvalue=float(lam_min.min()),
    )
    return Y, report


def entrywise_median(stack):
    """Componentwise lower median over the first axis.

    For even counts this is the element at index (t-1)//2 of the sorted
    values, so the result is always one of the inputs componentwise.
    """
    stack = np.asarray(stack, dtype=float)
    t = stack.shape[0]
    if t < 1:
        raise ValueError("median of an empty stack")
    return np.sort(stack, axis=0)[(t - 1) // 2]


def median_ls(sample, X, t, seed):
    """Median of t independent least-squares solves on split pieces.

    Returns ``(Y, reports)`` with one :class:`LsSolveReport` per piece.
    """
    rng = as_generator(seed)
    pieces = split(sample, t, rng)
    solves = [ls_update(piece, X) for piece in pieces]
    Y = entrywise_median(np.stack([y for y, _ in solves]))
    return Y, [rep for _, rep in solves]


def error_decomposition(sample, X, truth):
    """Split the solve error of ``ls_update(sample, X)`` into its
    low-rank and noise parts using the planted truth.

    On rows where B_i was invertible the identity
    Y = (M + N) X + GM + GN must hold to ``DECOMP_TOL``; a violation
    raises ValueError.  Flagged rows carry GM = G, GN = 0 and are
    excluded from the check.
    """
    Xm = basis_matrix(X)
    U = truth.u_basis.data
    lam = truth.eigenvalues
    N = truth.noise
    A = truth.matrix
    n, k = Xm.shape
    kt = U.shape[1]

    B, rhs = _gram_and_rhs(sample, Xm)
    lam_min = np.linalg.eigvalsh(B)[:, 0]
    singular = lam_min < BI_EIG_FLOOR
    Y = _solve_rows(B, rhs, singular)

    rows, cols = sample.rows, sample.cols
    XO = Xm[cols]
    scale = 1.0 / sample.p

    # E = (I - XX^T) U, and per-row C_i = E^T P_i X (kt x k)
    E = U - Xm @ (Xm.T @ U)
    EO = E[cols]
    C = np.empty((n, kt, k))
    for a in range(kt):
        for b in range(k):
            C[:, a, b] = np.bincount(rows, weights=EO[:, a] * XO[:, b], minlength=n)
    C *= scale
    W = U * lam  # rows are e_i^T U Lambda_U
    wC = np.einsum("ia,iab->ib", W, C)
    GM = _solve_rows(B, wC, singular)

    # GN rows: e_i^T (N P_i X B_i^{-1} - N X)
    NO = N[rows, cols]
    NPX = np.empty((n, k))
    for b in range(k):
        NPX[:, b] = np.bincount(rows, weights=NO * XO[:, b], minlength=n)
    NPX *= scale
    GN = _solve_rows(B, NPX, singular) - N @ Xm

    G = Y - A @ Xm
    GM[singular] = G[singular]
    GN[singular] = 0.0

    ok = ~singular
    resid = Y[ok] - (A @ Xm)[ok] - GM[ok] - GN[ok]
    if resid.size:
        worst = float(np.max(np.linalg.norm(resid, axis=1)))
        if worst > DECOMP_TOL:
            raise ValueError(f"decomposition identity violated by {worst:.3e}")
    return ErrorDecomposition(
        G=G, GM=GM, GN=GN, E=E, singular_rows=np.flatnonzero(singular)
    )
