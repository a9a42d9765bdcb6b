"""Truncated spectral initialization.

The start basis comes from the scaled observation P_Omega(A): take its
top-k invariant subspace by subspace iteration, rotate by a random
orthogonal matrix so no column hides a spike, clip every entry at the
incoherence level sqrt(8 mu log(n) / n), and orthonormalize the result.
The random rotation is what makes entry clipping safe: it spreads any
single heavy row across all k columns before the clip.
"""

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from ._rng import as_generator, derive_rng
from .errors import RankDeficient, RankFailure
from .linalg import OrthonormalBasis, coherence, qr_orthonormalize
from .sampling import p_omega


@dataclass(frozen=True)
class InitReport:
    """Initialization output and diagnostics.

    ``sin_theta`` and ``sin_theta_fro`` are the spectral and Frobenius
    norms of V^T X0, filled only when ground truth is supplied.
    """

    x0: OrthonormalBasis
    coherence: float
    clip_level: float
    sin_theta: Optional[float] = None
    sin_theta_fro: Optional[float] = None


def power_method_topk(B, k, iters, seed):
    """Top-k invariant subspace of square B by subspace iteration.

    Starts from a seeded Gaussian basis and re-orthonormalizes every
    step.  Rank collapse raises :class:`RankFailure`.
    """
    B = np.asarray(B, dtype=float)
    if B.ndim != 2 or B.shape[0] != B.shape[1]:
        raise ValueError("expected a square matrix")
    n = B.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k = {k} out of range for n = {n}")
    if iters < 0:
        raise ValueError("iters must be nonnegative")
    rng = as_generator(seed)
    try:
        X, _ = qr_orthonormalize(rng.standard_normal((n, k)))
        for _ in range(iters):
            X, _ = qr_orthonormalize(B @ X.data)
    except RankDeficient as exc:
        raise RankFailure(f"subspace iteration lost rank: {exc}") from exc
    return X


def random_orthonormal(k, seed):
    """Haar-distributed k x k orthogonal matrix (QR sign convention)."""
    if k < 1:
        raise ValueError("k must be positive")
    rng = as_generator(seed)
    Q, _ = qr_orthonormalize(rng.standard_normal((k, k)))
    return Q


def clip_entries(W, c):
    """Clamp every entry of W to [-c, c]."""
    if c <= 0.0:
        raise ValueError(f"clip level {c!r} must be positive")
    return np.clip(np.asarray(W, dtype=float), -c, c)


def initialize(sample, k, mu, seed, iters=None, truth=None):
    """Start basis for completion from an observed sample.

    ``mu`` is the caller's coherence estimate for the planted basis; it
    sets the clip level sqrt(8 mu log(n) / n).  ``iters`` defaults to
    ceil(10 log n), the well-gapped convention; callers who know the
    relative gap should pass ceil(10 log(n) / gamma) themselves.
    When ``truth`` is given the report records the achieved angles.
    """
    n = sample.n
    if n < 2:
        raise ValueError("initialization needs n >= 2")
    if mu <= 0.0:
        raise ValueError(f"mu = {mu!r} must be positive")
    if iters is None:
        iters = math.ceil(10 * math.log(n))
    if isinstance(seed, np.random.Generator):
        power_rng = rotate_rng = seed
    else:
        power_rng = derive_rng(seed, "init-power")
        rotate_rng = derive_rng(seed, "init-rotate")

    W = power_method_topk(p_omega(sample), k, iters, power_rng)
    O = random_orthonormal(k, rotate_rng)
    clip_level = math.sqrt(8.0 * mu * math.log(n) / n)
    T = clip_entries(W.data @ O.data, clip_level)
    try:
        X0, _ = qr_orthonormalize(T)
    except RankDeficient as exc:
        raise RankFailure(f"clipped basis lost rank: {exc}") from exc

    sin_theta = sin_theta_fro = None
    if truth is not None:
        sin_theta = float(truth.vt_norm(X0))
        sin_theta_fro = float(truth.vt_frobenius(X0))
    return InitReport(
        x0=X0,
        coherence=coherence(X0),
        clip_level=float(clip_level),
        sin_theta=sin_theta,
        sin_theta_fro=sin_theta_fro,
    )
