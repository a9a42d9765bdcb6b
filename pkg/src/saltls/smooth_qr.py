"""Orthonormalization with escalating Gaussian smoothing.

Plain QR of an ill-conditioned iterate can concentrate weight on few
coordinates.  ``smooth_qr`` retries QR on Y + H with Gaussian H whose
scale starts at eps * ||Y|| / n and doubles each round, stopping as
soon as the coherence of the result drops below the target ``mu`` or
the scale passes ||Y||.  Failing to meet the target is reported in the
result, not raised.
"""

import math
from dataclasses import dataclass

import numpy as np

from ._rng import as_generator
from .errors import RankDeficient, RankFailure, ZeroInput
from .linalg import OrthonormalBasis, coherence, qr_orthonormalize, spectral_norm

_QR_RETRIES = 3


@dataclass(frozen=True)
class SmoothQrResult:
    """Basis produced by the smoothing loop plus loop diagnostics.

    ``noise`` is the exact H applied in the final round (zero when the
    loop never ran), so ``qr_orthonormalize(Y + noise)`` reproduces
    ``basis``.  ``final_sigma`` is the scale used for that draw.
    """

    basis: OrthonormalBasis
    noise: np.ndarray
    final_sigma: float
    rounds: int
    met_target: bool


def smooth_qr(Y, eps, mu, seed):
    """Orthonormalize Y, adding doubling-scale Gaussian noise until the
    basis coherence is at most mu or the scale exceeds ||Y||.

    The noise scale in round r is exactly ``eps * ||Y|| / n * 2**r``.
    QR rank failures inside the loop retry with fresh noise at the same
    scale, at most three times, then raise :class:`RankFailure`.
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2:
        raise ValueError("expected a 2-d array")
    if eps <= 0.0:
        raise ValueError(f"eps = {eps!r} must be positive")
    if mu < 1.0:
        raise ValueError(f"mu = {mu!r} below the coherence floor 1")
    n, k = Y.shape
    ynorm = spectral_norm(Y)
    if ynorm == 0.0:
        raise ZeroInput("smooth_qr input is identically zero")
    rng = as_generator(seed)

    H = np.zeros_like(Y)
    try:
        X, _ = qr_orthonormalize(Y)
        mu_x = coherence(X)
    except RankDeficient:
        X = None
        mu_x = math.inf

    sigma = eps * ynorm / n
    final_sigma = sigma
    rounds = 0
    while mu_x > mu and sigma <= ynorm:
        for _ in range(1 + _QR_RETRIES):
            draw = rng.standard_normal((n, k)) * (sigma / math.sqrt(n))
            try:
                X, _ = qr_orthonormalize(Y + draw)
                break
            except RankDeficient:
                continue
        else:
            raise RankFailure(
                f"QR failed {1 + _QR_RETRIES} times at noise scale {sigma:.3e}"
            )
        H = draw
        mu_x = coherence(X)
        final_sigma = sigma
        rounds += 1
        sigma *= 2.0

    if X is None:
        raise RankFailure("rank-deficient input and no noise round was allowed")
    return SmoothQrResult(
        basis=X,
        noise=H,
        final_sigma=float(final_sigma),
        rounds=rounds,
        met_target=bool(mu_x <= mu),
    )


def smallest_singular_after_projection(G, v_dim, tau, seed):
    """sigma_k of (G + H) projected onto a random v_dim-dimensional
    subspace, H Gaussian with entry variance tau^2 / n.

    The projection keeps the orthogonal complement of a seeded random
    (n - v_dim)-dimensional subspace; ``v_dim = n`` means no projection
    and ``tau = 0`` means no noise.
    """
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[1] == 0:
        raise ValueError("expected a nonempty 2-d array")
    n, k = G.shape
    if not 0 <= v_dim <= n:
        raise ValueError(f"v_dim = {v_dim} out of range")
    if tau < 0.0:
        raise ValueError("tau must be nonnegative")
    rng = as_generator(seed)
    Z = G.copy()
    if tau > 0.0:
        Z += rng.standard_normal((n, k)) * (tau / math.sqrt(n))
    drop = n - v_dim
    if drop > 0:
        S, _ = qr_orthonormalize(rng.standard_normal((n, drop)))
        Z -= S.data @ (S.data.T @ Z)
    svals = np.linalg.svd(Z, compute_uv=False)
    return float(svals[-1])
