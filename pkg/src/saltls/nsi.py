"""Noisy subspace iteration and its per-step guarantees.

``nsi_run`` iterates Y = A X + G, X' = QR(Y) under a pluggable noise
model and records a :class:`ConvergenceTrace`.  The per-step noise
budget that keeps the iteration contracting is

    ||G|| <= (1/32) gamma_k sigma_k ||V^T X|| + (eps/32) gamma_k sigma_k

(:func:`admissibility_check`), and each step obeys

    tan' <= (sigma_{k+1} tan + 2 ||V^T G||) / (sigma_k - 2 ||U^T G||)

whenever cos >= 1/2 > ||U^T G|| / sigma_k (:func:`one_step_bound_check`).
Spectral data for the checks comes from one dense eigensolve of A.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from ._rng import as_generator
from .errors import RankDeficient, RankFailure, UsageError, ZeroInput
from .linalg import (
    OrthonormalBasis,
    basis_matrix,
    coherence,
    principal_angle,
    qr_orthonormalize,
    spectral_norm,
)
from .textio import FLOAT_FMT
from .truth import spectral_split

ADMISSIBILITY_RTOL = 1e-10


@dataclass(frozen=True)
class SpectralView:
    """Spectral data of the iteration target: top-k basis, complement,
    the two singular values at the split, and the relative gap."""

    u_basis: OrthonormalBasis
    v_basis: OrthonormalBasis
    sigma_k: float
    sigma_next: float

    @property
    def gamma_k(self):
        return 1.0 - self.sigma_next / self.sigma_k

    @classmethod
    def from_matrix(cls, A, k):
        U, V, sigma = spectral_split(A, k)
        sigma_next = float(sigma[k]) if k < sigma.size else 0.0
        return cls(u_basis=U, v_basis=V, sigma_k=float(sigma[k - 1]), sigma_next=sigma_next)

    @classmethod
    def from_truth(cls, truth):
        return cls(
            u_basis=truth.u_basis,
            v_basis=truth.v_basis,
            sigma_k=truth.sigma_k,
            sigma_next=truth.noise_norm,
        )


@dataclass(frozen=True)
class TraceRecord:
    """One iteration snapshot.  ``vnorm`` is ||V^T X||, which equals the
    sine; both are kept because downstream tables expect both columns."""

    step: int
    sin: float
    tan: float
    vnorm: float
    gnorm: float
    mu: float
    cos: float = float("nan")
    hnorm: float = 0.0


@dataclass
class ConvergenceTrace:
    """Per-step records of an iterative run, with the applied noise
    matrices kept alongside for post-hoc bound checking."""

    records: List[TraceRecord] = field(default_factory=list)
    noise: List[Optional[np.ndarray]] = field(default_factory=list)

    def append(self, record, noise_matrix=None):
        if record.step != len(self.records):
            raise ValueError("trace steps must be contiguous from 0")
        self.records.append(record)
        self.noise.append(noise_matrix)

    def __len__(self):
        return len(self.records)

    def __iter__(self):
        return iter(self.records)

    def write_csv(self, path):
        with open(path, "w") as fh:
            fh.write("step,sin,tan,vnorm,gnorm,mu\n")
            for rec in self.records:
                fh.write(
                    "%d,%s,%s,%s,%s,%s\n"
                    % (
                        rec.step,
                        FLOAT_FMT % rec.sin,
                        FLOAT_FMT % rec.tan,
                        FLOAT_FMT % rec.vnorm,
                        FLOAT_FMT % rec.gnorm,
                        FLOAT_FMT % rec.mu,
                    )
                )

    @classmethod
    def read_csv(cls, path):
        trace = cls()
        with open(path) as fh:
            header = fh.readline().strip()
            if header != "step,sin,tan,vnorm,gnorm,mu":
                raise UsageError(f"{path}: unexpected trace header {header!r}")
            for line in fh:
                parts = line.strip().split(",")
                if len(parts) != 6:
                    raise UsageError(f"{path}: malformed trace row {line!r}")
                sin = float(parts[1])
                trace.append(
                    TraceRecord(
                        step=int(parts[0]),
                        sin=sin,
                        tan=float(parts[2]),
                        vnorm=float(parts[3]),
                        gnorm=float(parts[4]),
                        mu=float(parts[5]),
                        cos=math.sqrt(max(0.0, 1.0 - sin * sin)),
                    )
                )
        return trace


@dataclass(frozen=True)
class NoiseModel:
    """Per-step noise G for the iteration.  Kinds:

    * ``zero`` - no noise;
    * ``gaussian`` - i.i.d. entries N(0, scale^2 / n);
    * ``adversarial`` - user callback (step, X_prev, A) -> G;
    * ``admissible-gaussian`` - Gaussian direction rescaled to
      ``factor`` times the admissibility budget at level ``eps``.
    """

    kind: str
    scale: float = 0.0
    eps: float = 0.0
    factor: float = 1.0
    callback: Optional[Callable] = None

    @classmethod
    def zero(cls):
        return cls(kind="zero")

    @classmethod
    def gaussian(cls, scale):
        if scale < 0:
            raise ValueError("scale must be nonnegative")
        return cls(kind="gaussian", scale=float(scale))

    @classmethod
    def adversarial(cls, callback):
        return cls(kind="adversarial", callback=callback)

    @classmethod
    def admissible_gaussian(cls, eps, factor=1.0):
        if eps <= 0 or not 0.0 <= factor <= 1.0:
            raise ValueError("need eps > 0 and factor in [0, 1]")
        return cls(kind="admissible-gaussian", eps=float(eps), factor=float(factor))

    def draw(self, rng, step, X_prev, A, view):
        n, k = basis_matrix(X_prev).shape
        if self.kind == "zero":
            return np.zeros((n, k))
        if self.kind == "gaussian":
            return rng.standard_normal((n, k)) * (self.scale / math.sqrt(n))
        if self.kind == "adversarial":
            G = np.asarray(self.callback(step, X_prev, A), dtype=float)
            if G.shape != (n, k) or not np.all(np.isfinite(G)):
                raise ValueError("adversarial callback returned a bad matrix")
            return G
        if self.kind == "admissible-gaussian":
            budget = admissibility_budget(X_prev, self.eps, view)
            raw = rng.standard_normal((n, k))
            norm = spectral_norm(raw)
            return raw * (self.factor * budget / norm)
        raise ValueError(f"unknown noise kind {self.kind!r}")


def admissibility_budget(X_prev, eps, view):
    """The per-step noise ceiling (gamma_k sigma_k / 32)(||V^T X|| + eps)."""
    vnorm = spectral_norm(view.v_basis.data.T @ basis_matrix(X_prev))
    return view.gamma_k * view.sigma_k / 32.0 * (vnorm + eps)


@dataclass(frozen=True)
class AdmissibilityResult:
    admissible: bool
    slack: float
    budget: float
    gnorm: float


def admissibility_check(G, X_prev, eps, view):
    """Check ||G|| against the admissibility budget at level eps.

    Boundary cases count as admissible up to a 1e-10 relative slop.
    """
    gnorm = spectral_norm(G)
    budget = admissibility_budget(X_prev, eps, view)
    return AdmissibilityResult(
        admissible=bool(gnorm <= budget * (1.0 + ADMISSIBILITY_RTOL)),
        slack=float(budget - gnorm),
        budget=float(budget),
        gnorm=float(gnorm),
    )


def nsi_run(A, k, L, noise, x0, seed, store_noise=True, view=None):
    """Run L steps of noisy subspace iteration from x0.

    Returns ``(X_L, trace)``.  The trace holds one record per step
    starting at step 0 (the start basis, zero noise) and, when
    ``store_noise`` is set, the exact noise matrices for bound checks.
    Rank collapse raises :class:`RankFailure` tagged with the step.
    ``view`` overrides the spectral reference frame; planted instances
    pass their own so angles are measured against the planted range.
    """
    A = np.asarray(A, dtype=float)
    if np.max(np.abs(A - A.T), initial=0.0) > 1e-10:
        raise ValueError("matrix is not symmetric")
    if L < 1:
        raise ValueError("L must be at least 1")
    if view is None:
        view = SpectralView.from_matrix(A, k)
    X = x0 if isinstance(x0, OrthonormalBasis) else OrthonormalBasis(np.asarray(x0, float))
    if X.data.shape != (A.shape[0], k):
        raise ValueError("x0 has the wrong shape")
    rng = as_generator(seed)

    trace = ConvergenceTrace()
    trace.append(_measure(0, X, 0.0, view), None)
    for step in range(1, L + 1):
        G = noise.draw(rng, step, X, A, view)
        Y = A @ X.data + G
        try:
            X, _ = qr_orthonormalize(Y)
        except (RankDeficient, ZeroInput) as exc:
            raise RankFailure(f"iteration lost rank at step {step}: {exc}") from exc
        trace.append(
            _measure(step, X, spectral_norm(G), view),
            G if store_noise else None,
        )
    return X, trace


def _measure(step, X, gnorm, view):
    angle = principal_angle(view.u_basis, X)
    return TraceRecord(
        step=step,
        sin=angle.sine,
        tan=angle.tangent,
        vnorm=angle.sine,
        gnorm=float(gnorm),
        mu=coherence(X),
        cos=angle.cosine,
    )


@dataclass(frozen=True)
class StepBoundCheck:
    """Outcome of the one-step tangent bound at one step."""

    step: int
    preconditions_met: bool
    holds: bool
    observed: float
    bound: float


def one_step_bound_check(trace, view, rtol=1e-6):
    """Verify the tangent drop bound on every step of a trace.

    Steps are skipped (``preconditions_met = False``) when the previous
    cosine is below 1/2, when ||U^T G|| reaches sigma_k / 2, or when
    either tangent is infinite.  The trace must carry stored noise.
    """
    results = []
    U = view.u_basis.data
    V = view.v_basis.data
    for rec in trace.records[1:]:
        G = trace.noise[rec.step]
        if G is None:
            raise ValueError(f"trace has no stored noise for step {rec.step}")
        prev = trace.records[rec.step - 1]
        utg = spectral_norm(U.T @ G)
        vtg = spectral_norm(V.T @ G)
        pre = (
            prev.cos >= 0.5
            and utg < 0.5 * view.sigma_k
            and math.isfinite(prev.tan)
            and math.isfinite(rec.tan)
        )
        if not pre:
            results.append(
                StepBoundCheck(rec.step, False, False, rec.tan, math.nan)
            )
            continue
        bound = (view.sigma_next * prev.tan + 2.0 * vtg) / (view.sigma_k - 2.0 * utg)
        holds = rec.tan <= bound * (1.0 + rtol) + 1e-12
        results.append(StepBoundCheck(rec.step, True, bool(holds), rec.tan, float(bound)))
    return results


def basis_near(U, sin_target, seed):
    """Orthonormal basis at sine distance about ``sin_target`` from U,
    never exceeding it.  Used to prepare iteration starts."""
    U = U if isinstance(U, OrthonormalBasis) else OrthonormalBasis(np.asarray(U, float))
    if not 0.0 <= sin_target < 1.0:
        raise ValueError("sin_target must lie in [0, 1)")
    if sin_target == 0.0:
        return U
    rng = as_generator(seed)
    Z = rng.standard_normal(U.data.shape)
    W = Z - U.data @ (U.data.T @ Z)
    w = sin_target / (1.0 + sin_target)
    W *= w / spectral_norm(W)
    X, _ = qr_orthonormalize(U.data + W)
    return X
