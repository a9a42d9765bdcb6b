"""Random instance generation for experiments.

Instances are planted: an incoherent basis from rejection-sampled
Gaussian QR, a prescribed positive spectrum, and optional symmetric
noise projected on both sides away from the planted range so the
noise never leaks into it.  An :class:`InstanceSpec` pins everything,
including the seed, so committed spec files regenerate instances
exactly.
"""

import math
import os
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from ._rng import as_generator, derive_rng
from .errors import CoherenceUnachievable, NoiseInfeasible, UsageError
from .linalg import coherence, qr_orthonormalize
from .textio import read_config, read_dense_matrix, write_config, write_dense_matrix
from .truth import GroundTruth

MAX_BASIS_TRIES = 50


@dataclass(frozen=True)
class InstanceSpec:
    """Everything needed to regenerate one instance.

    The spectrum is either explicit or derived from a condition number
    with a decay profile (sigma_1 = condition_number down to
    sigma_k = 1, geometric or linear).
    """

    n: int
    k: int
    mu_target: float
    seed: int
    spectrum: Optional[Tuple[float, ...]] = None
    condition_number: Optional[float] = None
    profile: str = "geometric"
    noise_fraction: float = 0.0
    mu_n: float = 1.0

    def __post_init__(self):
        if self.n < 2 or not 1 <= self.k <= self.n:
            raise ValueError(f"bad shape n = {self.n}, k = {self.k}")
        if self.spectrum is None and self.condition_number is None:
            raise ValueError("need an explicit spectrum or a condition number")
        if self.spectrum is not None and self.condition_number is not None:
            raise ValueError("give a spectrum or a condition number, not both")
        if self.profile not in ("geometric", "linear"):
            raise ValueError(f"unknown decay profile {self.profile!r}")
        if not 0.0 <= self.noise_fraction < 1.0:
            raise ValueError("noise_fraction must lie in [0, 1)")
        if self.spectrum is not None:
            object.__setattr__(self, "spectrum", tuple(float(s) for s in self.spectrum))

    def resolve_spectrum(self):
        """The k planted singular values, descending."""
        if self.spectrum is not None:
            sv = np.asarray(self.spectrum, dtype=float)
            if sv.size != self.k or np.any(sv <= 0.0):
                raise ValueError("spectrum must hold k positive values")
            return np.sort(sv)[::-1]
        cond = float(self.condition_number)
        if cond < 1.0:
            raise ValueError("condition number must be at least 1")
        if self.k == 1:
            return np.array([cond])
        if self.profile == "geometric":
            expo = np.linspace(1.0, 0.0, self.k)
            return cond**expo
        return np.linspace(cond, 1.0, self.k)

    def config_items(self):
        items = [
            ("n", self.n),
            ("k", self.k),
            ("mu_target", float(self.mu_target)),
            ("seed", self.seed),
        ]
        if self.spectrum is not None:
            items.append(("spectrum", list(self.spectrum)))
        else:
            items.append(("condition_number", float(self.condition_number)))
            items.append(("profile", self.profile))
        items.append(("noise_fraction", float(self.noise_fraction)))
        items.append(("mu_n", float(self.mu_n)))
        return items

    @classmethod
    def from_config(cls, cfg, prefix=""):
        """Build from a flat key=value dict (optionally prefixed keys)."""
        def grab(key):
            return cfg.get(prefix + key)

        required = ("n", "k", "mu_target", "seed")
        missing = [key for key in required if grab(key) is None]
        if missing:
            raise UsageError(f"instance spec missing keys: {', '.join(missing)}")
        spectrum = grab("spectrum")
        if isinstance(spectrum, str):
            spectrum = spectrum.split(",")
        try:
            return cls(
                n=int(grab("n")),
                k=int(grab("k")),
                mu_target=float(grab("mu_target")),
                seed=int(grab("seed")),
                spectrum=tuple(float(s) for s in spectrum) if spectrum is not None else None,
                condition_number=(
                    float(grab("condition_number")) if grab("condition_number") else None
                ),
                profile=grab("profile") or "geometric",
                noise_fraction=float(grab("noise_fraction") or 0.0),
                mu_n=float(grab("mu_n") or 1.0),
            )
        except ValueError as exc:
            raise UsageError(f"bad instance spec: {exc}") from exc


def gen_incoherent_basis(n, k, mu_target, seed, max_tries=MAX_BASIS_TRIES):
    """Gaussian-QR basis rejection-sampled to coherence <= mu_target.

    Raises :class:`CoherenceUnachievable` after ``max_tries`` draws;
    Gaussian bases concentrate near O(log n) coherence, so very low
    targets at small k are genuinely out of reach.
    """
    if mu_target < 1.0:
        raise CoherenceUnachievable(f"coherence floor is 1, target {mu_target!r}")
    rng = as_generator(seed)
    best = math.inf
    for _ in range(max_tries):
        basis, _ = qr_orthonormalize(rng.standard_normal((n, k)))
        mu = coherence(basis)
        if mu <= mu_target:
            return basis
        best = min(best, mu)
    raise CoherenceUnachievable(
        f"no basis with coherence <= {mu_target} in {max_tries} draws (best {best:.3f})"
    )


def gen_noise(u_basis, eigenvalues, fraction, mu_n, seed):
    """Symmetric noise orthogonal to the planted range on both sides.

    Scaled to ||N||_F = fraction * ||M||_F / (1 - fraction), then shrunk
    if needed so the row ceiling (mu_n/n) sigma_k^2 and the entry
    ceiling (mu_n/n) ||A||_F both hold; ``fraction`` is an upper target.
    Raises :class:`NoiseInfeasible` when the ceilings force the
    achieved fraction below half the request.
    """
    U = np.asarray(u_basis, dtype=float)
    n = U.shape[0]
    lam = np.asarray(eigenvalues, dtype=float)
    if fraction == 0.0:
        return np.zeros((n, n))
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must lie in [0, 1)")
    if mu_n <= 0.0:
        raise NoiseInfeasible("mu_n ceiling must be positive")
    rng = as_generator(seed)
    Z = rng.standard_normal((n, n))
    R = (Z + Z.T) / math.sqrt(2.0)
    T = R - U @ (U.T @ R)
    N = T - (T @ U) @ U.T
    m_frob = float(np.linalg.norm(lam))
    sigma_k = float(np.min(np.abs(lam)))
    target = fraction * m_frob / (1.0 - fraction)
    nf = float(np.linalg.norm(N, "fro"))
    if nf == 0.0:
        raise NoiseInfeasible("projected noise vanished; range covers the whole space")
    N *= target / nf

    # enforce the two ceilings by scalar shrinking (A_F shrinks too, so iterate)
    for _ in range(20):
        nf = float(np.linalg.norm(N, "fro"))
        a_frob = math.hypot(m_frob, nf)
        max_row = math.sqrt(float(np.max(np.einsum("ij,ij->i", N, N))))
        max_abs = float(np.max(np.abs(N)))
        s = min(
            1.0,
            math.sqrt(mu_n / n) * sigma_k / max_row,
            (mu_n / n) * a_frob / max_abs,
        )
        if s >= 1.0 - 1e-12:
            break
        N *= s
    nf = float(np.linalg.norm(N, "fro"))
    achieved = nf / math.hypot(m_frob, nf)
    if achieved < fraction / 2.0:
        raise NoiseInfeasible(
            f"ceilings cap the noise fraction at {achieved:.4f} < {fraction}/2"
        )
    return N


def generate_instance(spec):
    """Materialize an :class:`InstanceSpec` into a :class:`GroundTruth`."""
    lam = spec.resolve_spectrum()
    basis = gen_incoherent_basis(
        spec.n, spec.k, spec.mu_target, derive_rng(spec.seed, "basis")
    )
    noise = gen_noise(
        basis.data, lam, spec.noise_fraction, spec.mu_n, derive_rng(spec.seed, "noise")
    )
    return GroundTruth(u_basis=basis, eigenvalues=lam, noise=noise)


def save_instance(dirpath, spec, truth):
    """Write an instance directory: spec + spectrum, basis and noise
    matrices in dense text (exact round trip)."""
    os.makedirs(dirpath, exist_ok=True)
    write_config(os.path.join(dirpath, "instance.cfg"), spec.config_items())
    write_dense_matrix(os.path.join(dirpath, "spectrum.txt"), truth.eigenvalues[:, None])
    write_dense_matrix(os.path.join(dirpath, "basis.txt"), truth.u_basis.data)
    write_dense_matrix(os.path.join(dirpath, "noise.txt"), truth.noise)


def load_instance(dirpath):
    """Read an instance directory back into (spec, truth)."""
    from .linalg import OrthonormalBasis

    cfg_path = os.path.join(dirpath, "instance.cfg")
    if not os.path.isfile(cfg_path):
        raise UsageError(f"no instance.cfg under {dirpath}")
    spec = InstanceSpec.from_config(read_config(cfg_path))
    lam = read_dense_matrix(os.path.join(dirpath, "spectrum.txt")).ravel()
    basis = read_dense_matrix(os.path.join(dirpath, "basis.txt"))
    noise = read_dense_matrix(os.path.join(dirpath, "noise.txt"))
    try:
        truth = GroundTruth(
            u_basis=OrthonormalBasis(basis), eigenvalues=lam, noise=noise
        )
    except ValueError as exc:
        raise UsageError(f"corrupt instance under {dirpath}: {exc}") from exc
    return spec, truth
