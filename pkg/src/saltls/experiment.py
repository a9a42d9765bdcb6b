"""Experiment harness: single recovery cells and (p, seed) sweeps.

A cell samples one observation set from a planted instance, runs the
full pipeline, and scores the reconstruction against the truth.  A
sweep runs a grid of sampling rates by Monte Carlo seeds and writes a
delimited table; wall times go to a separate sidecar so the main table
is bit-reproducible across hosts.
"""

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from functools import partial
from typing import Optional, Tuple

import numpy as np

from ._rng import derive_rng, derive_seed
from .completion import (
    SaltlsConfig,
    default_parameters,
    default_t_median,
    reconstruct_and_score,
    salt_ls,
)
from .errors import UsageError
from .generators import InstanceSpec, generate_instance
from .nsi import NoiseModel, SpectralView, basis_near, nsi_run
from .sampling import bernoulli_sample
from .textio import FLOAT_FMT, read_config

SWEEP_HEADER = "p,seed,subspace_err,frob_rel_err,success"
TIMING_HEADER = "p,seed,seconds"


def resolve_config(
    truth,
    eps=1e-3,
    c_mu=1.0,
    c_L=4.0,
    L=None,
    mu=None,
    t_median=None,
    mu_init=None,
    init_iters=None,
    seed=0,
):
    """Fill a :class:`SaltlsConfig` from instance-derived defaults.

    Any argument passed explicitly wins over the derived value.  The
    smoothing target and round count come from the gap and coherence of
    the truth; the power iteration budget scales with 1/gamma.
    """
    gamma = truth.gamma_k
    mu_default, L_default = default_parameters(
        truth.n, truth.k, eps, gamma, truth.mu_star, c_mu=c_mu, c_L=c_L
    )
    if init_iters is None:
        init_iters = int(math.ceil(10.0 * math.log(truth.n) / gamma))
    return SaltlsConfig(
        k=truth.k,
        eps=eps,
        L=L if L is not None else L_default,
        mu=mu if mu is not None else mu_default,
        t_median=t_median if t_median is not None else default_t_median(truth.n),
        mu_init=mu_init,
        init_iters=init_iters,
        seed=seed,
    )


@dataclass(frozen=True)
class CellResult:
    """One (p, seed) recovery outcome."""

    p: float
    seed: int
    subspace_err: float
    frob_rel_err: float
    success: bool
    seconds: float


def run_cell(truth, p, seed, config):
    """Sample, recover, score.  Success means the low-rank part is
    reproduced within config.eps relative Frobenius error."""
    t0 = time.perf_counter()
    sample = bernoulli_sample(truth.matrix, p, derive_rng(seed, "sample"))
    cfg = replace(config, seed=derive_seed(seed, "algo"))
    result = salt_ls(sample, cfg, truth=truth)
    scores = reconstruct_and_score(result.x, result.y, truth)
    return CellResult(
        p=float(p),
        seed=int(seed),
        subspace_err=scores.subspace_err,
        frob_rel_err=scores.frob_rel_err,
        success=scores.frob_rel_err <= cfg.eps,
        seconds=time.perf_counter() - t0,
    )


@dataclass(frozen=True)
class ExperimentSpec:
    """A sweep: one instance, a grid of rates, a block of seeds."""

    instance: InstanceSpec
    p_grid: Tuple[float, ...]
    seeds: Tuple[int, ...]
    eps: float = 1e-3
    c_mu: float = 1.0
    c_L: float = 4.0
    L: Optional[int] = None
    mu: Optional[float] = None
    t_median: Optional[int] = None
    mu_init: Optional[float] = None
    init_iters: Optional[int] = None

    def __post_init__(self):
        if not self.p_grid or not self.seeds:
            raise ValueError("p_grid and seeds must be nonempty")
        object.__setattr__(self, "p_grid", tuple(float(p) for p in self.p_grid))
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))

    @classmethod
    def from_config(cls, cfg):
        """Parse a flat config: instance.* keys plus sweep controls.

        ``seeds`` is either a single count (meaning 0..count-1) or an
        explicit comma list; ``p_grid`` is a comma list of rates.
        """
        instance = InstanceSpec.from_config(cfg, prefix="instance.")
        p_raw = cfg.get("p_grid")
        seeds_raw = cfg.get("seeds")
        if not p_raw or not seeds_raw:
            raise UsageError("sweep config needs p_grid and seeds")
        try:
            p_grid = tuple(float(tok) for tok in p_raw.split(","))
            if "," in seeds_raw:
                seeds = tuple(int(tok) for tok in seeds_raw.split(","))
            else:
                seeds = tuple(range(int(seeds_raw)))
        except ValueError as exc:
            raise UsageError(f"bad sweep grid: {exc}") from exc

        def opt(key, cast):
            raw = cfg.get("algo." + key)
            return cast(raw) if raw is not None else None

        try:
            return cls(
                instance=instance,
                p_grid=p_grid,
                seeds=seeds,
                eps=opt("eps", float) if cfg.get("algo.eps") else 1e-3,
                c_mu=opt("c_mu", float) if cfg.get("algo.c_mu") else 1.0,
                c_L=opt("c_L", float) if cfg.get("algo.c_L") else 4.0,
                L=opt("L", int),
                mu=opt("mu", float),
                t_median=opt("t_median", int),
                mu_init=opt("mu_init", float),
                init_iters=opt("init_iters", int),
            )
        except ValueError as exc:
            raise UsageError(f"bad algo override: {exc}") from exc

    def build_config(self, truth):
        return resolve_config(
            truth,
            eps=self.eps,
            c_mu=self.c_mu,
            c_L=self.c_L,
            L=self.L,
            mu=self.mu,
            t_median=self.t_median,
            mu_init=self.mu_init,
            init_iters=self.init_iters,
        )


def _cell_task(truth, config, cell):
    p, seed = cell
    return run_cell(truth, p, seed, config)


def run_sweep(spec, jobs=1, truth=None):
    """All (p, seed) cells of a sweep, sorted by (p, seed).

    ``jobs > 1`` fans cells over processes; results are identical to the
    serial run because every cell derives its own generators.
    """
    if truth is None:
        truth = generate_instance(spec.instance)
    config = spec.build_config(truth)
    cells = [(p, seed) for p in spec.p_grid for seed in spec.seeds]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(partial(_cell_task, truth, config), cells))
    else:
        results = [_cell_task(truth, config, cell) for cell in cells]
    return sorted(results, key=lambda r: (r.p, r.seed))


def write_sweep_csv(path, results):
    """The main sweep table, success as 0/1, floats at full precision."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(SWEEP_HEADER + "\n")
        for r in results:
            handle.write(
                "%s,%d,%s,%s,%d\n"
                % (
                    FLOAT_FMT % r.p,
                    r.seed,
                    FLOAT_FMT % r.subspace_err,
                    FLOAT_FMT % r.frob_rel_err,
                    int(r.success),
                )
            )


def write_timing_csv(path, results):
    """Wall-time sidecar; not reproducible across hosts by nature."""
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(TIMING_HEADER + "\n")
        for r in results:
            handle.write("%s,%d,%.6f\n" % (FLOAT_FMT % r.p, r.seed, r.seconds))


def read_sweep_csv(path):
    """Rows of a sweep table as :class:`CellResult` (seconds set to 0)."""
    with open(path, "r", encoding="utf-8") as handle:
        lines = [ln.strip() for ln in handle if ln.strip()]
    if not lines or lines[0] != SWEEP_HEADER:
        raise UsageError(f"{path}: expected header {SWEEP_HEADER!r}")
    out = []
    for ln in lines[1:]:
        parts = ln.split(",")
        if len(parts) != 5:
            raise UsageError(f"{path}: bad row {ln!r}")
        try:
            out.append(
                CellResult(
                    p=float(parts[0]),
                    seed=int(parts[1]),
                    subspace_err=float(parts[2]),
                    frob_rel_err=float(parts[3]),
                    success=bool(int(parts[4])),
                    seconds=0.0,
                )
            )
        except ValueError as exc:
            raise UsageError(f"{path}: bad row {ln!r}") from exc
    return out


def success_rates(results):
    """Fraction of successful seeds per rate, as (p, rate) pairs sorted
    by p."""
    by_p = {}
    for r in results:
        by_p.setdefault(r.p, []).append(r.success)
    return [(p, float(np.mean(flags))) for p, flags in sorted(by_p.items())]


def parse_noise_model(text):
    """Noise model from its command line form.

    ``zero``, ``gaussian:SCALE`` (entrywise standard deviation
    SCALE/sqrt(n)), or ``admissible:EPS`` (Gaussian rescaled each step
    to sit exactly on the admissibility budget with floor EPS).
    """
    head, _, arg = text.partition(":")
    if head == "zero":
        if arg:
            raise UsageError("zero noise takes no argument")
        return NoiseModel.zero()
    if head == "gaussian":
        try:
            return NoiseModel.gaussian(float(arg))
        except ValueError as exc:
            raise UsageError(f"bad gaussian scale {arg!r}") from exc
    if head == "admissible":
        try:
            return NoiseModel.admissible_gaussian(float(arg))
        except ValueError as exc:
            raise UsageError(f"bad admissible floor {arg!r}") from exc
    raise UsageError(f"unknown noise model {text!r}")


def run_nsi_cell(truth, L, noise, x0_sin, seed):
    """One subspace iteration run against a planted instance.

    The start basis is planted at largest-angle sine ``x0_sin`` from the
    true range; per-step noise and the start perturbation both derive
    from ``seed``.
    """
    x0 = basis_near(truth.u_basis, x0_sin, derive_rng(seed, "nsi-start"))
    _, trace = nsi_run(
        truth.matrix,
        truth.k,
        L,
        noise,
        x0,
        derive_rng(seed, "nsi-noise"),
        view=SpectralView.from_truth(truth),
    )
    return trace


def load_experiment_spec(path):
    if not os.path.isfile(path):
        raise UsageError(f"no such config: {path}")
    return ExperimentSpec.from_config(read_config(path))
