"""Recovery of approximately low-rank symmetric matrices from sampled
entries, via median least squares steps smoothed by noisy QR.

The public surface re-exported here is everything the command line
drives: sampling and splitting of observations, the alternating
minimization pipeline, its building blocks, noisy subspace iteration,
and the planted-instance generators used by the experiment harness.
"""

from .completion import (
    Dilation,
    SaltlsConfig,
    SaltlsResult,
    Scores,
    default_parameters,
    default_t_median,
    dilate_rectangular,
    dilate_sample,
    reconstruct_and_score,
    salt_ls,
    select_rank,
)
from .errors import (
    CoherenceUnachievable,
    GapUndefined,
    InvalidProbability,
    InvalidSplit,
    NoiseInfeasible,
    RankDeficient,
    RankFailure,
    SaltlsError,
    UsageError,
    ZeroInput,
)
from .generators import (
    InstanceSpec,
    gen_incoherent_basis,
    gen_noise,
    generate_instance,
    load_instance,
    save_instance,
)
from .initialize import InitReport, initialize
from .least_squares import (
    ErrorDecomposition,
    LsSolveReport,
    entrywise_median,
    error_decomposition,
    ls_update,
    median_ls,
)
from .linalg import (
    OrthonormalBasis,
    PrincipalAngle,
    coherence,
    complement_basis,
    principal_angle,
    qr_orthonormalize,
    rho_coherence,
    spectral_norm,
    spectral_summary,
)
from .nsi import (
    ConvergenceTrace,
    NoiseModel,
    SpectralView,
    TraceRecord,
    admissibility_check,
    nsi_run,
    one_step_bound_check,
)
from .sampling import ObservedSample, bernoulli_sample, p_omega, read_sample, split, write_sample
from .smooth_qr import SmoothQrResult, smooth_qr
from .truth import GroundTruth, spectral_split

__version__ = "0.1.0"

__all__ = [
    "CoherenceUnachievable",
    "ConvergenceTrace",
    "Dilation",
    "ErrorDecomposition",
    "GapUndefined",
    "GroundTruth",
    "InitReport",
    "InstanceSpec",
    "InvalidProbability",
    "InvalidSplit",
    "LsSolveReport",
    "NoiseInfeasible",
    "NoiseModel",
    "ObservedSample",
    "OrthonormalBasis",
    "PrincipalAngle",
    "RankDeficient",
    "RankFailure",
    "SaltlsConfig",
    "SaltlsError",
    "SaltlsResult",
    "Scores",
    "SmoothQrResult",
    "SpectralView",
    "TraceRecord",
    "UsageError",
    "ZeroInput",
    "admissibility_check",
    "bernoulli_sample",
    "coherence",
    "complement_basis",
    "default_parameters",
    "default_t_median",
    "dilate_rectangular",
    "dilate_sample",
    "entrywise_median",
    "error_decomposition",
    "gen_incoherent_basis",
    "gen_noise",
    "generate_instance",
    "initialize",
    "load_instance",
    "ls_update",
    "median_ls",
    "nsi_run",
    "one_step_bound_check",
    "p_omega",
    "principal_angle",
    "qr_orthonormalize",
    "read_sample",
    "reconstruct_and_score",
    "rho_coherence",
    "salt_ls",
    "save_instance",
    "select_rank",
    "smooth_qr",
    "spectral_norm",
    "spectral_split",
    "spectral_summary",
    "split",
    "write_sample",
]
