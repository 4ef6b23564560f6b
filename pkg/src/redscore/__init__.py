"""redscore: hybrid image-caption scoring from precomputed embeddings.

Combines a Gaussian mutual-information channel, cycle-generation
perceptual similarity, and text-embedding similarity into one fused
score, with grid-search weight calibration against human judgments and
the rank-correlation machinery (Kendall tau-c, bootstrap, ablations)
needed to evaluate it.
"""

__version__ = "0.1.0"

from .bundle import read_bundle, write_bundle
from .calibration import (
    CalibrationResult,
    GridSpec,
    SensitivityEntry,
    calibrate,
    enumerate_grid,
    sensitivity,
)
from .channels import (
    CANONICAL_ORDER,
    CHANNEL_NAMES,
    ChannelVector,
    build_channels,
    cosine,
    dino_sim,
    gte_score,
    lpips_norm,
    required_tables,
)
from .data import (
    Dataset,
    EmbeddingTable,
    JoinReport,
    Sample,
    filter_identity_pairs,
    load_dataset,
    load_records,
    validate_join,
    write_records,
)
from .errors import (
    BundleFormatError,
    DataError,
    DegenerateDataError,
    InfeasibleGridError,
    JoinError,
    RedscoreError,
)
from .fusion import (
    DEFAULT_WEIGHTS,
    FusionWeights,
    ScoreVector,
    fuse_rows,
    redemption_score,
    score_dataset,
    squash,
)
from .gaussian import (
    GaussianStats,
    fit_gaussian_stats,
    fit_mid_stats,
    mid_scores,
    mutual_information,
    pmi,
    pmi_many,
)
from .ablation import AblationRow, combination_sweep, strategy_ablation
from .rankstats import BootstrapSummary, TauResult, bootstrap_tau, kendall_tau, tau_p_value

__all__ = [
    "__version__",
    "AblationRow",
    "BootstrapSummary",
    "BundleFormatError",
    "CalibrationResult",
    "CANONICAL_ORDER",
    "CHANNEL_NAMES",
    "ChannelVector",
    "DataError",
    "Dataset",
    "DEFAULT_WEIGHTS",
    "DegenerateDataError",
    "EmbeddingTable",
    "FusionWeights",
    "GaussianStats",
    "GridSpec",
    "InfeasibleGridError",
    "JoinError",
    "JoinReport",
    "RedscoreError",
    "Sample",
    "ScoreVector",
    "SensitivityEntry",
    "TauResult",
    "bootstrap_tau",
    "build_channels",
    "calibrate",
    "combination_sweep",
    "cosine",
    "dino_sim",
    "enumerate_grid",
    "filter_identity_pairs",
    "fit_gaussian_stats",
    "fit_mid_stats",
    "fuse_rows",
    "gte_score",
    "kendall_tau",
    "load_dataset",
    "load_records",
    "lpips_norm",
    "mid_scores",
    "mutual_information",
    "pmi",
    "pmi_many",
    "read_bundle",
    "redemption_score",
    "required_tables",
    "score_dataset",
    "sensitivity",
    "squash",
    "strategy_ablation",
    "tau_p_value",
    "validate_join",
    "write_bundle",
    "write_records",
]
