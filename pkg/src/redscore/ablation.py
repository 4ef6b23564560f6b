"""Ablation protocols: aggregation-strategy comparison and the exhaustive
three-channel combination sweep."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .calibration import GridSpec, calibrate
from .channels import CANONICAL_ORDER
from .errors import DataError
from .fusion import score_dataset
from .rankstats import bootstrap_tau


@dataclass
class AblationRow:
    combination: tuple  # ordered triple of channel names
    weights: object  # FusionWeights at the row's optimum
    tau: float
    mean_score: float
    std_dev: float | None = None  # bootstrap sigma of tau, when requested


def _row(channels, selection, ratings, spec, variant, bootstrap=None, keep_trace=False):
    result = calibrate(
        channels, selection, ratings, spec, variant=variant, keep_trace=keep_trace
    )
    scores = score_dataset(channels, selection, result.best)
    rated = [i for i in scores.per_sample if ratings.get(i) is not None]
    std = None
    if bootstrap is not None:
        runs, seed = bootstrap
        summary = bootstrap_tau(
            np.array([scores.per_sample[i] for i in rated]),
            np.array([ratings[i] for i in rated]),
            runs=runs,
            seed=seed,
            variant=variant,
        )
        std = summary.std_dev
    mean = float(np.mean([scores.per_sample[i] for i in rated]))
    return AblationRow(
        combination=tuple(selection),
        weights=result.best,
        tau=result.best_tau,
        mean_score=mean,
        std_dev=std,
    )


def strategy_ablation(channels, selection, ratings, spec=None, variant="tau_c",
                      bootstrap=None):
    """Compare aggregation strategies at their own grid optima.

    Calibrates three times: lambda fixed to 1 (purely additive), lambda
    fixed to 0 (purely multiplicative), and lambda free (hybrid).
    Returns {"hybrid": row, "additive": row, "multiplicative": row}.
    """
    spec = spec or GridSpec()
    return {
        "hybrid": _row(channels, selection, ratings, spec, variant, bootstrap),
        "additive": _row(channels, selection, ratings, spec.fixed_lambda(1), variant, bootstrap),
        "multiplicative": _row(
            channels, selection, ratings, spec.fixed_lambda(0), variant, bootstrap
        ),
    }


def combination_sweep(channel_pool, channels, ratings, spec=None, variant="tau_c",
                      bootstrap=None):
    """Calibrate every 3-subset of the pool; rows sorted by tau descending.

    Subset order (and therefore weight positions) follows the canonical
    channel order; ties on tau break by subset lexicographic order.
    """
    pool = list(channel_pool)
    if len(pool) < 3:
        raise DataError(f"combination sweep needs a pool of >= 3 channels, got {len(pool)}")
    if len(set(pool)) != len(pool):
        raise DataError("channel pool contains duplicates")
    missing = [name for name in pool if name not in channels]
    if missing:
        raise DataError(f"pool channels not built: {', '.join(missing)}")
    spec = spec or GridSpec()
    rank = {name: k for k, name in enumerate(CANONICAL_ORDER)}
    ordered = sorted(pool, key=lambda n: rank.get(n, len(rank)))
    rows = [
        _row(channels, subset, ratings, spec, variant, bootstrap)
        for subset in combinations(ordered, 3)
    ]
    rows.sort(key=lambda row: (-row.tau, row.combination))
    return rows
