"""Kendall rank correlation (tau-c primary, tau-b auxiliary), significance
tests, and bootstrap resampling.

Pair counts come from an O(n log n) merge count over rank-compressed
values; all counts are exact integers, so the result matches a brute
force O(n^2) pair enumeration exactly. tau-c (Stuart) suits the
rectangular case of continuous metric scores against a handful of
human-rating levels; tau-b is the symmetric tie-corrected variant.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import DataError

VARIANTS = ("tau_c", "tau_b")


@dataclass(frozen=True)
class TauResult:
    tau: float
    variant: str
    n: int
    concordant: int
    discordant: int
    ties_x: int  # pairs tied in x only
    ties_y: int  # pairs tied in y only
    m: int  # min(#distinct x, #distinct y)


@dataclass(frozen=True)
class BootstrapSummary:
    runs: int
    mean: float
    std_dev: float
    ci_low: float
    ci_high: float
    seed: int


def _merge_count_inversions(ranks):
    """Exact number of pairs i < j with ranks[i] > ranks[j].

    Bottom-up merge count: at each level the array consists of sorted
    blocks of the current width; cross-block "greater-before-smaller"
    pairs are counted with one searchsorted over a block-offset
    augmented copy, then adjacent blocks are merged by re-sorting.
    Values must be int ranks in [0, n).
    """
    n = ranks.size
    if n < 2:
        return 0
    cur = ranks.astype(np.int64, copy=True)
    idx = np.arange(n, dtype=np.int64)
    big = np.int64(n)
    total = 0
    width = 1
    while width < n:
        block = idx // width
        is_right = (block % 2 == 1)
        if is_right.any():
            left_block = block[is_right] - 1
            # left blocks are full whenever a right block exists, and all
            # preceding left blocks are full, so their offsets are exact
            aug_left = (cur + block * big)[~is_right]
            queries = cur[is_right] + left_block * big
            pos = np.searchsorted(aug_left, queries, side="right")
            le_counts = pos - (left_block // 2) * width
            total += int((width - le_counts).sum())
        two = 2 * width
        nblocks = -(-n // two)
        pad = nblocks * two - n
        if pad:
            cur = np.concatenate([cur, np.full(pad, big, dtype=np.int64)])
        cur = np.sort(cur.reshape(nblocks, two), axis=1).reshape(-1)
        if pad:
            cur = cur[cur < big]
        width = two
    return total


def _tie_pair_count(ranks, n_levels):
    counts = np.bincount(ranks, minlength=n_levels).astype(np.int64)
    return int((counts * (counts - 1) // 2).sum())


def kendall_pair_counts(x, y):
    """Exact pair counts (n_c, n_d, ties_x_only, ties_y_only, ties_both)
    plus the distinct-value counts of x and y."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"kendall: inputs must be equal-length 1-D, got {x.shape} vs {y.shape}")
    n = x.size
    if n < 2:
        raise DataError(f"kendall: need n >= 2, got {n}")
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise DataError("kendall: non-finite input")
    ux, rx = np.unique(x, return_inverse=True)
    uy, ry = np.unique(y, return_inverse=True)
    order = np.lexsort((ry, rx))
    n_d = _merge_count_inversions(ry[order])
    n0 = n * (n - 1) // 2
    n1 = _tie_pair_count(rx, ux.size)  # tied in x (incl. tied in both)
    n2 = _tie_pair_count(ry, uy.size)
    joint = rx.astype(np.int64) * uy.size + ry
    _, rj = np.unique(joint, return_inverse=True)
    n3 = _tie_pair_count(rj, int(rj.max()) + 1)
    n_c = n0 - n1 - n2 + n3 - n_d
    return n_c, n_d, n1 - n3, n2 - n3, n3, ux.size, uy.size


def kendall_tau(x, y, variant="tau_c"):
    """Kendall rank correlation with tie handling.

    tau_c = 2 m (n_c - n_d) / (n^2 (m - 1)), m = min distinct-value
    counts; tau_b = (n_c - n_d) / sqrt((n0 - n1)(n0 - n2)) with the
    usual tie-pair corrections n1, n2. Both x and y must take at least
    two distinct values.
    """
    if variant not in VARIANTS:
        raise DataError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    n_c, n_d, tx_only, ty_only, t_both, kx, ky = kendall_pair_counts(x, y)
    n = len(x)
    if kx < 2 or ky < 2:
        raise DataError("kendall: constant input (fewer than 2 distinct values)")
    m = min(kx, ky)
    if variant == "tau_c":
        tau = 2.0 * m * (n_c - n_d) / (n * n * (m - 1))
    else:
        n0 = n * (n - 1) // 2
        n1 = tx_only + t_both
        n2 = ty_only + t_both
        tau = (n_c - n_d) / math.sqrt((n0 - n1) * (n0 - n2))
    return TauResult(
        tau=float(tau),
        variant=variant,
        n=n,
        concordant=n_c,
        discordant=n_d,
        ties_x=tx_only,
        ties_y=ty_only,
        m=m,
    )


def tau_p_value(result, method="normal", data=None, iters=999, seed=0):
    """Two-sided significance of an observed tau.

    ``normal`` uses z = 3 (n_c - n_d) / sqrt(n (n-1) (2n+5) / 2);
    ``permutation`` shuffles y and reports the add-one-smoothed fraction
    of shuffles with |tau| >= |observed| (requires data=(x, y)).
    """
    if method == "normal":
        n = result.n
        if n < 4:
            raise DataError(f"normal approximation needs n >= 4, got {n}")
        diff = result.concordant - result.discordant
        z = 3.0 * diff / math.sqrt(n * (n - 1) * (2 * n + 5) / 2.0)
        return math.erfc(abs(z) / math.sqrt(2.0))
    if method == "permutation":
        if data is None:
            raise DataError("permutation method needs data=(x, y)")
        x, y = (np.asarray(v, dtype=np.float64) for v in data)
        if iters < 1:
            raise DataError(f"permutation needs iters >= 1, got {iters}")
        rng = np.random.default_rng(seed)
        observed = abs(result.tau)
        hits = 0
        for _ in range(iters):
            perm = rng.permutation(y)
            if abs(kendall_tau(x, perm, result.variant).tau) >= observed:
                hits += 1
        return (1 + hits) / (iters + 1)
    raise DataError(f"unknown p-value method {method!r}")


_MAX_REDRAWS = 100


def bootstrap_tau(scores, ratings, runs=1000, seed=0, variant="tau_c", workers=1):
    """Bootstrap distribution of tau under joint pair resampling.

    Draws n (score, rating) pairs with replacement per run and
    recomputes tau; reports the mean, sample standard deviation, and
    2.5/97.5 percentile interval. Each run uses the (seed, run index)
    substream, so results do not depend on execution order; degenerate
    resamples (a constant column) are redrawn up to 100 times.
    """
    scores = np.asarray(scores, dtype=np.float64)
    ratings = np.asarray(ratings, dtype=np.float64)
    if scores.shape != ratings.shape or scores.ndim != 1:
        raise DataError("bootstrap: scores and ratings must be equal-length 1-D")
    if runs < 1:
        raise DataError(f"bootstrap: runs must be >= 1, got {runs}")
    n = scores.size
    taus = np.empty(runs, dtype=np.float64)

    def one_run(run):
        rng = np.random.default_rng([seed, run])
        for attempt in range(_MAX_REDRAWS + 1):
            idx = rng.integers(0, n, size=n)
            s = scores[idx]
            r = ratings[idx]
            if np.ptp(s) > 0.0 and np.ptp(r) > 0.0:
                break
        else:
            raise DataError(
                f"bootstrap run {run}: resample still degenerate after "
                f"{_MAX_REDRAWS} redraws"
            )
        taus[run] = kendall_tau(s, r, variant).tau

    if workers > 1 and runs > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(one_run, range(runs)))
    else:
        for run in range(runs):
            one_run(run)
    std = float(np.std(taus, ddof=1)) if runs > 1 else 0.0
    lo, hi = np.percentile(taus, [2.5, 97.5])
    return BootstrapSummary(
        runs=runs,
        mean=float(np.mean(taus)),
        std_dev=std,
        ci_low=float(lo),
        ci_high=float(hi),
        seed=seed,
    )
