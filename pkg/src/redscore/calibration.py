"""Constrained grid search over fusion weights against human ratings.

The grid enumerates exact-fraction weight triples (step 1/20 by
default, each weight >= 3/20) crossed with lambda values (step 1/10),
evaluates tau for every point on squashed-once channels, and returns
the argmax with a deterministic lexicographic tie-break plus a
one-step sensitivity neighborhood.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import DataError, InfeasibleGridError
from .fusion import LAMBDA_DENOM, WEIGHT_DENOM, FusionWeights, squash
from .rankstats import kendall_tau, tau_p_value

SIGNIFICANCE_LEVEL = 0.05


@dataclass(frozen=True)
class GridSpec:
    weight_step: Fraction = Fraction(1, 20)
    min_weight: Fraction = Fraction(3, 20)
    lambda_step: Fraction = Fraction(1, 10)
    lambda_range: tuple = (Fraction(0), Fraction(1))

    def __post_init__(self):
        ws, mw, ls = self.weight_step, self.min_weight, self.lambda_step
        if ws <= 0 or (1 / ws).denominator != 1:
            raise DataError(f"weight_step {ws} must divide 1 exactly")
        if (ws * WEIGHT_DENOM).denominator != 1:
            raise DataError(f"weight_step {ws} must align with the 1/{WEIGHT_DENOM} grid")
        if ls <= 0 or (1 / ls).denominator != 1:
            raise DataError(f"lambda_step {ls} must divide 1 exactly")
        if (ls * LAMBDA_DENOM).denominator != 1:
            raise DataError(f"lambda_step {ls} must align with the 1/{LAMBDA_DENOM} grid")
        if mw < 0 or (mw / ws).denominator != 1:
            raise DataError(f"min_weight {mw} must be a multiple of weight_step {ws}")
        lo, hi = self.lambda_range
        if not (0 <= lo <= hi <= 1):
            raise DataError(f"lambda_range {self.lambda_range} must satisfy 0 <= lo <= hi <= 1")
        for bound in (lo, hi):
            if (bound / ls).denominator != 1:
                raise DataError(f"lambda bound {bound} must be a multiple of lambda_step {ls}")

    @classmethod
    def from_floats(cls, weight_step=0.05, min_weight=0.15, lambda_step=0.1,
                    lambda_range=(0.0, 1.0)):
        def frac(v):
            f = Fraction(v).limit_denominator(10_000)
            if abs(float(f) - v) > 1e-9:
                raise DataError(f"{v} is not an exact grid fraction")
            return f

        return cls(
            weight_step=frac(weight_step),
            min_weight=frac(min_weight),
            lambda_step=frac(lambda_step),
            lambda_range=(frac(lambda_range[0]), frac(lambda_range[1])),
        )

    def fixed_lambda(self, lam):
        lam = Fraction(lam)
        return GridSpec(self.weight_step, self.min_weight, self.lambda_step, (lam, lam))


@dataclass
class SensitivityEntry:
    weights: FusionWeights
    tau: float
    delta: float  # tau - best_tau


@dataclass
class CalibrationResult:
    best: FusionWeights
    best_tau: float
    p_value: float
    grid_trace: list = field(default_factory=list)  # (FusionWeights, tau)
    sensitivity: list = field(default_factory=list)
    significant: bool = False

    @property
    def max_degradation(self):
        return min((e.delta for e in self.sensitivity), default=0.0)


def enumerate_grid(spec):
    """All feasible FusionWeights on the spec's grid, in lexicographic
    (alpha, beta, gamma, lambda) order."""
    units = int(1 / spec.weight_step)
    min_units = int(spec.min_weight / spec.weight_step)
    if 3 * min_units > units:
        raise InfeasibleGridError(
            f"min_weight {spec.min_weight} x 3 exceeds 1; no feasible triple"
        )
    lam_units = int(1 / spec.lambda_step)
    lo = int(spec.lambda_range[0] * lam_units)
    hi = int(spec.lambda_range[1] * lam_units)
    lambdas = [Fraction(k, lam_units) for k in range(lo, hi + 1)]
    out = []
    for a in range(min_units, units - 2 * min_units + 1):
        for b in range(min_units, units - a - min_units + 1):
            c = units - a - b
            for lam in lambdas:
                out.append(
                    FusionWeights(
                        Fraction(a, units), Fraction(b, units), Fraction(c, units), lam
                    )
                )
    return out


def _rated_matrix(channels, selection, ratings):
    """Align the three selected channels with the rated samples.

    ``ratings`` is a mapping sample_id -> rating; samples without a
    rating are ignored. Returns (raw (n, 3) matrix, rating vector).
    """
    selection = tuple(selection)
    if len(selection) != 3:
        raise DataError(f"selection must name exactly 3 channels, got {selection}")
    try:
        vecs = [channels[name] for name in selection]
    except KeyError as exc:
        raise DataError(f"channel {exc} not built") from None
    ids = [i for i in vecs[0].values if ratings.get(i) is not None]
    if not ids:
        raise DataError("no rated samples available for calibration")
    for v in vecs[1:]:
        missing = [i for i in ids if i not in v.values]
        if missing:
            raise DataError(f"channel {v.name!r} lacks rated samples (e.g. {missing[0]!r})")
    raw = np.column_stack([v.array(ids) for v in vecs])
    r = np.array([ratings[i] for i in ids], dtype=np.float64)
    if np.unique(r).size < 2:
        raise DataError("ratings are constant; correlation is undefined")
    return raw, r


def _grid_taus(Z, lnZ, ratings, weights_list, variant, workers=1):
    taus = np.empty(len(weights_list))

    def evaluate(span):
        for k in span:
            a, b, g, lam = weights_list[k].as_floats()
            wv = np.array([a, b, g])
            rs = lam * (Z @ wv) + (1.0 - lam) * np.exp(lnZ @ wv)
            taus[k] = kendall_tau(rs, ratings, variant).tau

    if workers > 1 and len(weights_list) > 1:
        from concurrent.futures import ThreadPoolExecutor

        spans = np.array_split(np.arange(len(weights_list)), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(evaluate, spans))
    else:
        evaluate(range(len(weights_list)))
    return taus


def calibrate(channels, selection, ratings, spec=None, variant="tau_c",
              pvalue_method="normal", perm_iters=999, seed=0, keep_trace=True,
              workers=1):
    """Find the tau-maximizing weights over the constrained grid.

    Channels are squashed once and reused for all grid points. Ties on
    tau resolve to the lexicographically smallest numerator tuple. The
    best point's p-value is computed with the requested method;
    ``significant`` records p < 0.05.
    """
    spec = spec or GridSpec()
    raw, r = _rated_matrix(channels, selection, ratings)
    Z = squash(raw)
    lnZ = np.log(Z)
    grid = enumerate_grid(spec)
    taus = _grid_taus(Z, lnZ, r, grid, variant, workers=workers)
    best_idx = 0
    for k in range(1, len(grid)):
        if taus[k] > taus[best_idx]:  # lex order makes first-max the tie-break
            best_idx = k
    best = grid[best_idx]
    best_tau = float(taus[best_idx])
    best_result = _tau_at(Z, lnZ, r, best, variant)
    p = tau_p_value(
        best_result,
        method=pvalue_method,
        data=(_rs_values(Z, lnZ, best), r),
        iters=perm_iters,
        seed=seed,
    )
    neighbors = _neighborhood(best, spec)
    sens = [
        SensitivityEntry(w, t, t - best_tau)
        for w, t in zip(neighbors, _grid_taus(Z, lnZ, r, neighbors, variant))
    ]
    return CalibrationResult(
        best=best,
        best_tau=best_tau,
        p_value=float(p),
        grid_trace=list(zip(grid, taus.tolist())) if keep_trace else [],
        sensitivity=sens,
        significant=bool(p < SIGNIFICANCE_LEVEL),
    )


def _rs_values(Z, lnZ, w):
    a, b, g, lam = w.as_floats()
    wv = np.array([a, b, g])
    return lam * (Z @ wv) + (1.0 - lam) * np.exp(lnZ @ wv)


def _tau_at(Z, lnZ, ratings, w, variant):
    return kendall_tau(_rs_values(Z, lnZ, w), ratings, variant)


def _neighborhood(best, spec):
    """Feasible grid points one step from ``best``: lambda +- one step,
    and one weight-step transferred between each ordered pair of
    (alpha, beta, gamma)."""
    step = spec.weight_step
    lam_step = spec.lambda_step
    lo, hi = spec.lambda_range
    out = []
    for lam in (best.lam - lam_step, best.lam + lam_step):
        if lo <= lam <= hi:
            out.append(FusionWeights(best.alpha, best.beta, best.gamma, lam))
    w = [best.alpha, best.beta, best.gamma]
    for i in range(3):
        for j in range(3):
            if i == j:
                continue
            moved = list(w)
            moved[i] -= step
            moved[j] += step
            if moved[i] >= spec.min_weight and moved[j] <= 1:
                out.append(FusionWeights(moved[0], moved[1], moved[2], best.lam))
    return out


def sensitivity(channels, selection, ratings, best, spec=None, variant="tau_c"):
    """Tau deltas at every feasible one-step neighbor of ``best``."""
    spec = spec or GridSpec()
    raw, r = _rated_matrix(channels, selection, ratings)
    Z = squash(raw)
    lnZ = np.log(Z)
    best_tau = _tau_at(Z, lnZ, r, best, variant).tau
    neighbors = _neighborhood(best, spec)
    taus = _grid_taus(Z, lnZ, r, neighbors, variant)
    return [SensitivityEntry(w, float(t), float(t - best_tau)) for w, t in zip(neighbors, taus)]
