"""Squash normalization and the hybrid fused score.

Every raw channel value is squashed into (0, 1) by the parameter-free
map x -> ((x / (1 + |x|)) + 1) / 2, then three squashed channels are
combined as lambda * L + (1 - lambda) * M where L is their weighted
arithmetic mean and M their weighted geometric mean. The geometric part
is evaluated in log space to avoid pow-accumulated error near 0.
"""

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DataError

WEIGHT_DENOM = 20
LAMBDA_DENOM = 10


@dataclass(frozen=True, order=True)
class FusionWeights:
    """Exact-fraction weights (alpha, beta, gamma) on the simplex plus the
    interpolation parameter lambda.

    Weights live on the twentieths grid, lambda on tenths; exactness
    keeps feasibility checks (alpha + beta + gamma = 1) out of float
    arithmetic.
    """

    alpha: Fraction
    beta: Fraction
    gamma: Fraction
    lam: Fraction

    def __post_init__(self):
        for name, w in (("alpha", self.alpha), ("beta", self.beta), ("gamma", self.gamma)):
            if not isinstance(w, Fraction):
                raise DataError(f"{name} must be a Fraction, got {type(w).__name__}")
            if w < 0:
                raise DataError(f"{name} = {w} must be >= 0")
            if (w * WEIGHT_DENOM).denominator != 1:
                raise DataError(f"{name} = {w} is not on the 1/{WEIGHT_DENOM} grid")
        if self.alpha + self.beta + self.gamma != 1:
            raise DataError(
                f"weights must sum to 1 exactly, got {self.alpha + self.beta + self.gamma}"
            )
        if not isinstance(self.lam, Fraction):
            raise DataError(f"lambda must be a Fraction, got {type(self.lam).__name__}")
        if not (0 <= self.lam <= 1):
            raise DataError(f"lambda = {self.lam} outside [0, 1]")
        if (self.lam * LAMBDA_DENOM).denominator != 1:
            raise DataError(f"lambda = {self.lam} is not on the 1/{LAMBDA_DENOM} grid")

    @classmethod
    def from_floats(cls, alpha, beta, gamma, lam):
        """Snap float weights onto the exact grid, rejecting off-grid values."""
        def snap(v, denom, name):
            num = round(v * denom)
            if abs(v * denom - num) > 1e-9:
                raise DataError(f"{name} = {v} is not on the 1/{denom} grid")
            return Fraction(num, denom)

        return cls(
            snap(alpha, WEIGHT_DENOM, "alpha"),
            snap(beta, WEIGHT_DENOM, "beta"),
            snap(gamma, WEIGHT_DENOM, "gamma"),
            snap(lam, LAMBDA_DENOM, "lambda"),
        )

    def numerators(self):
        """(alpha, beta, gamma) in twentieths and lambda in tenths, as ints."""
        return (
            int(self.alpha * WEIGHT_DENOM),
            int(self.beta * WEIGHT_DENOM),
            int(self.gamma * WEIGHT_DENOM),
            int(self.lam * LAMBDA_DENOM),
        )

    def as_floats(self):
        return (float(self.alpha), float(self.beta), float(self.gamma), float(self.lam))

    def __str__(self):
        a, b, g, l = self.as_floats()
        return f"(a={a:.2f}, b={b:.2f}, g={g:.2f}, lambda={l:.1f})"


#: Default weights: the tuned configuration shipped with the tool.
DEFAULT_WEIGHTS = FusionWeights(
    Fraction(3, 20), Fraction(7, 20), Fraction(10, 20), Fraction(8, 10)
)


def squash(x):
    """Map any real (or array of reals) into (0, 1), strictly increasing.

    squash(x) = ((x / (1 + |x|)) + 1) / 2; odd-symmetric about (0, 1/2).
    """
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise DataError("squash: non-finite input")
    out = (arr / (1.0 + np.abs(arr)) + 1.0) / 2.0
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def redemption_score(z, weights):
    """Hybrid fused score of three squashed channel values.

    lambda * (alpha*z1 + beta*z2 + gamma*z3)
      + (1 - lambda) * z1^alpha * z2^beta * z3^gamma
    with the geometric part computed as exp(sum w_i * ln z_i).
    """
    z1, z2, z3 = (float(v) for v in z)
    for v in (z1, z2, z3):
        if not math.isfinite(v) or not (0.0 < v < 1.0):
            raise DataError(f"redemption_score: z component {v} outside (0, 1)")
    a, b, g, lam = weights.as_floats()
    linear = a * z1 + b * z2 + g * z3
    geometric = math.exp(a * math.log(z1) + b * math.log(z2) + g * math.log(z3))
    return lam * linear + (1.0 - lam) * geometric


def fuse_rows(Z, weights):
    """Vectorized redemption_score over an (n, 3) array of squashed values."""
    Z = np.asarray(Z, dtype=np.float64)
    if Z.ndim != 2 or Z.shape[1] != 3:
        raise DataError(f"fuse_rows: expected (n, 3) array, got {Z.shape}")
    if not np.all((Z > 0.0) & (Z < 1.0)):
        raise DataError("fuse_rows: squashed values must lie in (0, 1)")
    a, b, g, lam = weights.as_floats()
    w = np.array([a, b, g])
    linear = Z @ w
    geometric = np.exp(np.log(Z) @ w)
    return lam * linear + (1.0 - lam) * geometric


@dataclass
class ScoreVector:
    """Fused per-sample scores with the configuration that produced them."""

    per_sample: dict  # sample_id -> score in [0, 1]
    weights: FusionWeights
    channels_used: tuple
    mean: float


def score_dataset(channels, selection, weights):
    """Squash the three selected raw channels per sample, then fuse.

    ``selection`` is an ordered triple of channel names; weights apply
    positionally. All three channels must cover the same sample set.
    """
    selection = tuple(selection)
    if len(selection) != 3:
        raise DataError(f"selection must name exactly 3 channels, got {selection}")
    try:
        vecs = [channels[name] for name in selection]
    except KeyError as exc:
        raise DataError(f"channel {exc} not built") from None
    ids = list(vecs[0].values)
    id_set = set(ids)
    for v in vecs[1:]:
        if set(v.values) != id_set:
            raise DataError(
                f"channels {vecs[0].name!r} and {v.name!r} cover different sample sets"
            )
    raw = np.column_stack([v.array(ids) for v in vecs])
    rs = fuse_rows(squash(raw), weights)
    assert np.all((rs >= 0.0) & (rs <= 1.0))
    return ScoreVector(
        per_sample={i: float(s) for i, s in zip(ids, rs)},
        weights=weights,
        channels_used=selection,
        mean=float(np.mean(rs)) if len(ids) else float("nan"),
    )
