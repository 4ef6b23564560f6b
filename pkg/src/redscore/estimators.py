"""Scikit-learn style estimators wrapping the functional core.

These give the scoring pipeline a fit/transform surface so it composes
with sklearn tooling (pipelines, grid search, cloning). The functional
modules remain the source of truth; estimators only adapt conventions
(constructor params mirror attributes, fitted state carries trailing
underscores, input validation via check_array).
"""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError
from sklearn.utils import check_array

from .calibration import GridSpec, calibrate
from .fusion import FusionWeights, fuse_rows, squash
from .gaussian import fit_gaussian_stats, mutual_information, pmi_many


class MutualInformationScorer(BaseEstimator):
    """Gaussian PMI scorer over paired embeddings.

    fit(X, Y) estimates means and covariances of the paired rows;
    score_samples(X, Y) returns per-pair point-wise mutual information
    and score(X, Y) its mean.
    """

    def __init__(self, shrinkage=None):
        self.shrinkage = shrinkage

    def fit(self, X, Y):
        X = check_array(X, dtype=np.float64)
        Y = check_array(Y, dtype=np.float64)
        self.stats_ = fit_gaussian_stats(X, Y, shrinkage=self.shrinkage)
        self.mutual_information_ = mutual_information(self.stats_)
        self.shrinkage_used_ = self.stats_.shrinkage_used
        return self

    def _check_fitted(self):
        if not hasattr(self, "stats_"):
            raise NotFittedError("MutualInformationScorer is not fitted; call fit first")

    def score_samples(self, X, Y):
        self._check_fitted()
        X = check_array(X, dtype=np.float64)
        Y = check_array(Y, dtype=np.float64)
        return pmi_many(self.stats_, X, Y)

    def score(self, X, Y):
        return float(np.mean(self.score_samples(X, Y)))


class RedemptionScorer(BaseEstimator, TransformerMixin):
    """Fixed-weight fused scorer over raw three-channel rows.

    transform(X) squashes each column of an (n, 3) raw channel matrix
    and fuses with the configured weights; column order must match the
    weight order.
    """

    def __init__(self, alpha=0.15, beta=0.35, gamma=0.50, lam=0.80):
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.lam = lam

    def _weights(self):
        return FusionWeights.from_floats(self.alpha, self.beta, self.gamma, self.lam)

    def fit(self, X, y=None):
        check_array(X, dtype=np.float64)
        self.weights_ = self._weights()
        return self

    def transform(self, X):
        if not hasattr(self, "weights_"):
            raise NotFittedError("RedemptionScorer is not fitted; call fit first")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != 3:
            raise ValueError(f"expected 3 channel columns, got {X.shape[1]}")
        return fuse_rows(squash(X), self.weights_)

    def predict(self, X):
        return self.transform(X)


class WeightCalibrator(BaseEstimator):
    """Grid-search calibrator: fit(X, y) finds the tau-maximizing weights
    of raw channel columns X against ratings y."""

    def __init__(self, min_weight=0.15, weight_step=0.05, lambda_step=0.1,
                 variant="tau_c"):
        self.min_weight = min_weight
        self.weight_step = weight_step
        self.lambda_step = lambda_step
        self.variant = variant

    def fit(self, X, y):
        X = check_array(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        if X.shape[1] != 3:
            raise ValueError(f"expected 3 channel columns, got {X.shape[1]}")
        if y.shape != (X.shape[0],):
            raise ValueError("y must be a rating per row of X")
        spec = GridSpec.from_floats(
            weight_step=self.weight_step,
            min_weight=self.min_weight,
            lambda_step=self.lambda_step,
        )
        ids = [str(i) for i in range(X.shape[0])]
        channels = {
            name: _ColumnChannel(name, dict(zip(ids, X[:, k])))
            for k, name in enumerate(("c0", "c1", "c2"))
        }
        ratings = dict(zip(ids, y))
        result = calibrate(
            channels, ("c0", "c1", "c2"), ratings, spec, variant=self.variant,
            keep_trace=False,
        )
        self.result_ = result
        self.best_weights_ = result.best
        self.best_tau_ = result.best_tau
        self.p_value_ = result.p_value
        return self

    def predict(self, X):
        if not hasattr(self, "best_weights_"):
            raise NotFittedError("WeightCalibrator is not fitted; call fit first")
        X = check_array(X, dtype=np.float64)
        return fuse_rows(squash(X), self.best_weights_)


class _ColumnChannel:
    """Minimal ChannelVector stand-in for matrix columns."""

    def __init__(self, name, values):
        self.name = name
        self.values = values
        self.kind = "scalar-passthrough"

    def array(self, sample_ids=None):
        ids = list(self.values) if sample_ids is None else sample_ids
        return np.array([self.values[i] for i in ids], dtype=np.float64)
