import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from redscore.estimators import MutualInformationScorer, RedemptionScorer, WeightCalibrator
from redscore.fusion import FusionWeights, fuse_rows, squash
from redscore.gaussian import fit_gaussian_stats, mutual_information, pmi_many


def test_mi_scorer_matches_functions():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(500, 3))
    Y = 0.6 * X + rng.normal(size=(500, 3))
    est = MutualInformationScorer().fit(X, Y)
    stats = fit_gaussian_stats(X, Y)
    assert est.mutual_information_ == pytest.approx(mutual_information(stats), abs=1e-12)
    np.testing.assert_allclose(est.score_samples(X, Y), pmi_many(stats, X, Y), atol=1e-12)
    assert est.score(X, Y) == pytest.approx(float(np.mean(pmi_many(stats, X, Y))), abs=1e-12)


def test_mi_scorer_not_fitted():
    with pytest.raises(NotFittedError):
        MutualInformationScorer().score_samples(np.zeros((2, 2)), np.zeros((2, 2)))


def test_mi_scorer_params_round_trip():
    est = MutualInformationScorer(shrinkage=1e-4)
    assert clone(est).get_params() == {"shrinkage": 1e-4}


def test_redemption_scorer_transform():
    rng = np.random.default_rng(1)
    X = rng.normal(size=(40, 3))
    est = RedemptionScorer(alpha=0.35, beta=0.25, gamma=0.40, lam=1.0).fit(X)
    expected = fuse_rows(squash(X), FusionWeights.from_floats(0.35, 0.25, 0.40, 1.0))
    np.testing.assert_allclose(est.transform(X), expected, atol=1e-15)
    np.testing.assert_allclose(est.predict(X), expected, atol=1e-15)


def test_redemption_scorer_rejects_off_grid():
    X = np.zeros((3, 3))
    with pytest.raises(Exception, match="grid"):
        RedemptionScorer(alpha=0.17, beta=0.33, gamma=0.50).fit(X)


def test_redemption_scorer_requires_three_columns():
    est = RedemptionScorer().fit(np.zeros((2, 3)))
    with pytest.raises(ValueError, match="3 channel columns"):
        est.transform(np.zeros((2, 4)))


def test_weight_calibrator_end_to_end():
    rng = np.random.default_rng(2)
    n = 40
    ratings = rng.integers(1, 5, size=n).astype(float)
    X = np.column_stack([rng.normal(size=n), rng.normal(size=n), ratings])
    est = WeightCalibrator().fit(X, ratings)
    assert est.best_tau_ > 0.5  # third column is the rating itself
    floats = est.best_weights_.as_floats()
    assert floats[2] == max(floats[:3])  # rating column carries the top weight
    preds = est.predict(X)
    assert preds.shape == (n,)
    assert np.all((preds > 0) & (preds < 1))


def test_weight_calibrator_not_fitted():
    with pytest.raises(NotFittedError):
        WeightCalibrator().predict(np.zeros((2, 3)))


def test_weight_calibrator_sklearn_clone():
    est = WeightCalibrator(min_weight=0.0, weight_step=0.25, lambda_step=0.5)
    params = clone(est).get_params()
    assert params["weight_step"] == 0.25 and params["min_weight"] == 0.0
