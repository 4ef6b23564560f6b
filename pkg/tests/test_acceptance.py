"""Acceptance suite: one test per release criterion, each printing a
[PASS]/[FAIL] line (visible under pytest -s)."""

import math
import time
from contextlib import contextmanager
from pathlib import Path

import numpy as np
import pytest

from redscore.calibration import GridSpec, calibrate, enumerate_grid
from redscore.channels import ChannelVector
from redscore.fusion import FusionWeights, redemption_score, squash
from redscore.gaussian import (
    GaussianStats,
    fit_gaussian_stats,
    mutual_information,
    pmi,
    pmi_many,
)
from redscore.ablation import combination_sweep
from redscore.rankstats import bootstrap_tau, kendall_tau

from conftest import brute_counts, brute_tau

REPO_ROOT = Path(__file__).resolve().parents[1]


@contextmanager
def criterion(name):
    try:
        yield
    except Exception:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


def _channels(ids, cols, names=("mid", "dino", "gte")):
    return {
        n: ChannelVector(n, dict(zip(ids, c)), kind="scalar-passthrough")
        for n, c in zip(names, cols)
    }


def test_gaussian_mi_recovery():
    with criterion("gaussian-mi-recovery"):
        rng = np.random.default_rng(20240501)
        cov = np.eye(4)
        cov[0, 2] = cov[2, 0] = 0.6
        cov[1, 3] = cov[3, 1] = 0.6
        Z = rng.multivariate_normal(np.zeros(4), cov, size=50000, method="cholesky")
        start = time.perf_counter()
        stats = fit_gaussian_stats(Z[:, :2], Z[:, 2:])
        estimate = mutual_information(stats)
        elapsed = time.perf_counter() - start
        truth = 2 * -0.5 * math.log(1 - 0.36)  # 2 x 0.223144
        assert abs(estimate - truth) <= 0.02
        assert elapsed < 10.0


def test_pmi_dual_form_agreement():
    with criterion("pmi-dual-form-agreement"):
        from scipy.stats import multivariate_normal

        rng = np.random.default_rng(7)
        X = rng.normal(size=(500, 3))
        Y = 0.5 * X + rng.normal(size=(500, 3))
        stats = fit_gaussian_stats(X, Y)
        d = stats.shrinkage_used
        mvn_x = multivariate_normal(stats.mu_x, stats.sigma_x + d * np.eye(3))
        mvn_y = multivariate_normal(stats.mu_y, stats.sigma_y + d * np.eye(3))
        mvn_xy = multivariate_normal(stats.mu_xy, stats.sigma_xy + d * np.eye(6))
        qx = rng.normal(size=(1000, 3))
        qy = rng.normal(size=(1000, 3))
        mahalanobis_form = pmi_many(stats, qx, qy)
        density_form = mvn_xy.logpdf(np.hstack([qx, qy])) - mvn_x.logpdf(qx) - mvn_y.logpdf(qy)
        assert np.max(np.abs(mahalanobis_form - density_form)) <= 1e-9

        hand = GaussianStats.from_moments(
            [0.0], [0.0], np.array([[1.0, 0.5], [0.5, 1.0]]), shrinkage=0.0
        )
        assert pmi(hand, [1.0], [1.0]) == pytest.approx(0.477174, abs=1e-6)


def test_mean_pmi_consistency():
    with criterion("mean-pmi-consistency"):
        rng = np.random.default_rng(15)
        dims = 4
        cov = np.eye(2 * dims)
        for i in range(dims):
            cov[i, dims + i] = cov[dims + i, i] = 0.5
        Z = rng.multivariate_normal(np.zeros(2 * dims), cov, size=20000, method="cholesky")
        X, Y = Z[:, :dims], Z[:, dims:]
        stats = fit_gaussian_stats(X, Y)
        assert abs(float(np.mean(pmi_many(stats, X, Y))) - mutual_information(stats)) <= 0.05


def test_kendall_equivalence():
    with criterion("kendall-equivalence"):
        rng = np.random.default_rng(99)
        for trial in range(500):
            n = int(rng.integers(2, 301))
            if trial % 2:
                x = rng.normal(size=n)
                y = rng.normal(size=n) + 0.5 * x
            else:
                x = rng.integers(0, int(rng.integers(2, 9)), size=n).astype(float)
                y = rng.integers(0, int(rng.integers(2, 9)), size=n).astype(float)
            if len(set(x.tolist())) < 2:
                x[0] += 1.0
            if len(set(y.tolist())) < 2:
                y[0] += 1.0
            nc, nd, tx, ty, txy = brute_counts(x, y)
            for variant in ("tau_c", "tau_b"):
                r = kendall_tau(x, y, variant)
                assert (r.concordant, r.discordant, r.ties_x, r.ties_y) == (nc, nd, tx, ty)
                assert r.tau == pytest.approx(brute_tau(x, y, variant), abs=1e-15)
        # hand examples, expected values frozen from the brute-force oracle
        assert kendall_tau([1, 2, 3], [1, 2, 3], "tau_c").tau == 1.0
        assert kendall_tau([1, 2, 3, 4], [2, 1, 4, 3], "tau_c").tau == pytest.approx(
            brute_tau([1, 2, 3, 4], [2, 1, 4, 3], "tau_c"), abs=1e-15
        )
        assert brute_tau([1, 2, 3, 4], [2, 1, 4, 3], "tau_c") == pytest.approx(1 / 3, abs=1e-12)
        assert kendall_tau([1, 1, 2, 2], [1, 2, 1, 2], "tau_c").tau == brute_tau(
            [1, 1, 2, 2], [1, 2, 1, 2], "tau_c"
        ) == 0.0


def test_squash_fusion_algebra():
    with criterion("squash-fusion-algebra"):
        rng = np.random.default_rng(5)
        assert squash(0.0) == 0.5
        x = rng.normal(scale=30, size=10000)
        np.testing.assert_allclose(squash(-x), 1.0 - squash(x), atol=1e-15)

        for _ in range(200):
            v = float(rng.uniform(0.01, 0.99))
            w = FusionWeights.from_floats(0.15, 0.35, 0.5, float(rng.integers(0, 11)) / 10)
            assert redemption_score((v, v, v), w) == pytest.approx(v, abs=1e-12)

        for _ in range(10000):
            z = tuple(rng.uniform(1e-5, 1 - 1e-5, size=3))
            a = int(rng.integers(1, 19))
            b = int(rng.integers(1, 20 - a))
            wa, wb, wg = a / 20, b / 20, (20 - a - b) / 20
            additive = wa * z[0] + wb * z[1] + wg * z[2]
            multiplicative = z[0] ** wa * z[1] ** wb * z[2] ** wg
            lam1 = redemption_score(z, FusionWeights.from_floats(wa, wb, wg, 1.0))
            lam0 = redemption_score(z, FusionWeights.from_floats(wa, wb, wg, 0.0))
            assert lam1 == additive  # exact reduction
            assert lam0 == pytest.approx(multiplicative, abs=1e-12)
            assert additive >= multiplicative - 1e-12  # weighted AM-GM


def test_grid_correctness():
    with criterion("grid-correctness"):
        assert len(enumerate_grid(GridSpec())) == 858

        rng = np.random.default_rng(123)
        n = 50
        ids = [f"s{i}" for i in range(n)]
        ratings_arr = rng.integers(1, 5, size=n).astype(float)
        channels = _channels(ids, [rng.normal(size=n) * 5, rng.normal(size=n), ratings_arr])
        ratings = dict(zip(ids, ratings_arr))
        result = calibrate(channels, ("mid", "dino", "gte"), ratings)

        # independently coded naive scan over the same 858 points
        Z_raw = np.column_stack([channels[c].array(ids) for c in ("mid", "dino", "gte")])
        z = [[((v / (1 + abs(v))) + 1) / 2 for v in row] for row in Z_raw]
        best = None
        for a in range(3, 15):
            for b in range(3, 18 - a):
                c = 20 - a - b
                wa, wb, wc = a / 20, b / 20, c / 20
                for l10 in range(11):
                    lam = l10 / 10
                    rs = [
                        lam * (wa * zi[0] + wb * zi[1] + wc * zi[2])
                        + (1 - lam) * (zi[0] ** wa * zi[1] ** wb * zi[2] ** wc)
                        for zi in z
                    ]
                    tau = brute_tau(rs, ratings_arr, "tau_c")
                    if best is None or tau > best[0]:
                        best = (tau, (a, b, c, l10))
        assert result.best.numerators() == best[1]  # exact weight tuple match

        for seed in (1, 2, 3):
            r2 = np.random.default_rng(seed)
            cols = [r2.normal(size=30), r2.normal(size=30), r2.normal(size=30)]
            ids2 = [f"t{i}" for i in range(30)]
            ch2 = _channels(ids2, cols)
            rt2 = dict(zip(ids2, r2.integers(1, 5, size=30).astype(float)))
            spec = GridSpec()
            free = calibrate(ch2, ("mid", "dino", "gte"), rt2, spec, keep_trace=False)
            add = calibrate(ch2, ("mid", "dino", "gte"), rt2, spec.fixed_lambda(1),
                            keep_trace=False)
            mul = calibrate(ch2, ("mid", "dino", "gte"), rt2, spec.fixed_lambda(0),
                            keep_trace=False)
            assert free.best_tau >= add.best_tau
            assert free.best_tau >= mul.best_tau


def test_sweep_correctness():
    with criterion("sweep-correctness"):
        rng = np.random.default_rng(77)
        n = 30
        ids = [f"s{i}" for i in range(n)]
        names = ("mid", "gte", "dino", "bertscore", "lpips", "clip")
        channels = _channels(ids, [rng.normal(size=n) for _ in names], names)
        ratings = dict(zip(ids, rng.integers(1, 5, size=n).astype(float)))
        spec = GridSpec.from_floats(lambda_step=0.5)
        rows = combination_sweep(names, channels, ratings, spec)
        assert len(rows) == 20
        for row in rows:
            direct = calibrate(channels, row.combination, ratings, spec, keep_trace=False)
            assert direct.best == row.weights
            assert direct.best_tau == row.tau


def test_bootstrap_behavior():
    with criterion("bootstrap-behavior"):
        rng = np.random.default_rng(31)
        x = rng.normal(size=80)
        y = x + rng.normal(size=80)
        assert bootstrap_tau(x, y, runs=60, seed=9) == bootstrap_tau(x, y, runs=60, seed=9)

        # joint resampling duplicates pairs; the tie-corrected variant keeps
        # perfectly concordant data at exactly 1
        z = np.arange(40, dtype=float)
        s = bootstrap_tau(z, z, runs=40, seed=1, variant="tau_b")
        assert s.mean == 1.0 and s.std_dev == 0.0 and (s.ci_low, s.ci_high) == (1.0, 1.0)

        def synthetic(n, seed):
            r = np.random.default_rng(seed)
            q = r.uniform(0, 1, size=n)
            scores = q + r.normal(0, 0.3, size=n)
            ratings = np.clip(np.round(1 + 3 * q + r.normal(0, 0.4, size=n)), 1, 4)
            return scores, ratings

        s100 = bootstrap_tau(*synthetic(100, 5), runs=300, seed=5)
        s1000 = bootstrap_tau(*synthetic(1000, 5), runs=300, seed=5)
        assert 1.5 <= s100.std_dev / s1000.std_dev <= 6.0


def test_full_data_recipe_shipped():
    with criterion("full-data-recipe"):
        recipe = REPO_ROOT / "recipes" / "flickr8k"
        manifest = recipe / "manifest.template.json"
        job = recipe / "extract_job.template.json"
        doc = recipe / "README.md"
        assert manifest.exists() and job.exists() and doc.exists()
        import json

        channels = {c["name"]: c for c in json.loads(manifest.read_text())["channels"]}
        assert channels["clip_image"]["dim"] == 768
        assert channels["dino_image"]["dim"] == 768
        assert channels["gte_candidate"]["dim"] == 1024
        text = doc.read_text()
        # documented expectations: weights within one grid step of the tuned
        # configuration, tau within +-1.0 of the reference 58.4
        for token in ("0.15", "0.35", "0.50", "0.8", "58.4", "158"):
            assert token in text


def test_performance_budgets():
    with criterion("performance-budgets"):
        rng = np.random.default_rng(2025)
        n = 6000
        ids = [f"s{i}" for i in range(n)]
        q = rng.uniform(0, 1, size=n)
        cols = [
            q * 10 + rng.normal(0, 2, size=n),
            q + rng.normal(0, 0.5, size=n),
            q + rng.normal(0, 0.3, size=n),
        ]
        channels = _channels(ids, cols)
        ratings_arr = np.clip(np.round(1 + 3 * q + rng.normal(0, 0.4, size=n)), 1, 4)
        ratings = dict(zip(ids, ratings_arr))

        start = time.perf_counter()
        result = calibrate(channels, ("mid", "dino", "gte"), ratings, keep_trace=False)
        calibrate_elapsed = time.perf_counter() - start
        assert len(enumerate_grid(GridSpec())) == 858
        assert calibrate_elapsed < 60.0, f"calibrate took {calibrate_elapsed:.1f}s"

        scores = cols[0]
        start = time.perf_counter()
        bootstrap_tau(scores, ratings_arr, runs=1000, seed=3)
        bootstrap_elapsed = time.perf_counter() - start
        assert bootstrap_elapsed < 60.0, f"bootstrap took {bootstrap_elapsed:.1f}s"
        print(
            f" (calibrate {calibrate_elapsed:.1f}s, bootstrap {bootstrap_elapsed:.1f}s)",
            end="",
        )
