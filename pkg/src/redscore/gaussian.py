"""Multivariate Gaussian statistics over paired embeddings.

A joint Gaussian is fitted once per dataset over (image, caption)
embedding pairs. Mutual information comes from the log-determinants of
the marginal and joint covariances; per-pair scores are point-wise
mutual information, i.e. the Gaussian log-density ratio
log p(x, y) - log p(x) - log p(y), evaluated through Mahalanobis
distances against cached triangular factors. Log-determinants are read
off factor diagonals and covariances are never inverted explicitly:
at embedding dimensions in the hundreds, naive determinants overflow
and explicit inverses lose precision.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_triangular

from .bundle import read_stats_cache, write_stats_cache
from .errors import DataError, DegenerateDataError

# Jitter ladder for rank-deficient covariances: start at 1e-6 x mean
# diagonal, escalate x10 up to 1e-2 x mean diagonal before giving up.
_JITTER_REL_START = 1e-6
_JITTER_REL_CAP = 1e-2


@dataclass(frozen=True)
class GaussianStats:
    """Fitted means/covariances with cached factorizations.

    ``sigma_*`` hold the unshrunk sample covariances; ``chol_*`` are
    lower-triangular factors of ``sigma_* + shrinkage_used * I`` and
    ``logdet_*`` equal twice the sum of the log factor diagonals.
    """

    dim_x: int
    dim_y: int
    mu_x: np.ndarray
    mu_y: np.ndarray
    sigma_x: np.ndarray
    sigma_y: np.ndarray
    sigma_xy: np.ndarray
    chol_x: np.ndarray
    chol_y: np.ndarray
    chol_xy: np.ndarray
    logdet_x: float
    logdet_y: float
    logdet_xy: float
    shrinkage_used: float
    n_fit: int

    @property
    def mu_xy(self):
        return np.concatenate([self.mu_x, self.mu_y])

    @classmethod
    def from_moments(cls, mu_x, mu_y, sigma_xy, shrinkage=None, n_fit=0):
        """Build stats from given moments; see fit_gaussian_stats for shrinkage."""
        mu_x = np.asarray(mu_x, dtype=np.float64).reshape(-1)
        mu_y = np.asarray(mu_y, dtype=np.float64).reshape(-1)
        sigma_xy = np.asarray(sigma_xy, dtype=np.float64)
        dx, dy = mu_x.size, mu_y.size
        d = dx + dy
        if sigma_xy.shape != (d, d):
            raise DataError(f"joint covariance shape {sigma_xy.shape}, expected ({d}, {d})")
        if not np.allclose(sigma_xy, sigma_xy.T, rtol=1e-10, atol=0):
            raise DataError("joint covariance is not symmetric")
        sigma_x = sigma_xy[:dx, :dx]
        sigma_y = sigma_xy[dx:, dx:]
        chols, used = _factorize_with_jitter((sigma_x, sigma_y, sigma_xy), shrinkage)
        chol_x, chol_y, chol_xy = chols
        return cls(
            dim_x=dx,
            dim_y=dy,
            mu_x=mu_x,
            mu_y=mu_y,
            sigma_x=sigma_x,
            sigma_y=sigma_y,
            sigma_xy=sigma_xy,
            chol_x=chol_x,
            chol_y=chol_y,
            chol_xy=chol_xy,
            logdet_x=_logdet(chol_x),
            logdet_y=_logdet(chol_y),
            logdet_xy=_logdet(chol_xy),
            shrinkage_used=used,
            n_fit=n_fit,
        )

    def save(self, path):
        write_stats_cache(
            path, self.dim_x, self.dim_y, self.n_fit, self.shrinkage_used,
            self.mu_x, self.mu_y, self.sigma_xy,
        )

    @classmethod
    def load(cls, path):
        dx, dy, n_fit, shrinkage, mu_x, mu_y, sigma_xy = read_stats_cache(path)
        del dx, dy  # implied by the mean lengths
        return cls.from_moments(mu_x, mu_y, sigma_xy, shrinkage=shrinkage, n_fit=n_fit)


def _logdet(chol):
    return 2.0 * float(np.sum(np.log(np.diag(chol))))


def _jitter_ladder(shrinkage, scale):
    if shrinkage is None:
        start = _JITTER_REL_START * scale
    elif shrinkage < 0 or not np.isfinite(shrinkage):
        raise DataError(f"shrinkage must be finite and >= 0, got {shrinkage}")
    elif shrinkage == 0.0:
        # explicit zero: no regularization allowed, single exact attempt
        return [0.0]
    else:
        start = float(shrinkage)
    if start <= 0.0:  # zero-trace covariance: nothing sensible to escalate
        return [0.0]
    cap = _JITTER_REL_CAP * scale
    ladder = [start]
    while ladder[-1] * 10.0 <= cap * (1.0 + 1e-12):
        ladder.append(ladder[-1] * 10.0)
    return ladder


def _factorize_with_jitter(matrices, shrinkage):
    """Cholesky-factor all matrices with one shared diagonal jitter.

    Escalates through the jitter ladder until every matrix factors;
    returns (factors, jitter actually used).
    """
    joint = matrices[-1]
    scale = float(np.trace(joint)) / joint.shape[0]
    errors = []
    for jitter in _jitter_ladder(shrinkage, scale):
        try:
            chols = tuple(
                np.linalg.cholesky(m + jitter * np.eye(m.shape[0])) if jitter
                else np.linalg.cholesky(m)
                for m in matrices
            )
        except np.linalg.LinAlgError:
            errors.append(jitter)
            continue
        return chols, jitter
    raise DegenerateDataError(
        "covariance factorization failed at every jitter "
        f"({', '.join(f'{j:.3g}' for j in errors)}); data is degenerate"
    )


def fit_gaussian_stats(pairs, y=None, shrinkage=None):
    """Fit means and (unbiased) covariances of paired vectors.

    Accepts either an iterable of (x, y) pairs or two aligned arrays of
    shape (n, dim_x) and (n, dim_y). ``shrinkage`` seeds the jitter
    ladder: None uses the relative default, a positive value starts the
    ladder there, and an explicit 0.0 demands an exact factorization of
    the raw covariances (failing on singular data).
    """
    if y is None:
        pairs = list(pairs)
        if not pairs:
            raise DataError("need at least 2 pairs to fit, got 0")
        xs, ys = zip(*pairs)
        X = np.asarray(xs, dtype=np.float64)
        Y = np.asarray(ys, dtype=np.float64)
    else:
        X = np.asarray(pairs, dtype=np.float64)
        Y = np.asarray(y, dtype=np.float64)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    n = X.shape[0]
    if Y.shape[0] != n:
        raise DataError(f"paired arrays have {n} and {Y.shape[0]} rows")
    if n < 2:
        raise DataError(f"need at least 2 pairs to fit, got {n}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise DataError("non-finite values in fitting data")
    mu_x = X.mean(axis=0)
    mu_y = Y.mean(axis=0)
    Xc = X - mu_x
    Yc = Y - mu_y
    denom = n - 1
    sigma_x = (Xc.T @ Xc) / denom
    sigma_y = (Yc.T @ Yc) / denom
    cross = (Xc.T @ Yc) / denom
    sigma_xy = np.block([[sigma_x, cross], [cross.T, sigma_y]])
    return GaussianStats.from_moments(mu_x, mu_y, sigma_xy, shrinkage=shrinkage, n_fit=n)


def mutual_information(stats):
    """Mutual information in nats from the cached log-determinants."""
    return 0.5 * (stats.logdet_x + stats.logdet_y - stats.logdet_xy)


def _mahalanobis_sq(chol, mu, rows):
    diff = rows - mu
    u = solve_triangular(chol, diff.T, lower=True, check_finite=False)
    return np.einsum("ij,ij->j", u, u)


def pmi_many(stats, X, Y):
    """Point-wise mutual information for each aligned (x, y) row pair.

    PMI(x, y) = I(X;Y) + (D2_x + D2_y - D2_xy) / 2 with squared
    Mahalanobis distances under the fitted (jittered) Gaussians; this
    equals the joint-vs-marginal log-density ratio.
    """
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64))
    if X.shape[1] != stats.dim_x or Y.shape[1] != stats.dim_y:
        raise DataError(
            f"vector dims ({X.shape[1]}, {Y.shape[1]}) do not match fitted "
            f"dims ({stats.dim_x}, {stats.dim_y})"
        )
    if X.shape[0] != Y.shape[0]:
        raise DataError(f"row counts differ: {X.shape[0]} vs {Y.shape[0]}")
    d2x = _mahalanobis_sq(stats.chol_x, stats.mu_x, X)
    d2y = _mahalanobis_sq(stats.chol_y, stats.mu_y, Y)
    d2xy = _mahalanobis_sq(stats.chol_xy, stats.mu_xy, np.hstack([X, Y]))
    return mutual_information(stats) + 0.5 * (d2x + d2y - d2xy)


def pmi(stats, x, y):
    """PMI of a single (x, y) pair; see pmi_many."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    return float(pmi_many(stats, x[None, :], y[None, :])[0])


def mid_scores(stats, dataset, image_table="clip_image", candidate_table="clip_candidate"):
    """Per-sample PMI of (image, candidate) embeddings plus the dataset mean.

    Returns (per_sample dict keyed by sample_id, mean). The mean over the
    retained samples is the dataset-level score.
    """
    img = dataset.tables.get(image_table)
    cand = dataset.tables.get(candidate_table)
    if img is None or cand is None:
        missing = image_table if img is None else candidate_table
        raise DataError(f"dataset {dataset.name!r} lacks embedding table {missing!r}")
    X = np.stack([img[s.image_id] for s in dataset.samples])
    Y = np.stack([cand[s.sample_id] for s in dataset.samples])
    values = pmi_many(stats, X, Y)
    per_sample = {s.sample_id: float(v) for s, v in zip(dataset.samples, values)}
    return per_sample, float(np.mean(values))


def fit_mid_stats(dataset, image_table="clip_image", candidate_table="clip_candidate",
                  shrinkage=None):
    """Fit the joint Gaussian over the dataset's (image, candidate) pairs."""
    img = dataset.tables.get(image_table)
    cand = dataset.tables.get(candidate_table)
    if img is None or cand is None:
        missing = image_table if img is None else candidate_table
        raise DataError(f"dataset {dataset.name!r} lacks embedding table {missing!r}")
    X = np.stack([img[s.image_id] for s in dataset.samples])
    Y = np.stack([cand[s.sample_id] for s in dataset.samples])
    return fit_gaussian_stats(X, Y, shrinkage=shrinkage)
