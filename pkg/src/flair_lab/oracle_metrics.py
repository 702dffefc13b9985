"""Ground truth: exact mixture posteriors, ODE sampling, and reconstruction metrics."""
import math
from dataclasses import dataclass

import numpy as np


@dataclass
class PosteriorGMM:
    """Gaussian mixture with full covariance per component."""

    weights: np.ndarray
    means: np.ndarray
    covariances: np.ndarray

    @property
    def dim(self):
        return self.means.shape[1]

    def mean(self):
        return self.weights @ self.means

    def covariance(self):
        mu = self.mean()
        cov = np.zeros((self.dim, self.dim))
        for w, m, c in zip(self.weights, self.means, self.covariances):
            cov += w * (c + np.outer(m - mu, m - mu))
        return cov

    def variance(self):
        return np.diag(self.covariance()).copy()

    def sample(self, rng, n):
        comp = rng.choice(len(self.weights), size=n, p=self.weights)
        out = np.empty((n, self.dim))
        for k in range(len(self.weights)):
            idx = np.flatnonzero(comp == k)
            if idx.size:
                chol = np.linalg.cholesky(self.covariances[k])
                out[idx] = self.means[k] + rng.standard_normal((idx.size, self.dim)) @ chol.T
        return out


def _log_gauss(y, mean, cov):
    m = y.shape[0]
    if m == 0:
        return 0.0
    chol = np.linalg.cholesky(cov)
    z = np.linalg.solve(chol, y - mean)
    return -0.5 * (z @ z) - np.log(np.diag(chol)).sum() - 0.5 * m * math.log(2 * math.pi)


def analytic_posterior(prior, op, sigma, y):
    """Exact posterior of a mixture prior under ``y = A x + N(0, sigma^2 I)``."""
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    y = np.asarray(y, dtype=np.float64)
    A = op.matrix()
    d = prior.dim
    AtA = A.T @ A / sigma**2
    Aty = A.T @ y / sigma**2
    logw, means, covs = [], [], []
    for w, m, v in zip(prior.weights, prior.means, prior.variances):
        prec = np.eye(d) / v + AtA
        cov = np.linalg.inv(prec)
        cov = 0.5 * (cov + cov.T)
        means.append(cov @ (m / v + Aty))
        covs.append(cov)
        evid_cov = v * (A @ A.T) + sigma**2 * np.eye(A.shape[0])
        logw.append((math.log(w) if w > 0 else -np.inf) + _log_gauss(y, A @ m, evid_cov))
    logw = np.array(logw)
    weights = np.exp(logw - logw.max())
    return PosteriorGMM(weights / weights.sum(), np.array(means), np.array(covs))


def rk4_step(f, x, t, h):
    k1 = f(x, t)
    k2 = f(x + 0.5 * h * k1, t + 0.5 * h)
    k3 = f(x + 0.5 * h * k2, t + 0.5 * h)
    k4 = f(x + h * k3, t + h)
    return x + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def ode_sample(field, n, steps=100, seed=0):
    """Integrate ``dx/dt = v(x, t)`` from t=1 to t=0 with fixed-step RK4, from seeded N(0, I) starts."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n, field.dim))
    h = -1.0 / steps
    f = lambda x, t: field.evaluate(x, min(max(t, 0.0), 1.0))  # noqa: E731
    for i in range(steps):
        x = rk4_step(f, x, 1.0 - i / steps, h)
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(f"non-finite trajectory at step {i}")
    return x


def psnr(x, ref, peak=1.0):
    x, ref = np.asarray(x, dtype=np.float64), np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {ref.shape}")
    if peak <= 0:
        raise ValueError("peak must be positive")
    mse = float(np.mean((x - ref) ** 2))
    return math.inf if mse == 0 else 10.0 * math.log10(peak**2 / mse)


def wasserstein1_1d(samples_a, samples_b):
    """Exact W1 between two 1D empirical distributions."""
    a = np.sort(np.asarray(samples_a, dtype=np.float64).ravel())
    b = np.sort(np.asarray(samples_b, dtype=np.float64).ravel())
    if a.size == 0 or b.size == 0:
        raise ValueError("W1 needs nonempty samples")
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    # integrate |F_a - F_b| over the merged support
    grid = np.concatenate([a, b])
    grid.sort(kind="mergesort")
    cdf_a = np.searchsorted(a, grid[:-1], side="right") / a.size
    cdf_b = np.searchsorted(b, grid[:-1], side="right") / b.size
    return float(np.sum(np.abs(cdf_a - cdf_b) * np.diff(grid)))


@dataclass
class MetricReport:
    mse: float
    psnr_db: float
    data_residual: float
    variance: np.ndarray | None = None


def evaluate(estimate, truth, obs, forward=None, peak=1.0):
    forward = forward if forward is not None else obs.operator
    mse = float(np.mean((np.asarray(estimate) - truth) ** 2))
    r = obs.y - forward.apply(estimate)
    return MetricReport(mse=mse, psnr_db=psnr(estimate, truth, peak), data_residual=float(r @ r))
