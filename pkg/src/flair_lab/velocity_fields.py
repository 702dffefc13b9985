"""Velocity fields: closed-form mixture field, a small trainable network, and calibration."""
import csv
import io
import json
from dataclasses import dataclass, field as dc_field

import numpy as np

from flair_lab import kernels
from flair_lab.flow_core import BOUNDARY_EPS, DomainError

SMALL_T = 1e-6


class TrainingError(RuntimeError):
    pass


class CalibrationError(ValueError):
    pass


def _batch(x, dim):
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    x2 = x.reshape(1, -1) if single else x
    if x2.ndim != 2 or x2.shape[1] != dim:
        raise DomainError(f"expected vectors of dimension {dim}, got shape {x.shape}")
    return x2, single


class GaussianMixture:
    """Mixture of isotropic Gaussians ``sum_k w_k N(m_k, v_k I)``."""

    def __init__(self, weights, means, variances):
        weights = np.asarray(weights, dtype=np.float64).reshape(-1)
        means = np.asarray(means, dtype=np.float64)
        if means.ndim == 1:
            means = means.reshape(-1, 1)
        variances = np.asarray(variances, dtype=np.float64).reshape(-1)
        k = weights.shape[0]
        if means.shape[0] != k or variances.shape[0] != k:
            raise ValueError("weights, means and variances disagree on the number of components")
        if np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-12:
            raise ValueError("mixture weights must be nonnegative and sum to 1")
        if np.any(variances <= 0):
            raise ValueError("component variances must be positive")
        self.weights = weights
        self.means = means
        self.variances = variances

    @classmethod
    def standard(cls, dim=1):
        return cls([1.0], np.zeros((1, dim)), [1.0])

    @property
    def dim(self):
        return self.means.shape[1]

    @property
    def n_components(self):
        return self.weights.shape[0]

    def sample(self, rng, n):
        comp = rng.choice(self.n_components, size=n, p=self.weights)
        noise = rng.standard_normal((n, self.dim))
        return self.means[comp] + np.sqrt(self.variances[comp])[:, None] * noise

    def marginal(self, t):
        """Law of ``(1 - t) x0 + t eps`` for x0 from this mixture."""
        a = 1.0 - t
        return GaussianMixture(self.weights, a * self.means, a * a * self.variances + t * t)

    def mean(self):
        return self.weights @ self.means

    def covariance(self):
        mu = self.mean()
        cov = np.zeros((self.dim, self.dim))
        for w, m, v in zip(self.weights, self.means, self.variances):
            diff = m - mu
            cov += w * (v * np.eye(self.dim) + np.outer(diff, diff))
        return cov

    def log_prob(self, x):
        x2, single = _batch(x, self.dim)
        d = self.dim
        sq = ((x2[:, None, :] - self.means[None]) ** 2).sum(-1)
        with np.errstate(divide="ignore"):
            logw = np.log(self.weights)
        logp = logw - 0.5 * d * np.log(2 * np.pi * self.variances) - 0.5 * sq / self.variances
        mx = logp.max(axis=1, keepdims=True)
        out = (mx + np.log(np.exp(logp - mx).sum(axis=1, keepdims=True)))[:, 0]
        return out[0] if single else out

    def score(self, x):
        return _mixture_moments(self, x, 0.0)[1]


def _mixture_moments(prior, x, t):
    x2, single = _batch(x, prior.dim)
    with np.errstate(divide="ignore"):
        logw = np.log(prior.weights)
    post, score = kernels.mixture_moments(x2, t, logw, prior.means, prior.variances)
    if single:
        return post[0], score[0]
    return post, score


class AnalyticField:
    """Optimal flow-matching velocity ``E[eps - x0 | x_t]`` for a mixture prior, in closed form."""

    def __init__(self, prior):
        self.prior = prior

    @property
    def dim(self):
        return self.prior.dim

    def evaluate(self, x_t, t):
        t = float(t)
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"t must lie in [0, 1], got {t}")
        x_t = np.asarray(x_t, dtype=np.float64)
        if t <= SMALL_T:
            # limit of the optimal field as the path collapses onto the data: E[eps] - x0
            _batch(x_t, self.dim)
            return -x_t.copy()
        post_mean, _ = _mixture_moments(self.prior, x_t, t)
        if not np.all(np.isfinite(post_mean)):
            raise FloatingPointError("non-finite mixture responsibilities")
        return (x_t - post_mean) / t

    __call__ = evaluate

    def posterior_mean(self, x_t, t):
        return _mixture_moments(self.prior, x_t, float(t))[0]

    def marginal_score(self, x_t, t):
        t = float(t)
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"t must lie in [0, 1], got {t}")
        return _mixture_moments(self.prior, x_t, t)[1]


def analytic_evaluate(field, x_t, t):
    return field.evaluate(x_t, t)


def marginal_score(field, x_t, t):
    return field.marginal_score(x_t, t)


class NetworkField:
    """One-hidden-layer tanh network ``v(x, t)``; time enters as an extra raw input."""

    PARAM_NAMES = ("W1", "b1", "W2", "b2")

    def __init__(self, W1, b1, W2, b2, loss_trace=None):
        self.W1 = np.asarray(W1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.W2 = np.asarray(W2, dtype=np.float64)
        self.b2 = np.asarray(b2, dtype=np.float64)
        hidden, inp = self.W1.shape
        if self.b1.shape != (hidden,) or self.W2.shape != (inp - 1, hidden) or self.b2.shape != (inp - 1,):
            raise ValueError("inconsistent network parameter shapes")
        self.loss_trace = list(loss_trace or [])

    @classmethod
    def init(cls, dim, hidden=64, seed=0):
        rng = np.random.default_rng(seed)
        W1 = rng.standard_normal((hidden, dim + 1)) / np.sqrt(dim + 1)
        W2 = rng.standard_normal((dim, hidden)) / np.sqrt(hidden)
        return cls(W1, np.zeros(hidden), W2, np.zeros(dim))

    @classmethod
    def zeros(cls, dim, hidden=64):
        return cls(np.zeros((hidden, dim + 1)), np.zeros(hidden), np.zeros((dim, hidden)), np.zeros(dim))

    @property
    def dim(self):
        return self.W2.shape[0]

    @property
    def hidden(self):
        return self.W1.shape[0]

    def params(self):
        return {name: getattr(self, name) for name in self.PARAM_NAMES}

    def flat(self):
        return np.concatenate([p.ravel() for p in self.params().values()])

    def with_flat(self, vec):
        vec = np.asarray(vec, dtype=np.float64)
        parts, start = [], 0
        for p in self.params().values():
            parts.append(vec[start:start + p.size].reshape(p.shape))
            start += p.size
        return NetworkField(*parts)

    def _forward(self, x2, t):
        tcol = np.broadcast_to(np.asarray(t, dtype=np.float64).reshape(-1, 1), (x2.shape[0], 1))
        inp = np.hstack([x2, tcol])
        h = np.tanh(inp @ self.W1.T + self.b1)
        return inp, h, h @ self.W2.T + self.b2

    def evaluate(self, x_t, t):
        x2, single = _batch(x_t, self.dim)
        out = self._forward(x2, t)[2]
        return out[0] if single else out

    __call__ = evaluate

    def to_json(self):
        doc = {"format": "flair-lab/network-field", "version": 1,
               "dim": self.dim, "hidden": self.hidden}
        doc.update({k: v.tolist() for k, v in self.params().items()})
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        if doc.get("format") != "flair-lab/network-field" or doc.get("version") != 1:
            raise ValueError("not a version-1 network field document")
        return cls(*(doc[k] for k in cls.PARAM_NAMES))


def network_evaluate(field, x_t, t):
    return field.evaluate(x_t, t)


def cfm_loss_and_gradient(field, x0, eps, t):
    """Conditional flow-matching loss and its exact parameter gradient.

    ``loss = mean_b || v(x_t, t_b) - (eps_b - x_t) / (1 - t_b) ||^2`` over the batch.
    Returns ``(loss, grads)`` with ``grads`` keyed like ``field.params()``.
    """
    x0 = np.atleast_2d(np.asarray(x0, dtype=np.float64))
    eps = np.atleast_2d(np.asarray(eps, dtype=np.float64))
    t = np.asarray(t, dtype=np.float64).reshape(-1)
    if x0.shape[0] == 0:
        raise ValueError("empty batch")
    if x0.shape != eps.shape or t.shape[0] != x0.shape[0]:
        raise DomainError("batch arrays disagree in shape")
    if np.any(t > 1.0 - BOUNDARY_EPS) or np.any(t < 0.0):
        raise DomainError("batch times must lie in [0, 1)")
    B = x0.shape[0]
    x_t = (1.0 - t)[:, None] * x0 + t[:, None] * eps
    u = (eps - x_t) / (1.0 - t)[:, None]
    inp, h, out = field._forward(x_t, t)
    r = out - u
    loss = float((r * r).sum() / B)
    dout = 2.0 * r / B
    dh = dout @ field.W2
    dz = dh * (1.0 - h * h)
    grads = {
        "W1": dz.T @ inp,
        "b1": dz.sum(axis=0),
        "W2": dout.T @ h,
        "b2": dout.sum(axis=0),
    }
    return loss, grads


def train_cfm(field, sampler, steps, step_size=1e-2, batch=64, seed=0):
    """Plain gradient descent on the CFM loss with fresh ``(x0, eps, t)`` each step.

    ``sampler(rng, n)`` must return an ``(n, dim)`` array of data samples.
    The returned field carries the per-step loss in ``loss_trace``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    rng = np.random.default_rng(seed)
    params = {k: v.copy() for k, v in field.params().items()}
    current = NetworkField(**params)
    trace = []
    for step in range(steps):
        x0 = np.asarray(sampler(rng, batch), dtype=np.float64).reshape(batch, field.dim)
        eps = rng.standard_normal((batch, field.dim))
        t = rng.random(batch)
        loss, grads = cfm_loss_and_gradient(current, x0, eps, t)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at step {step}; last losses {trace[-5:]}")
        trace.append(loss)
        for k in params:
            params[k] -= step_size * grads[k]
        current = NetworkField(**params)
    current.loss_trace = trace
    return current


@dataclass
class CalibrationTable:
    """Per-timestep expected flow-matching error and the regularizer weight derived from it."""

    timesteps: np.ndarray
    mean_error: np.ndarray
    weight_mode: str = "reciprocal"
    cutoff: float = 0.2
    per_sample: np.ndarray = dc_field(default=None, repr=False)

    def __post_init__(self):
        self.timesteps = np.asarray(self.timesteps, dtype=np.float64)
        self.mean_error = np.asarray(self.mean_error, dtype=np.float64)
        if self.weight_mode not in ("reciprocal", "shifted"):
            raise ValueError(f"unknown weight_mode {self.weight_mode!r}")
        if self.timesteps.shape != self.mean_error.shape or self.timesteps.size == 0:
            raise CalibrationError("timesteps and mean_error must be nonempty and aligned")
        if np.any(self.mean_error <= 0) or not np.all(np.isfinite(self.mean_error)):
            raise CalibrationError("mean_error must be positive and finite everywhere")

    def _raw(self, i):
        w = 1.0 / self.mean_error[i]
        if self.weight_mode == "shifted":
            w = max(0.0, w - 1.0 / self.mean_error[np.argmin(self.timesteps)])
        return w

    @property
    def weights(self):
        return np.array([0.0 if tk < self.cutoff else self._raw(i)
                         for i, tk in enumerate(self.timesteps)])

    def weight(self, t):
        return weight_lookup(self, t)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["t", "mean_error", "weight"])
        for tk, e, w in zip(self.timesteps, self.mean_error, self.weights):
            writer.writerow([repr(float(tk)), repr(float(e)), repr(float(w))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text, weight_mode="reciprocal", cutoff=0.2):
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(np.array([float(r["t"]) for r in rows]),
                   np.array([float(r["mean_error"]) for r in rows]),
                   weight_mode=weight_mode, cutoff=cutoff)


def weight_lookup(table, t):
    """Regularizer weight at ``t``: nearest calibrated timestep, zero below the cutoff."""
    t = float(t)
    if t < table.cutoff:
        return 0.0
    return float(table._raw(int(np.argmin(np.abs(table.timesteps - t)))))


def calibrate(field, samples, seed=0, n_timesteps=100, cutoff=0.2, weight_mode="reciprocal"):
    """Measure the field's conditional flow-matching error on data samples.

    One noise draw per (sample, timestep). The per-sample error is the mean
    squared entry of ``v - u`` so that weights do not scale with dimension.
    """
    samples = np.atleast_2d(np.asarray(samples, dtype=np.float64))
    if samples.shape[0] == 0 or samples.size == 0:
        raise CalibrationError("calibration needs at least one sample")
    rng = np.random.default_rng(seed)
    timesteps = np.arange(1, n_timesteps + 1) / n_timesteps
    per_sample = np.empty((n_timesteps, samples.shape[0]))
    for i, t in enumerate(timesteps):
        eps = rng.standard_normal(samples.shape)
        x_t = (1.0 - t) * samples + t * eps
        u = eps - samples
        v = np.asarray(field.evaluate(x_t, t)).reshape(samples.shape)
        per_sample[i] = ((v - u) ** 2).mean(axis=1)
    return CalibrationTable(timesteps, per_sample.mean(axis=1), weight_mode=weight_mode,
                            cutoff=cutoff, per_sample=per_sample)
