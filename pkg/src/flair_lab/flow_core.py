"""Linear conditional flow path and conversions between velocity, score and endpoints.

Time runs from 0 (data) to 1 (noise); a path sample is
``x_t = (1 - t) * x0 + t * eps``. All conversions act elementwise, so every
function accepts a single vector of shape ``(d,)`` or a batch ``(n, d)`` with a
scalar ``t``.
"""
from dataclasses import dataclass

import numpy as np

BOUNDARY_EPS = 1e-9


class DomainError(ValueError):
    """Raised when a time or shape lies outside an operation's domain."""


def _as_vec(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 0:
        x = x.reshape(1)
    return x


def _same_shape(*arrays):
    shape = arrays[0].shape
    for a in arrays[1:]:
        if a.shape != shape:
            raise DomainError(f"dimension mismatch: {shape} vs {a.shape}")


def _check_time(t, *, below_one=False, above_zero=False):
    t = float(t)
    if not 0.0 <= t <= 1.0 or not np.isfinite(t):
        raise DomainError(f"t must lie in [0, 1], got {t}")
    if below_one and t > 1.0 - BOUNDARY_EPS:
        raise DomainError(f"t={t} too close to 1 (velocity form is singular there)")
    if above_zero and t < BOUNDARY_EPS:
        raise DomainError(f"t={t} too close to 0 (score form is singular there)")
    return t


@dataclass(frozen=True)
class PathSample:
    x_t: np.ndarray
    t: float
    x0: np.ndarray
    eps: np.ndarray


def interpolate(x0, eps, t):
    """Point on the straight path from ``x0`` (t=0) to ``eps`` (t=1)."""
    x0, eps = _as_vec(x0), _as_vec(eps)
    _same_shape(x0, eps)
    t = _check_time(t)
    return PathSample(x_t=(1.0 - t) * x0 + t * eps, t=t, x0=x0, eps=eps)


def conditional_velocity(x_t, eps, t):
    """Target velocity ``(eps - x_t) / (1 - t)``; equals ``eps - x0`` on a consistent sample."""
    x_t, eps = _as_vec(x_t), _as_vec(eps)
    _same_shape(x_t, eps)
    t = _check_time(t, below_one=True)
    return (eps - x_t) / (1.0 - t)


def conditional_score(eps, t):
    """Score of ``N((1 - t) mu, t^2 I)`` at the point generated by ``eps``."""
    eps = _as_vec(eps)
    t = _check_time(t, above_zero=True)
    return -eps / t


def score_from_velocity(v, x_t, t):
    v, x_t = _as_vec(v), _as_vec(x_t)
    _same_shape(v, x_t)
    t = _check_time(t, above_zero=True)
    return -((1.0 - t) * v + x_t) / t


def velocity_from_score(s, x_t, t):
    s, x_t = _as_vec(s), _as_vec(x_t)
    _same_shape(s, x_t)
    t = _check_time(t, below_one=True)
    return (-t * s - x_t) / (1.0 - t)


def endpoint_prediction(x_t, v, t):
    """One-step estimate of the noise endpoint, ``x_t + (1 - t) v``."""
    x_t, v = _as_vec(x_t), _as_vec(v)
    _same_shape(x_t, v)
    t = _check_time(t)
    return x_t + (1.0 - t) * v


def denoised_prediction(x_t, v, t):
    """Data-end estimate ``x_t - t v``; the posterior mean of x0 when ``v`` is optimal."""
    x_t, v = _as_vec(x_t), _as_vec(v)
    _same_shape(x_t, v)
    t = _check_time(t)
    return x_t - t * v
