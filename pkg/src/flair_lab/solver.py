"""Variational flow posterior sampler with hard data consistency and trajectory adjustment.

Each step of the loop
  1. forms ``x_t = (1 - t) mu + t eps_hat`` and takes a weighted step along
     ``v(x_t, t) - u_t(x_t | eps_hat)`` (prior only, never reads ``y``),
  2. runs gradient descent on ``||y - A(mu)||^2`` until the residual is small
     (data only, never calls the field),
  3. refreshes ``eps_hat`` as a blend of the endpoint prediction and fresh noise.
"""
import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field, replace

import numpy as np

from flair_lab.flow_core import DomainError, conditional_velocity, endpoint_prediction
from flair_lab.forward_ops import DecoderForward, decode_invert


class SolverError(RuntimeError):
    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace or []


class HDCDivergence(SolverError):
    pass


@dataclass(frozen=True)
class HDCConfig:
    enabled: bool = True
    step_size: float | None = None      # None -> operator default
    max_iters: int = 2000
    stop_threshold: float = 1e-4        # per measurement
    divergence_patience: int = 10


@dataclass(frozen=True)
class SolverConfig:
    nfe: int = 50
    t_stop: float = 0.2
    alpha_rule: str | float = "one_minus_t"
    reg_weighting: str = "calibrated"   # calibrated | rsd | flow_ratio
    reg_step_size: float = 1.0
    calibration: object = None
    hdc: HDCConfig = HDCConfig()
    dta_enabled: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.nfe < 1:
            raise ValueError("nfe must be >= 1")
        if not 0.0 <= self.t_stop < 1.0:
            raise ValueError("t_stop must lie in [0, 1)")
        if self.reg_weighting not in ("calibrated", "rsd", "flow_ratio"):
            raise ValueError(f"unknown reg_weighting {self.reg_weighting!r}")
        if self.reg_weighting == "calibrated" and self.calibration is None:
            raise ValueError("calibrated weighting needs a calibration table")
        if self.alpha_rule != "one_minus_t":
            a = float(self.alpha_rule)
            if not 0.0 <= a <= 1.0:
                raise ValueError("constant alpha must lie in [0, 1]")
        if self.reg_step_size <= 0:
            raise ValueError("reg_step_size must be positive")
        if self.hdc.step_size is not None and self.hdc.step_size <= 0:
            raise ValueError("HDC step size must be positive")

    @property
    def delta_t(self):
        return (1.0 - self.t_stop) / self.nfe

    def schedule(self):
        """Decreasing times at the midpoints of ``nfe`` equal cells covering ``[t_stop, 1]``."""
        return 1.0 - (np.arange(self.nfe) + 0.5) * self.delta_t

    def alpha(self, t):
        if not self.dta_enabled:
            return 0.0
        if self.alpha_rule == "one_minus_t":
            return 1.0 - t
        return float(self.alpha_rule)

    def reg_weight(self, t):
        if self.reg_weighting == "rsd":
            return t
        if self.reg_weighting == "flow_ratio":
            return t / (1.0 - t)
        return self.calibration.weight(t)

    def ablate(self, hdc=True, dta=True, crw=True):
        """Copy with components switched off; CRW off means weight ``t``."""
        cfg = replace(self, dta_enabled=self.dta_enabled and dta,
                      hdc=replace(self.hdc, enabled=self.hdc.enabled and hdc))
        if not crw:
            cfg = replace(cfg, reg_weighting="rsd")
        return cfg


@dataclass
class StepRecord:
    step: int
    t: float
    lam: float
    reg_grad_norm: float
    data_residual: float
    hdc_iters: int
    hdc_converged: bool


@dataclass
class SolveResult:
    mu_x_final: np.ndarray
    decoded: np.ndarray | None
    trace: list
    seed: int
    config: SolverConfig = dc_field(repr=False)

    @property
    def estimate(self):
        """Signal-space reconstruction."""
        return self.decoded if self.decoded is not None else self.mu_x_final


@dataclass
class HDCResult:
    mu: np.ndarray
    residual: float
    iters: int
    converged: bool


def _regularizer_terms(field, mu_x, eps_hat, t):
    if t > 1.0 - 1e-9:
        raise DomainError("regularizer gradient is undefined at t = 1")
    mu_x, eps_hat = np.asarray(mu_x, dtype=np.float64), np.asarray(eps_hat, dtype=np.float64)
    x_t = (1.0 - t) * mu_x + t * eps_hat
    v = np.asarray(field.evaluate(x_t, t))
    return v - conditional_velocity(x_t, eps_hat, t), v, x_t


def regularizer_gradient(field, mu_x, eps_hat, t):
    """``v(x_t, t) - u_t(x_t | eps_hat)`` at ``x_t = (1 - t) mu_x + t eps_hat``."""
    return _regularizer_terms(field, mu_x, eps_hat, t)[0]


def hard_data_consistency(mu_x, obs, forward=None, cfg=HDCConfig()):
    """Gradient descent on the summed squared residual with early stopping.

    Stops once ``||y - f(mu)||^2 <= cfg.stop_threshold * m`` or after
    ``cfg.max_iters`` steps.
    """
    forward = forward if forward is not None else obs.operator
    mu = np.array(mu_x, dtype=np.float64)
    m = obs.y.shape[0]
    if m == 0:
        return HDCResult(mu, 0.0, 0, True)
    step = cfg.step_size if cfg.step_size is not None else forward.default_hdc_step
    threshold = cfg.stop_threshold * m
    res, grad = forward.residual_grad(mu, obs.y)
    iters, growth, prev = 0, 0, res
    while res > threshold and iters < cfg.max_iters:
        mu = mu - step * grad
        iters += 1
        res, grad = forward.residual_grad(mu, obs.y)
        if not np.isfinite(res):
            raise HDCDivergence(f"non-finite residual after {iters} HDC iterations")
        growth = growth + 1 if res > prev else 0
        if growth >= cfg.divergence_patience:
            raise HDCDivergence(f"residual grew for {growth} consecutive HDC iterations "
                                f"(now {res:.3e}); reduce the HDC step size")
        prev = res
    return HDCResult(mu, res, iters, res <= threshold)


def dta_update(x_t, v, t, alpha, rng):
    """New noise estimate ``alpha * x1_hat + sqrt(1 - alpha^2) * eps`` with ``eps`` fresh."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    x1_hat = endpoint_prediction(x_t, v, t)
    eps = rng.standard_normal(x1_hat.shape)
    return alpha * x1_hat + math.sqrt(1.0 - alpha * alpha) * eps


def initial_estimate(obs, decoder=None, invert_iters=2000, invert_step=0.05):
    """Adjoint initialization, pushed through the decoder inverse when one is configured."""
    x = obs.operator.adjoint(obs.y)
    if decoder is None:
        return x
    return decode_invert(decoder, x, iters=invert_iters, step_size=invert_step)


def flair_solve(field, obs, cfg, init=None, decoder=None):
    """Run the full sampler on one observation.

    ``init`` is a starting ``mu_x`` or ``None`` for adjoint initialization.
    With a ``decoder`` the field lives in latent space and data consistency
    acts on ``A(decode(z))``.
    """
    rng = np.random.default_rng(cfg.seed)
    forward = DecoderForward(obs.operator, decoder) if decoder is not None else obs.operator
    mu = np.array(initial_estimate(obs, decoder) if init is None else init, dtype=np.float64)
    if mu.shape != (field.dim,):
        raise DomainError(f"initial estimate has shape {mu.shape}, field expects ({field.dim},)")
    eps_hat = rng.standard_normal(mu.shape)
    trace = []
    for step, t in enumerate(cfg.schedule()):
        t = float(t)
        grad, v, x_t = _regularizer_terms(field, mu, eps_hat, t)
        lam = cfg.reg_weight(t)
        mu = mu - cfg.reg_step_size * lam * grad
        if cfg.hdc.enabled:
            hdc = hard_data_consistency(mu, obs, forward, cfg.hdc)
            mu, residual, iters, converged = hdc.mu, hdc.residual, hdc.iters, hdc.converged
        else:
            residual, _ = forward.residual_grad(mu, obs.y)
            iters, converged = 0, False
        eps_hat = dta_update(x_t, v, t, cfg.alpha(t), rng)
        trace.append(StepRecord(step, t, float(lam), float(np.linalg.norm(grad)),
                                float(residual), iters, converged))
        if not (np.all(np.isfinite(mu)) and np.all(np.isfinite(eps_hat))):
            raise SolverError(f"non-finite state at step {step} (t={t:.4f})", trace)
    decoded = decoder.decode(mu) if decoder is not None else None
    return SolveResult(mu, decoded, trace, cfg.seed, cfg)


def posterior_ensemble(field, obs, cfg, k=32, seeds=None, decoder=None, workers=None):
    """``k`` independent solves on one observation; per-coordinate mean and unbiased variance.

    Seeds default to ``cfg.seed, cfg.seed + 1, ...``. Failed runs are reported in
    ``errors`` and excluded from the statistics.
    """
    if k < 2:
        raise ValueError("an ensemble needs k >= 2")
    seeds = list(seeds) if seeds is not None else [cfg.seed + j for j in range(k)]
    if len(seeds) != k:
        raise ValueError("need exactly k seeds")
    workers = workers or int(os.environ.get("FLAIR_LAB_THREADS", "1"))

    def run(seed):
        try:
            return flair_solve(field, obs, replace(cfg, seed=seed), decoder=decoder)
        except SolverError as exc:
            return exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(run, seeds))
    else:
        outcomes = [run(s) for s in seeds]
    results = [o for o in outcomes if isinstance(o, SolveResult)]
    errors = {s: o for s, o in zip(seeds, outcomes) if not isinstance(o, SolveResult)}
    if len(results) < 2:
        raise SolverError(f"only {len(results)} of {k} ensemble runs succeeded")
    samples = np.stack([r.estimate for r in results])
    return {
        "samples": samples,
        "mean": samples.mean(axis=0),
        "variance": samples.var(axis=0, ddof=1),
        "results": results,
        "errors": errors,
    }


TRACE_HEADER = ["step", "t", "lambda", "reg_grad_norm", "data_residual", "hdc_iters"]


def trace_to_csv(trace):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_HEADER)
    for r in trace:
        writer.writerow([r.step, repr(r.t), repr(r.lam), repr(r.reg_grad_norm),
                         repr(r.data_residual), r.hdc_iters])
    return buf.getvalue()
