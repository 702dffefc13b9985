"""Measurement operators with exact adjoints, a toy nonlinear decoder, and PGM I/O.

Two-dimensional signals are stored as flat row-major vectors together with
their ``(height, width)``; blur and downsampling act separably on both axes.
"""
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from flair_lab import kernels
from flair_lab.flow_core import DomainError


def _shape_tuple(shape):
    if isinstance(shape, (int, np.integer)):
        return (int(shape),)
    shape = tuple(int(s) for s in shape)
    if len(shape) not in (1, 2) or any(s <= 0 for s in shape):
        raise ValueError(f"signal shape must be 1D or 2D with positive sides, got {shape}")
    return shape


class LinearOperator:
    """Base class; subclasses implement ``_apply`` and ``_adjoint`` on flat vectors."""

    kind = "linear"
    default_hdc_step = 0.5

    def __init__(self, in_shape, out_size):
        self.in_shape = _shape_tuple(in_shape)
        self.n = int(np.prod(self.in_shape))
        self.m = int(out_size)

    def apply(self, x):
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.n,):
            raise DomainError(f"{self.kind}: expected input of length {self.n}, got {x.shape}")
        return self._apply(x)

    def adjoint(self, y):
        y = np.asarray(y, dtype=np.float64)
        if y.shape != (self.m,):
            raise DomainError(f"{self.kind}: expected measurement of length {self.m}, got {y.shape}")
        return self._adjoint(y)

    def residual_grad(self, x, y):
        """Summed squared residual ``||y - A x||^2`` and its gradient in ``x``."""
        r = y - self.apply(x)
        return float(r @ r), -2.0 * self.adjoint(r)

    def matrix(self):
        return np.column_stack([self.apply(e) for e in np.eye(self.n)]) if self.n else np.zeros((self.m, 0))

    def __repr__(self):
        return f"{type(self).__name__}(in_shape={self.in_shape}, m={self.m})"


class Identity(LinearOperator):
    kind = "identity"

    def __init__(self, in_shape):
        super().__init__(in_shape, int(np.prod(_shape_tuple(in_shape))))

    def _apply(self, x):
        return x.copy()

    def _adjoint(self, y):
        return y.copy()


class Mask(LinearOperator):
    """Keeps the listed coordinates of the flat signal."""

    kind = "mask"

    def __init__(self, in_shape, keep):
        keep = np.asarray(sorted(set(int(i) for i in keep)), dtype=np.int64)
        super().__init__(in_shape, keep.size)
        if keep.size and (keep[0] < 0 or keep[-1] >= self.n):
            raise ValueError("mask indices out of range")
        self.keep = keep

    def _apply(self, x):
        return x[self.keep]

    def _adjoint(self, y):
        out = np.zeros(self.n)
        out[self.keep] = y
        return out


class Downsample(LinearOperator):
    """Non-overlapping block averaging by ``factor`` along every axis."""

    kind = "downsample"
    default_hdc_step = 1.0

    def __init__(self, in_shape, factor):
        in_shape = _shape_tuple(in_shape)
        factor = int(factor)
        if factor < 1 or any(s % factor for s in in_shape):
            raise ValueError(f"factor {factor} must divide every side of {in_shape}")
        self.factor = factor
        self.out_shape = tuple(s // factor for s in in_shape)
        super().__init__(in_shape, int(np.prod(self.out_shape)))

    def _apply(self, x):
        f = self.factor
        if len(self.in_shape) == 1:
            return x.reshape(-1, f).mean(axis=1)
        h, w = self.out_shape
        return x.reshape(h, f, w, f).mean(axis=(1, 3)).ravel()

    def _adjoint(self, y):
        f = self.factor
        if len(self.in_shape) == 1:
            return np.repeat(y, f) / f
        img = y.reshape(self.out_shape)
        return np.repeat(np.repeat(img, f, axis=0), f, axis=1).ravel() / (f * f)


class Blur(LinearOperator):
    """Centered circular convolution with an odd-length kernel, separable in 2D."""

    kind = "blur"
    default_hdc_step = 0.1

    def __init__(self, in_shape, kernel):
        kernel = np.asarray(kernel, dtype=np.float64).reshape(-1)
        if kernel.size % 2 == 0:
            raise ValueError("blur kernel length must be odd")
        super().__init__(in_shape, int(np.prod(_shape_tuple(in_shape))))
        self.kernel = kernel

    @staticmethod
    def binomial_kernel(size=5):
        if size % 2 == 0:
            raise ValueError("kernel size must be odd")
        k = np.array([1.0])
        for _ in range(size - 1):
            k = np.convolve(k, [1.0, 1.0])
        return k / k.sum()

    def _conv(self, x, kernel):
        if len(self.in_shape) == 1:
            return kernels.circular_convolve_rows(x.reshape(1, -1), kernel)[0]
        img = kernels.circular_convolve_rows(x.reshape(self.in_shape), kernel)
        img = kernels.circular_convolve_rows(np.ascontiguousarray(img.T), kernel).T
        return img.ravel()

    def _apply(self, x):
        return self._conv(x, self.kernel)

    def _adjoint(self, y):
        return self._conv(y, self.kernel[::-1].copy())


class ToyDecoder:
    """Fixed random two-layer tanh map from a latent space into signal space."""

    def __init__(self, W1, b1, W2, b2):
        self.W1 = np.asarray(W1, dtype=np.float64)
        self.b1 = np.asarray(b1, dtype=np.float64)
        self.W2 = np.asarray(W2, dtype=np.float64)
        self.b2 = np.asarray(b2, dtype=np.float64)

    @classmethod
    def random(cls, latent_dim, out_dim, hidden=32, seed=0):
        if latent_dim >= out_dim:
            raise ValueError("latent dimension must be smaller than the signal dimension")
        rng = np.random.default_rng(seed)
        W1 = rng.standard_normal((hidden, latent_dim)) / np.sqrt(latent_dim)
        W2 = rng.standard_normal((out_dim, hidden)) / np.sqrt(hidden)
        return cls(W1, np.zeros(hidden), W2, np.zeros(out_dim))

    @property
    def latent_dim(self):
        return self.W1.shape[1]

    @property
    def out_dim(self):
        return self.W2.shape[0]

    def _check(self, z):
        z = np.asarray(z, dtype=np.float64)
        if z.shape != (self.latent_dim,):
            raise DomainError(f"expected latent of length {self.latent_dim}, got {z.shape}")
        return z

    def decode(self, z):
        z = self._check(z)
        return self.W2 @ np.tanh(self.W1 @ z + self.b1) + self.b2

    def jvp(self, z, dz):
        z = self._check(z)
        h = np.tanh(self.W1 @ z + self.b1)
        return self.W2 @ ((1.0 - h * h) * (self.W1 @ dz))

    def vjp(self, z, g):
        z = self._check(z)
        h = np.tanh(self.W1 @ z + self.b1)
        return self.W1.T @ ((1.0 - h * h) * (self.W2.T @ g))


def decode(dec, z):
    return dec.decode(z)


class DecoderForward:
    """Nonlinear forward map ``z -> A(decode(z))`` acting on latents."""

    def __init__(self, op, decoder):
        if decoder.out_dim != op.n:
            raise ValueError("decoder output dimension does not match the operator input")
        self.op = op
        self.decoder = decoder
        self.m = op.m
        self.n = decoder.latent_dim
        self.default_hdc_step = op.default_hdc_step

    def apply(self, z):
        return self.op.apply(self.decoder.decode(z))

    def residual_grad(self, z, y):
        r = y - self.apply(z)
        return float(r @ r), -2.0 * self.decoder.vjp(z, self.op.adjoint(r))


@dataclass(frozen=True)
class Observation:
    y: np.ndarray
    sigma_nu: float
    operator: LinearOperator
    seed: int = 0

    def __post_init__(self):
        if self.sigma_nu < 0:
            raise ValueError("sigma_nu must be nonnegative")
        if np.asarray(self.y).shape != (self.operator.m,):
            raise ValueError("measurement length does not match the operator output")


def apply(op, x):
    return op.apply(x)


def adjoint(op, y):
    return op.adjoint(y)


def observe(op, x_true, sigma_nu, seed=0):
    """``y = A x_true + sigma_nu * noise`` with seeded standard normal noise."""
    if sigma_nu < 0:
        raise ValueError("sigma_nu must be nonnegative")
    rng = np.random.default_rng(seed)
    y = op.apply(x_true) + sigma_nu * rng.standard_normal(op.m)
    return Observation(y=y, sigma_nu=float(sigma_nu), operator=op, seed=seed)


def decode_invert(dec, x_target, iters=2000, step_size=0.1):
    """Gradient descent on ``||decode(z) - x_target||^2`` from ``z = 0``; returns the best z seen."""
    if iters < 1:
        raise ValueError("iters must be >= 1")
    x_target = np.asarray(x_target, dtype=np.float64)
    z = np.zeros(dec.latent_dim)
    best_z, best = z.copy(), np.inf
    for _ in range(iters):
        r = dec.decode(z) - x_target
        loss = float(r @ r)
        if not np.isfinite(loss):
            raise FloatingPointError("non-finite reconstruction loss in decode_invert")
        if loss < best:
            best, best_z = loss, z.copy()
        z = z - step_size * 2.0 * dec.vjp(z, r)
    return best_z


def write_pgm(path, image):
    """Write a 2D array as ASCII PGM scaled to 0..255, with the true range in a JSON sidecar."""
    path = Path(path)
    image = np.asarray(image, dtype=np.float64)
    h, w = image.shape
    lo, hi = float(image.min()), float(image.max())
    span = hi - lo
    pix = np.zeros_like(image) if span == 0 else np.rint((image - lo) / span * 255.0)
    lines = ["P2", f"{w} {h}", "255"]
    lines += [" ".join(str(int(p)) for p in row) for row in pix]
    path.write_text("\n".join(lines) + "\n")
    sidecar = path.with_suffix(".json")
    sidecar.write_text(json.dumps({"height": h, "width": w, "min": lo, "max": hi}, sort_keys=True) + "\n")
    return [path, sidecar]


def read_pgm(path):
    path = Path(path)
    tokens = []
    for line in path.read_text().splitlines():
        tokens.extend(line.split("#", 1)[0].split())
    if tokens[0] != "P2":
        raise ValueError(f"{path} is not an ASCII PGM")
    w, h, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
    pix = np.array([int(v) for v in tokens[4:4 + w * h]], dtype=np.float64).reshape(h, w)
    sidecar = path.with_suffix(".json")
    if sidecar.exists():
        meta = json.loads(sidecar.read_text())
        return meta["min"] + pix / maxval * (meta["max"] - meta["min"])
    return pix / maxval
