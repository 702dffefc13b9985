import numpy as np
import pytest

from flair_lab.flow_core import DomainError
from flair_lab.forward_ops import (
    Blur,
    DecoderForward,
    Downsample,
    Identity,
    Mask,
    Observation,
    ToyDecoder,
    adjoint,
    apply,
    decode_invert,
    observe,
    read_pgm,
    write_pgm,
)

OPERATORS = [
    Identity(7),
    Mask(9, [0, 3, 4, 8]),
    Mask((4, 4), [1, 5, 6, 15]),
    Downsample(12, 3),
    Downsample((8, 8), 2),
    Blur(11, [0.25, 0.5, 0.25]),
    Blur((6, 10), Blur.binomial_kernel(5)),
    Blur(9, [0.1, 0.2, 0.3, 0.15, 0.25]),
]


class TestApply:
    def test_examples(self):
        np.testing.assert_allclose(apply(Downsample(4, 2), [1, 3, 5, 7]), [2, 6])
        np.testing.assert_allclose(apply(Blur(3, [0.25, 0.5, 0.25]), [0, 1, 0]), [0.25, 0.5, 0.25])
        np.testing.assert_allclose(apply(Mask(3, [0, 2]), [7, 8, 9]), [7, 9])

    def test_adjoint_examples(self):
        np.testing.assert_allclose(adjoint(Mask(3, [0, 2]), [7, 9]), [7, 0, 9])
        np.testing.assert_allclose(adjoint(Downsample(2, 2), [2]), [1, 1])

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            apply(Mask(3, [0]), [1.0, 2.0])
        with pytest.raises(DomainError):
            adjoint(Blur(5, [1.0]), [1.0])

    def test_even_kernel_rejected(self):
        with pytest.raises(ValueError):
            Blur(8, [0.5, 0.5])

    def test_downsample_2d(self):
        x = np.arange(16.0)
        np.testing.assert_allclose(Downsample((4, 4), 2).apply(x), [2.5, 4.5, 10.5, 12.5])

    def test_bad_factor(self):
        with pytest.raises(ValueError):
            Downsample(10, 3)


@pytest.mark.parametrize("op", OPERATORS, ids=repr)
def test_adjoint_pairing(op):
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(100):
        x, y = rng.standard_normal(op.n), rng.standard_normal(op.m)
        worst = max(worst, abs(op.apply(x) @ y - x @ op.adjoint(y)))
    assert worst < 1e-10


def test_blur_preserves_mean():
    rng = np.random.default_rng(1)
    for op in (Blur(31, Blur.binomial_kernel(7)), Blur((8, 12), Blur.binomial_kernel(5))):
        x = rng.standard_normal(op.n)
        assert abs(op.apply(x).mean() - x.mean()) < 1e-10


def test_mask_adjoint_composition():
    op = Mask(10, [1, 4, 7])
    x = np.arange(1.0, 11.0)
    out = op.adjoint(op.apply(x))
    np.testing.assert_array_equal(out[op.keep], x[op.keep])
    assert np.all(np.delete(out, op.keep) == 0)


class TestObserve:
    def test_noiseless(self):
        op = Blur(5, [0.25, 0.5, 0.25])
        x = np.arange(5.0)
        np.testing.assert_array_equal(observe(op, x, 0.0).y, op.apply(x))

    def test_seeded(self):
        op = Identity(4)
        a, b = observe(op, np.ones(4), 0.1, seed=3), observe(op, np.ones(4), 0.1, seed=3)
        np.testing.assert_array_equal(a.y, b.y)

    def test_noise_std(self):
        op = Identity(100_000)
        obs = observe(op, np.zeros(op.n), 0.01, seed=5)
        assert abs(obs.y.std() / 0.01 - 1) < 0.02

    def test_validation(self):
        with pytest.raises(ValueError):
            observe(Identity(2), np.zeros(2), -1.0)
        with pytest.raises(ValueError):
            Observation(np.zeros(3), 0.1, Identity(2))


class TestDecoder:
    def test_deterministic(self):
        z = np.linspace(-1, 1, 3)
        a = ToyDecoder.random(3, 8, seed=4).decode(z)
        b = ToyDecoder.random(3, 8, seed=4).decode(z)
        np.testing.assert_array_equal(a, b)

    def test_zero_latent_gives_bias(self):
        dec = ToyDecoder.random(3, 8, seed=4)
        np.testing.assert_array_equal(dec.decode(np.zeros(3)), dec.b2)

    def test_latent_must_be_smaller(self):
        with pytest.raises(ValueError):
            ToyDecoder.random(8, 8)

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            ToyDecoder.random(3, 8).decode(np.zeros(4))

    def test_jvp_and_vjp_match_finite_differences(self):
        rng = np.random.default_rng(2)
        h = 1e-5
        for i in range(20):
            dec = ToyDecoder.random(4, 12, seed=i)
            z, dz, g = rng.standard_normal(4), rng.standard_normal(4), rng.standard_normal(12)
            fd = (dec.decode(z + h * dz) - dec.decode(z - h * dz)) / (2 * h)
            jvp = dec.jvp(z, dz)
            assert np.linalg.norm(jvp - fd) / np.linalg.norm(fd) < 1e-4
            # <g, J dz> = <J^T g, dz>
            assert abs(g @ jvp - dec.vjp(z, g) @ dz) < 1e-10 * max(1.0, abs(g @ jvp))

    def test_composed_forward_derivative(self):
        rng = np.random.default_rng(3)
        fwd = DecoderForward(Blur(12, [0.25, 0.5, 0.25]), ToyDecoder.random(4, 12, seed=1))
        z, dz = rng.standard_normal(4), rng.standard_normal(4)
        y = rng.standard_normal(12)
        h = 1e-5
        res = lambda z: fwd.residual_grad(z, y)[0]  # noqa: E731
        fd = (res(z + h * dz) - res(z - h * dz)) / (2 * h)
        assert abs(fwd.residual_grad(z, y)[1] @ dz - fd) / abs(fd) < 1e-4

    def test_decode_invert(self):
        dec = ToyDecoder.random(3, 16, hidden=32, seed=0)
        z_star = np.array([0.4, -0.3, 0.2])
        target = dec.decode(z_star)
        z = decode_invert(dec, target, iters=5000, step_size=0.05)
        assert np.sum((dec.decode(z) - target) ** 2) < 1e-3

    def test_decode_invert_trivial(self):
        dec = ToyDecoder.random(3, 16, seed=0)
        np.testing.assert_array_equal(decode_invert(dec, np.ones(16), iters=1, step_size=0.0), np.zeros(3))


def test_pgm_round_trip(tmp_path):
    img = np.linspace(-1.0, 2.0, 12).reshape(3, 4)
    files = write_pgm(tmp_path / "a.pgm", img)
    assert [f.name for f in files] == ["a.pgm", "a.json"]
    back = read_pgm(tmp_path / "a.pgm")
    np.testing.assert_allclose(back, img, atol=3.0 / 255)
    assert back.min() == -1.0 and back.max() == 2.0
