import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from flair_lab.flow_core import (
    DomainError,
    conditional_score,
    conditional_velocity,
    denoised_prediction,
    endpoint_prediction,
    interpolate,
    score_from_velocity,
    velocity_from_score,
)

finite = st.floats(-50, 50, allow_nan=False)
inner_t = st.floats(0.001, 0.999)


def gaussian_score(x, t):
    # marginal score of (1 - t) x0 + t eps with x0 ~ N(0, 1)
    return -x / ((1 - t) ** 2 + t**2)


class TestInterpolate:
    def test_linear_blend(self):
        assert interpolate([2.0], [0.0], 0.25).x_t == pytest.approx([1.5])

    def test_fixed_point(self):
        np.testing.assert_allclose(interpolate([1, 1], [1, 1], 0.7).x_t, [1, 1])

    def test_noise_endpoint(self):
        assert interpolate([0.0], [1.0], 1.0).x_t == pytest.approx([1.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            interpolate([0.0, 1.0], [1.0], 0.5)


class TestConversions:
    def test_conditional_velocity_examples(self):
        assert conditional_velocity([0.5], [1.0], 0.5) == pytest.approx([1.0])
        assert conditional_velocity([3.0], [3.0], 0.3) == pytest.approx([0.0])
        x_t = interpolate([0.0], [1.0], 0.25).x_t
        assert conditional_velocity(x_t, [1.0], 0.25) == pytest.approx([1.0])

    def test_conditional_velocity_rejects_t_one(self):
        with pytest.raises(DomainError):
            conditional_velocity([0.0], [1.0], 1.0)

    def test_conditional_score_examples(self):
        assert conditional_score([0.0], 0.5) == pytest.approx([0.0])
        assert conditional_score([1.0], 0.5) == pytest.approx([-2.0])
        np.testing.assert_allclose(conditional_score([2.0, -2.0], 0.25), [-8.0, 8.0])
        with pytest.raises(DomainError):
            conditional_score([1.0], 0.0)

    def test_score_from_velocity_matches_gaussian(self):
        assert score_from_velocity([0.0], [1.0], 0.5) == pytest.approx([-2.0])
        assert score_from_velocity([0.0], [1.0], 0.5) == pytest.approx([gaussian_score(1.0, 0.5)])
        assert score_from_velocity([-0.8], [1.0], 0.25) == pytest.approx([-1.6])
        assert score_from_velocity([-0.8], [1.0], 0.25) == pytest.approx([gaussian_score(1.0, 0.25)])
        with pytest.raises(DomainError):
            score_from_velocity([0.0], [1.0], 0.0)

    def test_velocity_from_score(self):
        assert velocity_from_score([-2.0], [1.0], 0.5) == pytest.approx([0.0])
        assert velocity_from_score([0.0], [0.0], 0.3) == pytest.approx([0.0])
        with pytest.raises(DomainError):
            velocity_from_score([0.0], [0.0], 1.0)

    def test_near_boundary_guard(self):
        with pytest.raises(DomainError):
            conditional_velocity([0.0], [0.0], 1.0 - 1e-10)
        with pytest.raises(DomainError):
            score_from_velocity([0.0], [0.0], 1e-10)

    def test_predictions(self):
        assert endpoint_prediction([0.5], [1.0], 0.5) == pytest.approx([1.0])
        assert endpoint_prediction([1.0], [0.0], 0.5) == pytest.approx([1.0])
        assert endpoint_prediction([0.3], [7.0], 1.0) == pytest.approx([0.3])
        assert denoised_prediction([1.0], [0.0], 0.5) == pytest.approx([1.0])
        assert denoised_prediction([0.3], [7.0], 0.0) == pytest.approx([0.3])

    def test_denoised_recovers_x0(self):
        s = interpolate([0.7, -1.2], [0.1, 2.0], 0.4)
        v = conditional_velocity(s.x_t, s.eps, s.t)
        np.testing.assert_allclose(denoised_prediction(s.x_t, v, s.t), s.x0, atol=1e-12)

    def test_batched_input(self):
        x = np.arange(6.0).reshape(3, 2)
        assert score_from_velocity(np.zeros_like(x), x, 0.5).shape == (3, 2)


@settings(max_examples=300, deadline=None)
@given(x0=finite, eps=finite, t=st.floats(0.0, 0.999))
def test_path_consistency(x0, eps, t):
    s = interpolate([x0], [eps], t)
    u = conditional_velocity(s.x_t, [eps], t)
    np.testing.assert_allclose(u, [eps - x0], rtol=1e-12, atol=1e-12 * max(1.0, abs(x0), abs(eps)) / (1 - t))


@settings(max_examples=300, deadline=None)
@given(x0=finite, eps=finite, t=inner_t)
def test_score_velocity_identity(x0, eps, t):
    s = interpolate([x0], [eps], t)
    u = conditional_velocity(s.x_t, [eps], t)
    lhs = score_from_velocity(u, s.x_t, t)
    rhs = conditional_score([eps], t)
    scale = max(1.0, abs(x0), abs(eps)) / t
    np.testing.assert_allclose(lhs, rhs, rtol=0, atol=1e-12 * scale / (1 - t))


@settings(max_examples=300, deadline=None)
@given(v=finite, x=finite, t=inner_t)
def test_inverse_pair(v, x, t):
    back = velocity_from_score(score_from_velocity([v], [x], t), [x], t)
    np.testing.assert_allclose(back, [v], rtol=1e-12, atol=1e-12 * max(abs(v), abs(x), 1.0) / (t * (1 - t)))


@settings(max_examples=300, deadline=None)
@given(v=finite, x=finite, t=st.floats(0.0, 1.0))
def test_endpoint_denoised_consistency(v, x, t):
    combined = (1 - t) * denoised_prediction([x], [v], t) + t * endpoint_prediction([x], [v], t)
    np.testing.assert_allclose(combined, [x], rtol=0, atol=1e-12 * max(1.0, abs(x), abs(v)))


def test_gaussian_exactness_grid():
    # optimal field of a N(0, 1) prior is (2t - 1) x / ((1 - t)^2 + t^2)
    ts = np.linspace(0.05, 0.95, 19)
    xs = np.linspace(-3, 3, 61)
    worst = 0.0
    for t in ts:
        v = (2 * t - 1) * xs / ((1 - t) ** 2 + t**2)
        worst = max(worst, np.max(np.abs(score_from_velocity(v, xs, t) - gaussian_score(xs, t))))
    assert worst <= 1e-10
