import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rodeo.dataset import Dataset
from rodeo.kernels import Kernel
from rodeo.loclin import (
    InsufficientSupportError,
    Smoother,
    derivative_stat,
    derivative_stats,
    fit_local_linear,
)


def random_data(seed, n=50, d=3, noise=1.0):
    rng = np.random.default_rng(seed)
    X = rng.uniform(size=(n, d))
    Y = np.sin(3 * X[:, 0]) + X[:, -1] ** 2 + noise * rng.normal(size=n)
    return Dataset(X, Y), rng


def fd_derivative(data, x, h, j, kernel=Kernel.GAUSSIAN, smoother=Smoother.LOCAL_LINEAR):
    step = 1e-5 * h[j]
    hp, hm = h.copy(), h.copy()
    hp[j] += step
    hm[j] -= step
    up = fit_local_linear(data, x, hp, kernel, smoother).estimate
    down = fit_local_linear(data, x, hm, kernel, smoother).estimate
    return (up - down) / (2 * step)


class TestFit:
    def test_constant_reproduction(self):
        data, rng = random_data(0)
        data = data.with_response(np.full(data.n, 3.25))
        fit = fit_local_linear(data, rng.uniform(size=3), [0.3, 0.4, 0.5])
        assert fit.estimate == pytest.approx(3.25, abs=1e-12)
        np.testing.assert_allclose(fit.coefficients[1:], 0.0, atol=1e-10)

    def test_linear_reproduction(self):
        data, rng = random_data(1)
        data = data.with_response(1 + 2 * data.X[:, 0])
        for _ in range(10):
            x = rng.uniform(size=3)
            fit = fit_local_linear(data, x, rng.uniform(0.1, 1.0, size=3))
            assert fit.estimate == pytest.approx(1 + 2 * x[0], abs=1e-10)

    def test_huge_bandwidth_is_ols(self):
        data, rng = random_data(2)
        x = rng.uniform(size=3)
        design = np.column_stack([np.ones(data.n), data.X])
        beta, *_ = np.linalg.lstsq(design, data.Y, rcond=None)
        ols = beta[0] + x @ beta[1:]
        fit = fit_local_linear(data, x, [1e6] * 3)
        assert fit.estimate == pytest.approx(ols, abs=1e-6)

    @pytest.mark.parametrize("kernel", list(Kernel))
    def test_effective_kernel_reproduces_affine(self, kernel):
        data, rng = random_data(3, n=200)
        x = np.full(3, 0.5)
        fit = fit_local_linear(data, x, [0.3, 0.3, 0.3], kernel)
        G = fit.effective_weights
        assert not fit.condition_flag
        assert G.sum() == pytest.approx(1.0, abs=1e-10)
        np.testing.assert_allclose(G @ (data.X - x), 0.0, atol=1e-10)
        assert fit.estimate == pytest.approx(G @ data.Y, abs=1e-10)

    def test_insufficient_support(self):
        data, _ = random_data(4)
        with pytest.raises(InsufficientSupportError):
            fit_local_linear(data, np.full(3, 0.5), [1e-4] * 3, Kernel.EPANECHNIKOV)

    def test_degenerate_design_sets_flag(self):
        rng = np.random.default_rng(5)
        X = np.column_stack([rng.uniform(size=30), np.full(30, 0.5)])
        data = Dataset(X, X[:, 0] + rng.normal(scale=0.1, size=30))
        fit = fit_local_linear(data, [0.5, 0.5], [0.3, 0.3])
        assert fit.condition_flag
        assert np.isfinite(fit.estimate)

    def test_kernel_regression_is_weighted_mean(self):
        data, rng = random_data(6)
        x = rng.uniform(size=3)
        h = np.array([0.3, 0.5, 0.7])
        w = np.exp(-0.5 * np.sum(((data.X - x) / h) ** 2, axis=1))
        fit = fit_local_linear(data, x, h, smoother=Smoother.KERNEL_REGRESSION)
        assert fit.estimate == pytest.approx(w @ data.Y / w.sum(), rel=1e-12)


class TestDerivative:
    def test_linear_data_has_zero_derivative(self):
        data, rng = random_data(7)
        data = data.with_response(2 - data.X[:, 0] + 3 * data.X[:, 2])
        for _ in range(5):
            _, stats = derivative_stats(data, rng.uniform(size=3), rng.uniform(0.1, 1, 3), sigma=1.0)
            for s in stats:
                assert abs(s.z) < 1e-8

    def test_matches_finite_differences(self):
        data, rng = random_data(8, n=50, d=3)
        for _ in range(10):
            x = rng.uniform(size=3)
            h = rng.uniform(0.2, 1.0, size=3)
            _, stats = derivative_stats(data, x, h)
            for j, s in enumerate(stats):
                fd = fd_derivative(data, x, h, j)
                if abs(s.z) >= 1e-4:
                    assert abs(fd - s.z) / abs(s.z) <= 1e-5
                else:
                    assert abs(fd - s.z) <= 1e-9

    def test_kernel_regression_derivative_matches_finite_differences(self):
        data, rng = random_data(9)
        x = rng.uniform(size=3)
        h = np.array([0.3, 0.6, 0.9])
        _, stats = derivative_stats(data, x, h, smoother=Smoother.KERNEL_REGRESSION)
        for j, s in enumerate(stats):
            fd = fd_derivative(data, x, h, j, smoother=Smoother.KERNEL_REGRESSION)
            assert fd == pytest.approx(s.z, rel=1e-5)

    def test_scale_is_linear_in_sigma(self):
        data, rng = random_data(10)
        x, h = rng.uniform(size=3), [0.4, 0.5, 0.6]
        a = derivative_stat(data, x, h, 1, sigma=0.0)
        b = derivative_stat(data, x, h, 1, sigma=0.7)
        c = derivative_stat(data, x, h, 1, sigma=1.4)
        assert a.scale == 0.0
        assert c.scale == 2 * b.scale
        assert a.z == b.z == c.z

    def test_z_is_gj_dot_y(self):
        data, rng = random_data(11)
        s = derivative_stat(data, rng.uniform(size=3), [0.5] * 3, 0, sigma=2.0)
        assert s.z == pytest.approx(s.gj_weights @ data.Y, rel=1e-12)
        assert s.scale == pytest.approx(2.0 * np.linalg.norm(s.gj_weights), rel=1e-12)

    @settings(max_examples=25, deadline=None)
    @given(
        intercept=st.floats(-10, 10),
        slopes=st.lists(st.floats(-10, 10), min_size=3, max_size=3),
        seed=st.integers(0, 1000),
    )
    def test_affine_invariance(self, intercept, slopes, seed):
        data, rng = random_data(seed, n=60)
        x, h = rng.uniform(size=3), rng.uniform(0.2, 1.0, size=3)
        shifted = data.with_response(data.Y + intercept + data.X @ np.array(slopes))
        _, a = derivative_stats(data, x, h)
        _, b = derivative_stats(shifted, x, h)
        for sa, sb in zip(a, b):
            assert sb.z == pytest.approx(sa.z, abs=1e-8 * (1 + abs(intercept) + np.abs(slopes).sum()))

    def test_variance_formula(self):
        rng = np.random.default_rng(12)
        X = rng.uniform(size=(100, 3))
        mean = X[:, 0] ** 2
        sigma = 0.5
        x, h = np.full(3, 0.5), np.array([0.4, 0.5, 0.6])
        base = Dataset(X, mean)
        _, stats = derivative_stats(base, x, h, sigma=sigma)
        G = np.column_stack([s.gj_weights for s in stats])
        draws = (mean + sigma * rng.normal(size=(2000, 100))) @ G
        np.testing.assert_allclose(draws.std(axis=0, ddof=1), [s.scale for s in stats], rtol=0.05)
