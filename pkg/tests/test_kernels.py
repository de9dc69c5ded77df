import math

import numpy as np
import pytest

from rodeo.kernels import SQRT5, Kernel, kernel_weight, weight_and_logderiv


def test_kernel_values():
    assert kernel_weight(Kernel.GAUSSIAN, 0.0) == 1.0
    assert kernel_weight(Kernel.GAUSSIAN, 1.0) == pytest.approx(0.6065306597126334, rel=1e-15)
    assert kernel_weight(Kernel.EPANECHNIKOV, 3.0) == 0.0
    assert kernel_weight(Kernel.EPANECHNIKOV, 0.0) == 5.0


def test_gaussian_logderiv_entry():
    diag = weight_and_logderiv(np.array([[0.5]]), np.array([0.0]), [0.5], Kernel.GAUSSIAN)
    assert diag.l[0, 0] == pytest.approx(2.0, rel=1e-15)


def test_epanechnikov_at_center():
    X = np.array([[0.2, 0.3, 0.4]])
    diag = weight_and_logderiv(X, X[0], [0.1, 0.2, 0.3], Kernel.EPANECHNIKOV)
    assert diag.w[0] == 125.0
    np.testing.assert_array_equal(diag.l[0], 0.0)


def test_gaussian_product():
    diag = weight_and_logderiv(np.array([[1.0, 1.0]]), np.zeros(2), [1.0, 1.0])
    assert diag.w[0] == pytest.approx(math.exp(-1.0), rel=1e-15)


def test_nonpositive_bandwidth():
    with pytest.raises(ValueError):
        weight_and_logderiv(np.zeros((2, 2)), np.zeros(2), [1.0, 0.0])


def test_gaussian_derivative_matches_finite_differences():
    rng = np.random.default_rng(0)
    X = rng.uniform(size=(40, 3))
    x = rng.uniform(size=3)
    h = rng.uniform(0.2, 1.0, size=3)
    diag = weight_and_logderiv(X, x, h)
    for j in range(3):
        step = 1e-6 * h[j]
        hp, hm = h.copy(), h.copy()
        hp[j] += step
        hm[j] -= step
        fd = (weight_and_logderiv(X, x, hp).w - weight_and_logderiv(X, x, hm).w) / (2 * step)
        np.testing.assert_allclose(diag.wl[:, j], fd, rtol=1e-6, atol=1e-12)


def test_epanechnikov_joint_product_matches_finite_differences_inside():
    rng = np.random.default_rng(1)
    X = rng.uniform(size=(60, 2))
    x = np.array([0.5, 0.5])
    h = np.array([0.2, 0.3])
    diag = weight_and_logderiv(X, x, h, Kernel.EPANECHNIKOV)
    u2 = ((X - x) / h) ** 2
    interior = np.all(np.abs(u2 - 5.0) > 1e-3, axis=1)
    for j in range(2):
        step = 1e-7 * h[j]
        hp, hm = h.copy(), h.copy()
        hp[j] += step
        hm[j] -= step
        fd = (weight_and_logderiv(X, x, hp, "epanechnikov").w
              - weight_and_logderiv(X, x, hm, "epanechnikov").w) / (2 * step)
        np.testing.assert_allclose(diag.wl[interior, j], fd[interior], rtol=1e-6, atol=1e-9)


def test_epanechnikov_support_edge_is_finite():
    h = np.array([1.0, 1.0])
    X = np.array([[SQRT5 * (1 - 1e-12), 0.0], [0.0, 0.0], [3.0, 0.0]])
    diag = weight_and_logderiv(X, np.zeros(2), h, Kernel.EPANECHNIKOV)
    assert np.all(np.isfinite(diag.wl))
    assert diag.w[2] == 0.0 and diag.wl[2, 0] == 0.0
    # at the edge K_1 -> 0 while W L_1 -> 2 u^2 / h * K_2 = 2 * 5 * 5
    assert diag.w[0] == pytest.approx(0.0, abs=1e-9)
    assert diag.wl[0, 0] == pytest.approx(50.0, rel=1e-10)
    assert diag.l[0, 0] > 1e10


@pytest.mark.parametrize("kernel", list(Kernel))
def test_symmetry(kernel):
    rng = np.random.default_rng(2)
    x = rng.uniform(size=3)
    D = rng.normal(scale=0.3, size=(20, 3))
    a = weight_and_logderiv(x + D, x, [0.4, 0.5, 0.6], kernel)
    b = weight_and_logderiv(x - D, x, [0.4, 0.5, 0.6], kernel)
    np.testing.assert_allclose(a.w, b.w, rtol=1e-13)
    np.testing.assert_allclose(a.wl, b.wl, rtol=1e-13)


def test_gaussian_logderiv_nonnegative():
    rng = np.random.default_rng(3)
    diag = weight_and_logderiv(rng.normal(size=(30, 4)), np.zeros(4), [0.3] * 4)
    assert np.all(diag.l >= 0) and np.all(diag.w >= 0)


def test_epanechnikov_support_grows_with_bandwidth():
    rng = np.random.default_rng(4)
    X = rng.uniform(size=(200, 3))
    x = np.full(3, 0.5)
    h = np.array([0.05, 0.1, 0.15])
    prev = set()
    for scale in [1.0, 1.3, 2.0, 4.0]:
        support = set(np.flatnonzero(weight_and_logderiv(X, x, h * scale, "epanechnikov").w > 0))
        assert prev <= support
        prev = support
