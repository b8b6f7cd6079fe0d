import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tfextend.extend import (
    Dmd,
    ForecastDivergenceWarning,
    ForecastModel,
    SigExt,
    Symmetric,
    build_lag_matrices,
    default_K,
    default_M,
    dmd_ext,
    fit_sigext,
    forecast,
    make_extender,
    sig_ext,
    symmetric_ext,
)
from tfextend.numerics import NumericalError, gaussian_noise
from tfextend.signals import HarmonicComponent, Signal, sum_of_sines


def sig(v, fs=1.0):
    return Signal(np.asarray(v, dtype=float), fs)


def test_lag_matrices_small_ramp():
    # the trailing K + M = 5 samples drive the fit
    lm = build_lag_matrices(np.arange(1.0, 6.0), 2, 3)
    np.testing.assert_array_equal(lm.X, [[1, 2, 3], [2, 3, 4]])
    np.testing.assert_array_equal(lm.Y, [[2, 3, 4], [3, 4, 5]])
    lm6 = build_lag_matrices(np.arange(1.0, 7.0), 2, 3)
    np.testing.assert_array_equal(lm6.X, [[2, 3, 4], [3, 4, 5]])


def test_lag_matrices_minimal():
    lm = build_lag_matrices(np.array([3.0, 7.0]), 1, 1)
    np.testing.assert_array_equal(lm.X, [[3.0]])
    np.testing.assert_array_equal(lm.Y, [[7.0]])


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 12), st.integers(0, 30), st.integers(0, 20), st.integers(0, 1000))
def test_lag_matrix_shift_structure(M, dK, extra, seed):
    K = M + dK
    x = np.random.default_rng(seed).standard_normal(K + M + extra)
    lm = build_lag_matrices(x, M, K)
    np.testing.assert_array_equal(lm.Y[:-1], lm.X[1:])
    np.testing.assert_array_equal(lm.Y[:, :-1], lm.X[:, 1:])
    np.testing.assert_array_equal(lm.Y[:, -1], x[-M:])
    np.testing.assert_array_equal(lm.X[:, 0], x[-(K + M):-K])


def test_lag_matrices_size_errors():
    with pytest.raises(ValueError):
        build_lag_matrices(np.arange(10.0), 4, 3)
    with pytest.raises(ValueError):
        build_lag_matrices(np.arange(10.0), 4, 7)
    with pytest.raises(ValueError):
        build_lag_matrices(np.arange(10.0), 0, 3)


def test_fit_ramp_alpha():
    # hand oracle: X X^T = [[14, 20], [20, 29]], X y = (26, 38) -> alpha = (-1, 2)
    for n in (5, 6):
        lm = build_lag_matrices(np.arange(1.0, n + 1), 2, 3)
        for solver in ("normal", "svd"):
            np.testing.assert_allclose(fit_sigext(lm, solver).alpha, [-1.0, 2.0], atol=1e-9)


def test_fit_period_four_cosine():
    x = sum_of_sines([HarmonicComponent(1.0, 0.25)], 12, 1.0).samples
    model = fit_sigext(build_lag_matrices(x, 2, 6), "svd")
    np.testing.assert_allclose(model.alpha, [-1.0, 0.0], atol=1e-12)


def test_fit_unknown_solver():
    with pytest.raises(ValueError):
        fit_sigext(build_lag_matrices(np.arange(6.0), 2, 3), "qr")


def test_forecast_examples():
    m = ForecastModel(np.array([-1.0, 2.0]), 2, 3, "normal", 1.0)
    np.testing.assert_allclose(forecast(m, [5.0, 6.0], 3), [7.0, 8.0, 9.0])
    copy_last = ForecastModel(np.array([0.0, 0.0, 1.0]), 3, 5, "normal", 1.0)
    np.testing.assert_array_equal(forecast(copy_last, [1.0, 2.0, 4.5], 4), [4.5] * 4)
    assert forecast(m, [5.0, 6.0], 0).size == 0
    with pytest.raises(ValueError):
        forecast(m, [1.0, 2.0, 3.0], 2)
    bad = ForecastModel(np.array([np.nan, 1.0]), 2, 3, "normal", 1.0)
    with pytest.raises(NumericalError):
        forecast(bad, [1.0, 2.0], 2)


def test_forecast_equals_companion_power():
    rng = np.random.default_rng(4)
    alpha = rng.standard_normal(5) * 0.3
    m = ForecastModel(alpha, 5, 10, "normal", 1.0)
    tail = rng.standard_normal(5)
    out = forecast(m, tail, 12)
    A = m.companion()
    for ell in (1, 5, 12):
        assert out[ell - 1] == pytest.approx((np.linalg.matrix_power(A, ell) @ tail)[-1], abs=1e-12)


def test_forecast_divergence_is_held():
    m = ForecastModel(np.array([0.0, 3.0]), 2, 3, "normal", 1.0)
    with pytest.warns(ForecastDivergenceWarning):
        out = forecast(m, [1.0, 1.0], 20, limit=100.0)
    assert np.all(np.isfinite(out))
    assert np.max(np.abs(out)) <= 100.0
    assert out[-1] == out[3]


def test_cosine_continuation():
    z = sum_of_sines([HarmonicComponent(1.0, 0.25)], 60, 1.0).samples
    ext = sig_ext(sig(z[:20]), 2, 6, 40, "svd").samples
    np.testing.assert_allclose(ext[20:], z[20:], atol=1e-8)


def test_sig_ext_ramp_and_zero_length():
    x = sig(np.arange(1.0, 7.0))
    np.testing.assert_allclose(sig_ext(x, 2, 3, 3, "svd").samples[6:], [7, 8, 9], atol=1e-9)
    assert sig_ext(x, 2, 3, 0) is x


def test_symmetric_examples():
    np.testing.assert_array_equal(symmetric_ext(sig([1, 2, 3]), 2).samples, [1, 2, 3, 2, 1])
    even = np.array([1.0, 4.0, 9.0, 4.0, 1.0])
    np.testing.assert_array_equal(symmetric_ext(sig(even[:3]), 2).samples, even)
    with pytest.raises(ValueError):
        symmetric_ext(sig([1, 2, 3]), 3)


def test_dmd_full_rank_matches_least_squares():
    rng = np.random.default_rng(8)
    z = sum_of_sines([HarmonicComponent(1.0, 0.05), HarmonicComponent(0.5, 0.13)], 400, 1.0)
    x = sig(z.samples + 0.05 * rng.standard_normal(400))
    M, K, L = 8, 40, 30
    a = dmd_ext(x, M, K, L, rank=M).samples
    b = sig_ext(x, M, K, L, "svd").samples
    np.testing.assert_allclose(a, b, atol=1e-6)


def test_dmd_pure_cosine_rank_two():
    z = sum_of_sines([HarmonicComponent(1.0, 0.07)], 200, 1.0).samples
    out = dmd_ext(sig(z[:120]), 6, 30, 80, rank=2).samples
    np.testing.assert_allclose(out[120:], z[120:], atol=1e-8)


def test_dmd_rank_errors():
    z = sum_of_sines([HarmonicComponent(1.0, 0.07)], 200, 1.0).samples
    with pytest.raises(NumericalError, match="usable rank is 2"):
        dmd_ext(sig(z), 6, 30, 10, rank=4)
    with pytest.raises(ValueError):
        dmd_ext(sig(z), 6, 30, 10, rank=7)


def stable_recurrence(q, n, seed):
    """Noiseless output of an order-q recurrence with poles inside the unit disk."""
    rng = np.random.default_rng(seed)
    radii = rng.uniform(0.97, 0.999, q // 2)
    angles = rng.uniform(0.1, 3.0, q // 2)
    poles = np.concatenate([radii * np.exp(1j * angles), radii * np.exp(-1j * angles)])
    if q % 2:
        poles = np.append(poles, rng.uniform(0.9, 0.99))
    c = np.real(np.poly(poles))  # x[t] = -c1 x[t-1] - ... - cq x[t-q]
    x = np.zeros(n)
    x[:q] = rng.standard_normal(q)
    for t in range(q, n):
        x[t] = -np.dot(c[1:], x[t - q:t][::-1])
    return x


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 8), st.integers(0, 6), st.integers(0, 10_000))
def test_exact_recurrence_is_continued(q, extra_m, seed):
    M = q + extra_m
    K = 3 * M + 10
    L = 5 * q
    x = stable_recurrence(q, K + M + L + 50, seed)
    N = x.size - L
    out = sig_ext(sig(x[:N]), M, K, L, "svd").samples[N:]
    assert np.max(np.abs(out - x[N:])) <= 1e-6 * np.max(np.abs(x))


@pytest.mark.parametrize("M", [2, 5, 12, 20])
def test_full_map_has_shift_rows(M):
    rng = np.random.default_rng(M)
    x = rng.standard_normal(5 * M + 40)
    K = 4 * M
    lm = build_lag_matrices(x, M, K)
    # all M rows, solved explicitly: A = Y X^T (X X^T)^-1
    A = np.linalg.solve(lm.X @ lm.X.T, lm.X @ lm.Y.T).T
    np.testing.assert_allclose(A[:-1], np.eye(M, k=1)[:-1], atol=1e-9)
    np.testing.assert_allclose(A[-1], fit_sigext(lm).alpha, atol=1e-9)


@pytest.mark.parametrize("ext", [SigExt(5, 20), Symmetric(), Dmd(5, 20, 3)])
def test_extension_prefix_and_determinism(ext):
    x = sig(np.random.default_rng(1).standard_normal(80) + 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", ForecastDivergenceWarning)
        a = ext.extend(x, 15).samples
        b = ext.extend(x, 15).samples
    np.testing.assert_array_equal(a[:80], x.samples)
    np.testing.assert_array_equal(a, b)
    assert a.size == 95


def test_default_sizes_and_factory():
    assert default_M(250) == 375 and default_K(375) == 937
    assert make_extender("sigext", 250) == SigExt(375, 937)
    assert make_extender("dmd", 10) == Dmd(15, 37, 15)
    assert make_extender("symmetric", 10) == Symmetric()
    with pytest.raises(ValueError):
        make_extender("gpr", 10)


def test_noisy_fit_is_finite_and_conditioned():
    z = sum_of_sines([HarmonicComponent(1.0, 0.1)], 600, 1.0).samples
    x = z + gaussian_noise(600, 1e-2, 3)
    m = fit_sigext(build_lag_matrices(x, 20, 100))
    assert np.all(np.isfinite(m.alpha)) and m.cond >= 1.0 and m.jitter == 0.0
