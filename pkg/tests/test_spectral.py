import numpy as np
import pytest

from lbgk_hydro import spectral
from lbgk_hydro.spectral import Grid2D, RealField2D, SpectralError


def field(grid, func):
    return RealField2D.from_function(grid, func)


def random_field(grid, seed, zero_mean=False):
    rng = np.random.default_rng(seed)
    v = rng.standard_normal((grid.n, grid.n))
    if zero_mean:
        v -= v.mean()
    return RealField2D(grid, v)


def strip_nyquist(f):
    """Remove Nyquist modes so derivative identities are exact."""
    g = f.grid
    c = f.spectral()
    half = g.n // 2
    c[(np.abs(g.k1) == half) | (g.k2 == half)] = 0
    return RealField2D.from_spectral(g, c)


@pytest.fixture
def g32():
    return Grid2D(32)


def test_grid_validation():
    for bad in (7, 6, 0, 31, 32.5):
        with pytest.raises(SpectralError):
            Grid2D(bad)
    with pytest.raises(SpectralError):
        Grid2D(16, length=2.0)
    assert Grid2D(16).dx == 1 / 16


def test_field_shape_checked(g32):
    with pytest.raises(SpectralError):
        RealField2D(g32, np.zeros((32, 31)))


def test_deriv_single_mode(g32):
    f = field(g32, lambda x, y: np.sin(2 * np.pi * x))
    d = spectral.deriv(f, 0)
    expected = 2 * np.pi * np.cos(2 * np.pi * g32.coordinates()[0])
    assert np.max(np.abs(d.values - expected)) < 1e-12


def test_deriv_constant_and_mixed(g32):
    c = RealField2D(g32, np.full((32, 32), 3.0))
    assert np.max(np.abs(spectral.deriv(c, 0).values)) < 1e-14
    assert np.max(np.abs(spectral.deriv(c, 1).values)) < 1e-14
    f = field(g32, lambda x, y: np.sin(2 * np.pi * x) * np.sin(4 * np.pi * y))
    x, y = g32.coordinates()
    expected = 4 * np.pi * np.sin(2 * np.pi * x) * np.cos(4 * np.pi * y)
    assert np.max(np.abs(spectral.deriv(f, 1).values - expected)) < 1e-11
    with pytest.raises(SpectralError):
        spectral.deriv(f, 2)


def test_nyquist_derivative_is_zero():
    g = Grid2D(16)
    f = field(g, lambda x, y: np.cos(np.pi * 16 * x))
    assert np.max(np.abs(spectral.deriv(f, 0).values)) < 1e-12


def test_inv_laplacian_examples(g32):
    f = field(g32, lambda x, y: np.sin(2 * np.pi * x))
    got = spectral.inv_laplacian(f)
    assert np.max(np.abs(got.values + f.values / (4 * np.pi**2))) < 1e-14
    assert np.all(spectral.inv_laplacian(RealField2D.zeros(g32)).values == 0)
    tg = field(g32, lambda x, y: 10 * np.sin(4 * np.pi * x) * np.sin(4 * np.pi * y))
    got = spectral.inv_laplacian(tg)
    assert np.max(np.abs(got.values + tg.values / (32 * np.pi**2))) < 1e-13


def test_inv_laplacian_rejects_nonzero_mean(g32):
    f = field(g32, lambda x, y: 1 + np.sin(2 * np.pi * x))
    with pytest.raises(SpectralError, match="zero mean"):
        spectral.inv_laplacian(f)


@pytest.mark.parametrize("n", [16, 32, 64])
def test_inverse_laplacian_inverts_laplacian(n):
    g = Grid2D(n)
    f = strip_nyquist(random_field(g, n))
    back = spectral.inv_laplacian(spectral.laplacian(f))
    target = f - spectral.mean(f)
    err = np.max(np.abs(back.values - target.values)) / np.max(np.abs(target.values))
    assert err < 1e-11
    fwd = spectral.laplacian(spectral.inv_laplacian(target))
    assert np.max(np.abs(fwd.values - target.values)) < 1e-11


def test_dealias_examples():
    g = Grid2D(24)
    low = field(g, lambda x, y: np.sin(2 * np.pi * 8 * x) * np.cos(2 * np.pi * 3 * y))
    assert np.max(np.abs(spectral.dealias(low).values - low.values)) < 1e-13
    nyq = field(g, lambda x, y: np.cos(np.pi * 24 * x))
    assert np.max(np.abs(spectral.dealias(nyq).values)) < 1e-13
    K = 8
    prod = field(g, lambda x, y: np.sin(2 * np.pi * K * x) * np.sin(2 * np.pi * K * y))
    # every mode (+-K, +-K) has max(|k1|, |k2|) = n/3 and survives
    assert np.max(np.abs(spectral.dealias(prod).values - prod.values)) < 1e-13
    s5 = field(g, lambda x, y: np.sin(2 * np.pi * 5 * x))
    # sin^2 = (1 - cos(2 pi 10 x)) / 2 and the mode 10 > 8 is removed
    assert np.max(np.abs(spectral.dealias(s5 * s5).values - 0.5)) < 1e-13


def test_cutoff_examples(g32):
    f = random_field(g32, 1)
    eps = 0.99 / (2 * np.pi * 16 * np.sqrt(2))
    assert np.array_equal(spectral.fourier_cutoff(f, eps).values, f.values) or np.allclose(
        spectral.fourier_cutoff(f, eps).values, f.values, atol=1e-14
    )
    only_mean = spectral.fourier_cutoff(f, 1.0)
    assert np.allclose(only_mean.values, spectral.mean(f), atol=1e-14)
    with pytest.raises(SpectralError):
        spectral.fourier_cutoff(f, 0.0)


def test_cutoff_uses_strict_inequality():
    g = Grid2D(16)
    f = field(g, lambda x, y: np.cos(2 * np.pi * 4 * x))
    # |k| = 4 equals 1/eps = 4 and is dropped; eps slightly smaller keeps it
    assert np.max(np.abs(spectral.fourier_cutoff(f, 0.25).values)) < 1e-14
    kept = spectral.fourier_cutoff(f, 0.2499)
    assert np.max(np.abs(kept.values - f.values)) < 1e-13


def test_cutoff_idempotent_self_adjoint_commuting(g32):
    eps = 0.05
    f, h = random_field(g32, 2), random_field(g32, 3)
    once = spectral.fourier_cutoff(f, eps)
    twice = spectral.fourier_cutoff(once, eps)
    assert np.array_equal(g32.cutoff_mask(eps), g32.cutoff_mask(eps))
    assert np.allclose(twice.values, once.values, rtol=0, atol=1e-15)
    lhs = spectral.inner(spectral.fourier_cutoff(f, eps), h)
    rhs = spectral.inner(f, spectral.fourier_cutoff(h, eps))
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)
    for axis in (0, 1):
        a = spectral.deriv(spectral.fourier_cutoff(f, eps), axis)
        b = spectral.fourier_cutoff(spectral.deriv(f, axis), eps)
        assert spectral.l2_norm(a - b) <= 1e-12 * spectral.l2_norm(a)


def test_norms_and_means(g32):
    one = RealField2D(g32, np.ones((32, 32)))
    assert spectral.l2_norm(one) == pytest.approx(1.0, abs=1e-15)
    s = field(g32, lambda x, y: np.sin(2 * np.pi * x))
    assert abs(spectral.mean(s)) < 1e-15
    lap = spectral.laplacian(s)
    assert np.max(np.abs(lap.values + 4 * np.pi**2 * s.values)) < 1e-11


@pytest.mark.parametrize("n", [16, 32, 64])
def test_round_trip_and_parseval(n):
    g = Grid2D(n)
    f = random_field(g, n + 1)
    back = RealField2D.from_spectral(g, f.spectral())
    assert np.max(np.abs(back.values - f.values)) <= 1e-13 * np.max(np.abs(f.values))
    assert spectral.spectral_l2_norm(f) == pytest.approx(spectral.l2_norm(f), rel=1e-12)


def test_curl_of_gradient_and_of_perp_velocity(g32):
    phi = field(g32, lambda x, y: np.sin(2 * np.pi * x) * np.cos(6 * np.pi * y))
    u1, u2 = spectral.deriv(phi, 0), spectral.deriv(phi, 1)
    assert np.max(np.abs(spectral.curl(u1, u2).values)) < 1e-11
    w = strip_nyquist(random_field(g32, 5, zero_mean=True))
    v1, v2 = spectral.perp_grad_inv_laplacian(w)
    assert np.max(np.abs(spectral.curl(v1, v2).values - w.values)) < 1e-11


def test_field_arithmetic_and_grid_mismatch(g32):
    a = RealField2D(g32, np.ones((32, 32)))
    b = 2 * a + 1 - a
    assert np.all(b.values == 2.0)
    assert np.all((-b).values == -2.0)
    other = RealField2D.zeros(Grid2D(16))
    with pytest.raises(SpectralError):
        a + other


def test_thread_env(monkeypatch):
    monkeypatch.setenv(spectral.THREADS_ENV, "2")
    assert spectral.fft_workers() == 2
    monkeypatch.setenv(spectral.THREADS_ENV, "0")
    assert spectral.fft_workers() >= 1
    monkeypatch.setenv(spectral.THREADS_ENV, "-1")
    with pytest.raises(SpectralError):
        spectral.fft_workers()
    monkeypatch.setenv(spectral.THREADS_ENV, "many")
    with pytest.raises(SpectralError):
        spectral.fft_workers()
