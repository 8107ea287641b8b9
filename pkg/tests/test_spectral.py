import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from depinlab import _kernels
from depinlab.errors import ConfigError, NumericalError
from depinlab.spectral import (
    GridField,
    SpectralField,
    apply_half_laplacian,
    forward_transform,
    h_half_seminorm_sq,
    half_laplacian_kernel,
    half_laplacian_matrix,
    inverse_transform,
    l2_norm,
    mean,
    wavenumbers,
)

sizes = st.sampled_from([4, 8, 16, 32, 64])


def test_constant_field_has_only_mean_mode():
    s = forward_transform(GridField.constant(2.5, 16))
    assert s.coeff(0) == pytest.approx(2.5)
    assert np.max(np.abs(s.coeffs[1:])) < 1e-15


def test_cosine_coefficients():
    g = GridField.from_function(lambda x: np.cos(2 * np.pi * x), 32)
    s = forward_transform(g)
    assert s.coeff(1) == pytest.approx(0.5, abs=1e-15)
    assert s.coeff(-1) == pytest.approx(0.5, abs=1e-15)
    assert h_half_seminorm_sq(s) == pytest.approx(0.5, abs=1e-14)
    assert h_half_seminorm_sq(s, one_sided=True) == pytest.approx(0.25, abs=1e-14)


def test_half_laplacian_on_eigenfunction():
    g = GridField.from_function(lambda x: np.sin(2 * np.pi * 3 * x), 64)
    out = inverse_transform(apply_half_laplacian(forward_transform(g), 0.7))
    np.testing.assert_allclose(out.values, -0.7 * 3 * g.values, atol=1e-13)


def test_nyquist_label_and_wavenumbers():
    k = wavenumbers(8)
    assert list(k) == [0, 1, 2, 3, 4, -3, -2, -1]
    g = GridField(np.array([1.0, -1.0] * 4))
    assert forward_transform(g).coeff(4) == pytest.approx(1.0)


def test_rejects_bad_sizes_and_values():
    with pytest.raises(ConfigError):
        GridField(np.zeros(12))
    with pytest.raises(NumericalError):
        GridField(np.array([0.0, np.nan, 0.0, 0.0]))
    with pytest.raises(NumericalError):
        forward_transform(np.array([0.0, np.inf, 0.0, 0.0]))


def test_inverse_rejects_asymmetric_spectrum():
    c = np.zeros(8, dtype=complex)
    c[1] = 1.0
    with pytest.raises(NumericalError):
        inverse_transform(SpectralField(c))


def test_kernel_offdiagonal_nonpositive():
    for N in (4, 16, 256):
        row = half_laplacian_kernel(N)
        assert row[0] == pytest.approx(N / 4)
        assert np.all(row[1:] <= 1e-12)
        assert abs(row.sum()) < 1e-10


def test_dense_matrix_matches_multiplier():
    rng = np.random.default_rng(3)
    g = rng.standard_normal(32)
    spectral = inverse_transform(apply_half_laplacian(forward_transform(g), 1.0)).values
    np.testing.assert_allclose(-half_laplacian_matrix(32) @ g, spectral, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(N=sizes, seed=st.integers(0, 2**32 - 1))
def test_round_trip(N, seed):
    g = np.random.default_rng(seed).standard_normal(N)
    back = inverse_transform(forward_transform(g)).values
    np.testing.assert_allclose(back, g, atol=1e-12)


@settings(max_examples=40, deadline=None)
@given(N=sizes, seed=st.integers(0, 2**32 - 1), shift=st.floats(-5, 5))
def test_seminorm_ignores_mean_and_parseval(N, seed, shift):
    g = np.random.default_rng(seed).standard_normal(N)
    a = h_half_seminorm_sq(forward_transform(g))
    b = h_half_seminorm_sq(forward_transform(g + shift))
    assert a >= 0
    assert b == pytest.approx(a, rel=1e-10, abs=1e-12)
    s = forward_transform(g)
    assert np.sum(np.abs(s.coeffs) ** 2) == pytest.approx(l2_norm(g) ** 2, rel=1e-12)
    assert mean(g) == pytest.approx(s.coeff(0).real, abs=1e-12)


@settings(max_examples=30, deadline=None)
@given(N=st.sampled_from([4, 8, 16, 64, 256]), seed=st.integers(0, 2**32 - 1),
       c=st.floats(0.01, 2.0))
def test_compiled_elastic_term_matches_numpy(N, seed, c):
    g = np.random.default_rng(seed).standard_normal(N)
    rev, tw = _kernels.fft_tables(N)
    mult = (-c * np.abs(wavenumbers(N)) / N)[: N // 2 + 1].astype(complex)
    out = np.empty(N)
    _kernels.elastic_into(g, out, np.zeros(N // 2 + 1, dtype=complex), mult, rev, tw)
    ref = inverse_transform(apply_half_laplacian(forward_transform(g), c)).values
    np.testing.assert_allclose(out, ref, atol=1e-12)
