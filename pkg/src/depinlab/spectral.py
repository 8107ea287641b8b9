"""Periodic grid fields on the unit torus and the half-Laplacian.

Fourier convention: ``ghat(k) = (1/N) sum_j g_j exp(-2 pi i k j / N)`` for the
mode ``exp(2 pi i k x)``.  The half-Laplacian acts by the multiplier ``|k|``
on the integer index ``k``; any physical ``2 pi`` is absorbed in ``c``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, NumericalError

SYMMETRY_TOL = 1e-10


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float if not np.iscomplexobj(a) else complex, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class GridField:
    """Samples ``g(x_j)`` at ``x_j = j/N`` of a 1-periodic interface height."""

    values: np.ndarray

    def __post_init__(self):
        v = _frozen(np.asarray(self.values, dtype=float))
        if v.ndim != 1 or not _is_pow2(v.size):
            raise ConfigError(f"grid size must be a power of two, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise NumericalError("grid field contains non-finite values")
        object.__setattr__(self, "values", v)

    @property
    def N(self) -> int:
        return self.values.size

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.N) / self.N

    @classmethod
    def from_function(cls, fn, N: int) -> "GridField":
        return cls(fn(np.arange(N) / N))

    @classmethod
    def constant(cls, value: float, N: int) -> "GridField":
        return cls(np.full(N, float(value)))

    def __add__(self, other):
        if isinstance(other, GridField):
            other = other.values
        return GridField(self.values + other)

    def __sub__(self, other):
        if isinstance(other, GridField):
            other = other.values
        return GridField(self.values - other)


@dataclass(frozen=True, eq=False)
class SpectralField:
    """Fourier coefficients stored in numpy FFT order.

    Index ``N/2`` holds the Nyquist mode, which we label ``k = +N/2``.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=complex, copy=True)
        if c.ndim != 1 or not _is_pow2(c.size):
            raise ConfigError(f"spectral size must be a power of two, got shape {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    @property
    def N(self) -> int:
        return self.coeffs.size

    @property
    def wavenumbers(self) -> np.ndarray:
        return wavenumbers(self.N)

    def coeff(self, k: int) -> complex:
        """Coefficient of ``exp(2 pi i k x)`` for ``-N/2 < k <= N/2``."""
        N = self.N
        if not -N // 2 < k <= N // 2:
            raise IndexError(f"wavenumber {k} outside (-{N // 2}, {N // 2}]")
        return complex(self.coeffs[k % N])


def wavenumbers(N: int) -> np.ndarray:
    """Integer wavenumbers in FFT order, Nyquist taken as ``+N/2``."""
    k = np.fft.fftfreq(N, d=1.0 / N)
    k[N // 2] = N // 2
    return k


def _values(g) -> np.ndarray:
    return g.values if isinstance(g, GridField) else np.asarray(g, dtype=float)


def forward_transform(g) -> SpectralField:
    v = _values(g)
    if not np.all(np.isfinite(v)):
        raise NumericalError("cannot transform non-finite samples")
    if not _is_pow2(v.size):
        raise ConfigError(f"grid size must be a power of two, got {v.size}")
    return SpectralField(np.fft.fft(v) / v.size)


def inverse_transform(s: SpectralField) -> GridField:
    c = s.coeffs
    # conj(c(-k)) must equal c(k) for a real field
    mirrored = np.conj(np.roll(c[::-1], 1))
    scale = max(1.0, float(np.max(np.abs(c))))
    if np.max(np.abs(mirrored - c)) > SYMMETRY_TOL * scale:
        raise NumericalError("spectral field is not conjugate symmetric")
    v = np.fft.ifft(c) * c.size
    if np.max(np.abs(v.imag)) > SYMMETRY_TOL * scale * c.size:
        raise NumericalError("inverse transform left an imaginary residue")
    return GridField(v.real)


def apply_half_laplacian(s: SpectralField, c: float) -> SpectralField:
    """Return the coefficients of ``-c (-Delta)^{1/2} g``."""
    return SpectralField(-c * np.abs(s.wavenumbers) * s.coeffs)


def h_half_seminorm_sq(s: SpectralField, one_sided: bool = False) -> float:
    """Two-sided sum ``sum_{k != 0} |k| |ghat(k)|^2``.

    With ``one_sided=True`` only ``k >= 1`` is summed, which for a real field
    is half the two-sided value.
    """
    total = float(np.sum(np.abs(s.wavenumbers) * np.abs(s.coeffs) ** 2))
    return 0.5 * total if one_sided else total


def l2_norm(g) -> float:
    v = _values(g)
    return float(np.sqrt(np.mean(v * v)))


def mean(g) -> float:
    return float(np.mean(_values(g)))


def half_laplacian_kernel(N: int) -> np.ndarray:
    """First row of the circulant matrix of ``(-Delta)^{1/2}`` on N points.

    Off-diagonal entries are non-positive, which is what makes explicit Euler
    a monotone scheme for small enough steps.
    """
    return np.real(np.fft.ifft(np.abs(wavenumbers(N))))


def half_laplacian_matrix(N: int) -> np.ndarray:
    row = half_laplacian_kernel(N)
    idx = (np.arange(N)[None, :] - np.arange(N)[:, None]) % N
    return row[idx]
