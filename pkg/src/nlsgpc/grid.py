"""
Uniform periodic grid and the discrete Fourier transform used by the propagator.

The domain is [-L, L) with the right endpoint identified with the left one.
Transforms follow numpy's convention: the forward DFT is unnormalized and the
inverse carries the 1/M factor.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as _fft

from .errors import NumericalError, ValidationError


def _is_power_of_two(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class Grid:
    """Periodic grid on [-L, L) with ``n_points`` nodes.

    Attributes
    ----------
    half_width : float
        L, half the domain length.
    n_points : int
        M, number of nodes; a power of two, at least 8.
    """

    half_width: float
    n_points: int

    def __post_init__(self):
        if not np.isfinite(self.half_width) or self.half_width <= 0:
            raise ValidationError(f"half_width must be positive, got {self.half_width}")
        if not isinstance(self.n_points, (int, np.integer)) or not _is_power_of_two(int(self.n_points)):
            raise ValidationError(f"n_points must be a power of two, got {self.n_points}")
        if self.n_points < 8:
            raise ValidationError(f"n_points must be at least 8, got {self.n_points}")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.half_width + self.dx * np.arange(self.n_points)
        x.setflags(write=False)
        return x

    @cached_property
    def k(self) -> np.ndarray:
        """Angular wavenumbers in FFT order, integer multiples of pi/L."""
        k = (np.pi / self.half_width) * np.fft.fftfreq(self.n_points, d=1.0 / self.n_points)
        k.setflags(write=False)
        return k

    @property
    def origin_index(self) -> int:
        """Index of the node at x = 0 (exact for even M)."""
        return self.n_points // 2


def make_grid(half_width: float, n_points: int) -> Grid:
    return Grid(float(half_width), int(n_points))


@dataclass(frozen=True, eq=False)
class WaveField:
    """Complex wavefunction sampled on a :class:`Grid`."""

    grid: Grid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise ValidationError(
                f"field has shape {values.shape}, grid expects ({self.grid.n_points},)"
            )
        if not np.all(np.isfinite(values)):
            raise NumericalError("wave field contains non-finite values")
        object.__setattr__(self, "values", values)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def modulus(self) -> np.ndarray:
        return np.abs(self.values)

    def density(self) -> np.ndarray:
        return self.values.real**2 + self.values.imag**2

    def with_values(self, values) -> "WaveField":
        return WaveField(self.grid, values)


def forward_transform(f: WaveField) -> np.ndarray:
    """DFT coefficients of ``f``, indexed like ``f.grid.k``."""
    return _fft.fft(f.values)


def inverse_transform(coefficients, grid: Grid) -> WaveField:
    coefficients = np.asarray(coefficients, dtype=complex)
    if not np.all(np.isfinite(coefficients)):
        raise NumericalError("spectral coefficients contain non-finite values")
    return WaveField(grid, _fft.ifft(coefficients))


def spectral_derivative(f: WaveField, order: int = 1) -> WaveField:
    """Derivative of ``f`` by multiplication with (ik)^order.

    For odd orders the Nyquist mode is zeroed, since its derivative is not
    representable as a real-symmetric coefficient set.
    """
    grid = f.grid
    multiplier = (1j * grid.k) ** order
    if order % 2 == 1:
        multiplier = multiplier.copy()
        multiplier[grid.n_points // 2] = 0.0
    return inverse_transform(multiplier * forward_transform(f), grid)


def mass(f: WaveField) -> float:
    """Discrete L2 norm squared, sum |f_j|^2 dx."""
    return float(np.sum(f.density()) * f.grid.dx)


def spectral_mass(coefficients, grid: Grid) -> float:
    """The same quantity as :func:`mass` computed from DFT coefficients (Parseval)."""
    c = np.asarray(coefficients)
    return float(np.sum(c.real**2 + c.imag**2) * grid.dx / grid.n_points)
