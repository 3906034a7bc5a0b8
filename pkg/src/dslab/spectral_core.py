"""Periodic 2D spectral substrate: grids, transforms, symbols and norms.

Fields live on an M x M periodic grid of side L.  Fourier values are stored
as Fourier-series coefficients (DFT divided by M^2), so that Plancherel takes
the continuum form

    integral |u|^2 dx = L^2 * sum_xi |u_hat(xi)|^2,

which makes norm values comparable across resolutions.  Frequencies follow
numpy's FFT layout {0, ..., M/2-1, -M/2, ..., -1} * (2*pi/L).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

PHYSICAL = "physical"
FOURIER = "fourier"

# torus side used across the laboratory unless a study overrides it
DEFAULT_DOMAIN_LENGTH = 2.0 * np.pi * 16.0


@dataclass(frozen=True)
class GridSpec:
    """Periodic grid: M modes per axis on a torus of side L.

    Invariants: M is an even power of two; the frequency set per axis is
    {-M/2, ..., M/2-1} * (2*pi/L).
    """

    modes_per_axis: int
    domain_length: float = DEFAULT_DOMAIN_LENGTH

    def __post_init__(self) -> None:
        m = self.modes_per_axis
        if m <= 0 or (m & (m - 1)) != 0:
            raise ValueError(f"modes_per_axis must be a power of two, got {m}")
        if not self.domain_length > 0:
            raise ValueError("domain_length must be positive")

    @property
    def frequency_step(self) -> float:
        return 2.0 * np.pi / self.domain_length

    @property
    def physical_step(self) -> float:
        return self.domain_length / self.modes_per_axis

    @cached_property
    def mode_numbers(self) -> np.ndarray:
        """Integer mode numbers in FFT order: {0,...,M/2-1,-M/2,...,-1}."""
        m = self.modes_per_axis
        return np.rint(np.fft.fftfreq(m, d=1.0 / m)).astype(np.int64)

    @cached_property
    def frequencies(self) -> np.ndarray:
        return self.mode_numbers * self.frequency_step

    @cached_property
    def xi1(self) -> np.ndarray:
        return self.frequencies[:, None] * np.ones((1, self.modes_per_axis))

    @cached_property
    def xi2(self) -> np.ndarray:
        return np.ones((self.modes_per_axis, 1)) * self.frequencies[None, :]

    @cached_property
    def xi_squared(self) -> np.ndarray:
        return self.xi1**2 + self.xi2**2

    @cached_property
    def alpha_symbol(self) -> np.ndarray:
        """Symbol xi_1^2/|xi|^2 of the nonlocal operator; 0 at the zero mode."""
        with np.errstate(invalid="ignore"):
            a = self.xi1**2 / self.xi_squared
        a[0, 0] = 0.0
        return a

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """2/3-rule mask: keeps mode numbers with 3|k| <= M per axis."""
        keep = 3 * np.abs(self.mode_numbers) <= self.modes_per_axis
        return keep[:, None] & keep[None, :]

    def coordinates(self) -> tuple[np.ndarray, np.ndarray]:
        """Physical meshes (x1, x2) with x1 varying along axis 0."""
        x = np.arange(self.modes_per_axis) * self.physical_step
        return x[:, None] * np.ones((1, self.modes_per_axis)), np.ones(
            (self.modes_per_axis, 1)
        ) * x[None, :]

    def bracket(self, s: float) -> np.ndarray:
        """Weight <xi>^s = (1+|xi|^2)^{s/2} on the mode lattice."""
        return (1.0 + self.xi_squared) ** (0.5 * s)


@dataclass
class SpectralField:
    """Complex field snapshot on a grid, tagged physical or fourier."""

    grid: GridSpec
    values: np.ndarray
    representation: str = PHYSICAL

    def __post_init__(self) -> None:
        m = self.grid.modes_per_axis
        if self.values.shape != (m, m):
            raise ValueError(
                f"values shape {self.values.shape} does not match grid ({m}, {m})"
            )
        if self.representation not in (PHYSICAL, FOURIER):
            raise ValueError(f"unknown representation {self.representation!r}")
        if self.values.dtype != np.complex128:
            self.values = self.values.astype(np.complex128)

    def copy(self) -> "SpectralField":
        return SpectralField(self.grid, self.values.copy(), self.representation)

    @classmethod
    def zeros(cls, grid: GridSpec, representation: str = PHYSICAL) -> "SpectralField":
        m = grid.modes_per_axis
        return cls(grid, np.zeros((m, m), dtype=np.complex128), representation)


def to_fourier(field: SpectralField) -> SpectralField:
    """Transform physical values to Fourier-series coefficients.

    Coefficients approximate (1/L^2) * integral u exp(-i xi.x) dx; constant
    field c maps to a single coefficient c at xi = 0.
    """
    if field.representation == FOURIER:
        return field
    m = field.grid.modes_per_axis
    return SpectralField(field.grid, np.fft.fft2(field.values) / m**2, FOURIER)


def to_physical(field: SpectralField) -> SpectralField:
    """Inverse of to_fourier; round-trip error stays below 1e-12."""
    if field.representation == PHYSICAL:
        return field
    m = field.grid.modes_per_axis
    return SpectralField(field.grid, np.fft.ifft2(field.values) * m**2, PHYSICAL)


def apply_K(field: SpectralField) -> SpectralField:
    """Apply the nonlocal multiplier with symbol xi_1^2/|xi|^2 (0 at xi=0).

    The symbol lies in [0,1], so the operator contracts L^2; it is
    self-adjoint and maps real fields to real fields.  Output representation
    equals input representation.
    """
    hat = to_fourier(field)
    out = hat.values * field.grid.alpha_symbol
    # symbol in [0,1]: the L^2 contraction must hold up to roundoff
    assert (
        np.sum(np.abs(out) ** 2) <= np.sum(np.abs(hat.values) ** 2) * (1.0 + 1e-12)
    ), "contraction violated"
    result = SpectralField(field.grid, out, FOURIER)
    return result if field.representation == FOURIER else to_physical(result)


def free_evolve(field: SpectralField, t: float, delta: float = 0.0) -> SpectralField:
    """Propagate by the free (optionally damped) linear group for time t.

    Each mode is multiplied by exp(-i t |xi|^2); delta > 0 adds the scalar
    decay exp(-delta t).  Undamped, this is an isometry of every H^s norm.
    """
    hat = to_fourier(field)
    phase = np.exp(-1j * t * field.grid.xi_squared)
    if delta != 0.0:
        phase = phase * np.exp(-delta * t)
    result = SpectralField(field.grid, hat.values * phase, FOURIER)
    return result if field.representation == FOURIER else to_physical(result)


def sobolev_norm(field: SpectralField, s: float) -> float:
    """H^s norm: L * sqrt(sum <xi>^{2s} |u_hat|^2).

    The quadrature weight makes s = 0 reproduce the physical L^2 norm on the
    torus (Plancherel); a single mode of amplitude A at xi0 has norm
    A * L * <xi0>^s.
    """
    hat = to_fourier(field)
    sq = np.abs(hat.values) ** 2
    if s != 0.0:
        sq = sq * (1.0 + field.grid.xi_squared) ** s
    return float(field.grid.domain_length * np.sqrt(np.sum(sq)))


def lebesgue_norm(field: SpectralField, p: float) -> float:
    """Physical-space L^p quadrature norm; constant c has norm |c|*L^{2/p}."""
    if not p > 0:
        raise ValueError("p must be positive")
    phys = to_physical(field)
    dx = field.grid.physical_step
    return float(np.sum(np.abs(phys.values) ** p) ** (1.0 / p) * dx ** (2.0 / p))
