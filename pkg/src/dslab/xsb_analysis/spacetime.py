"""Space-time spectral fields and dispersive-weighted norms.

Fields live on an M x M x M_t mode lattice. A field may carry constant
frequency offsets (a "carrier"): the stored array is the demodulated
envelope and every weight is evaluated at lattice-plus-offset. This keeps
high-frequency wave packets representable on a small envelope grid without
losing exactness, since the carrier phase never has to be sampled.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, replace

import numpy as np

from ..spectral_core import FOURIER, PHYSICAL, GridSpec, SpectralField, to_fourier


@dataclass(frozen=True)
class SpaceTimeGrid:
    """Spatial grid crossed with a periodic time window of length T_w.

    tau frequencies per the same series convention as space:
    {-M_t/2, ..., M_t/2 - 1} * (2*pi / T_w).
    """

    spatial: GridSpec
    time_window: float
    time_samples: int

    def __post_init__(self) -> None:
        if not self.time_window > 0:
            raise ValueError("time_window must be positive")
        mt = self.time_samples
        if mt < 2 or mt % 2:
            raise ValueError(f"time_samples must be even and >= 2, got {mt}")
        # the b-weight <tau + |xi|^2> is only faithful if the tau band
        # reaches past |xi|^2 of the modes kept by the 2/3 rule
        retained = np.where(self.spatial.dealias_mask, self.spatial.xi_squared, 0.0)
        if self.tau_nyquist <= np.max(retained):
            warnings.warn(
                "tau band does not cover |xi|^2 of retained modes; "
                "b-weights will saturate",
                stacklevel=2,
            )

    @property
    def tau_step(self) -> float:
        return 2.0 * np.pi / self.time_window

    @property
    def tau_nyquist(self) -> float:
        return 0.5 * self.time_samples * self.tau_step

    @property
    def volume(self) -> float:
        return self.spatial.domain_length**2 * self.time_window

    @property
    def tau_numbers(self) -> np.ndarray:
        mt = self.time_samples
        return np.rint(np.fft.fftfreq(mt, d=1.0 / mt)).astype(np.int64)

    @property
    def taus(self) -> np.ndarray:
        return self.tau_numbers * self.tau_step

    def times(self) -> np.ndarray:
        return np.arange(self.time_samples) * (self.time_window / self.time_samples)


@dataclass
class SpaceTimeField:
    """Complex envelope on the mode lattice plus a carrier frequency."""

    grid: SpaceTimeGrid
    values: np.ndarray
    representation: str
    xi1_offset: float = 0.0
    xi2_offset: float = 0.0
    tau_offset: float = 0.0

    def __post_init__(self) -> None:
        m = self.grid.spatial.modes_per_axis
        expected = (m, m, self.grid.time_samples)
        if self.values.shape != expected:
            raise ValueError(f"values shape {self.values.shape} != {expected}")
        if self.representation not in (PHYSICAL, FOURIER):
            raise ValueError(f"unknown representation {self.representation!r}")
        if self.values.dtype != np.complex128:
            self.values = self.values.astype(np.complex128)
        if not np.all(np.isfinite(self.values.view(np.float64))):
            raise ValueError("values must be finite")

    @classmethod
    def zeros(cls, grid: SpaceTimeGrid) -> "SpaceTimeField":
        m = grid.spatial.modes_per_axis
        return cls(grid, np.zeros((m, m, grid.time_samples), dtype=np.complex128), FOURIER)

    def copy(self) -> "SpaceTimeField":
        return replace(self, values=self.values.copy())

    @property
    def carrier(self) -> tuple:
        return (self.xi1_offset, self.xi2_offset, self.tau_offset)


def _mode_count(grid: SpaceTimeGrid) -> int:
    return grid.spatial.modes_per_axis**2 * grid.time_samples


def to_fourier3(F: SpaceTimeField) -> SpaceTimeField:
    if F.representation == FOURIER:
        return F
    return replace(F, values=np.fft.fftn(F.values) / _mode_count(F.grid), representation=FOURIER)


def to_physical3(F: SpaceTimeField) -> SpaceTimeField:
    if F.representation == PHYSICAL:
        return F
    return replace(F, values=np.fft.ifftn(F.values) * _mode_count(F.grid), representation=PHYSICAL)


def xsb_weight_squared(
    grid: SpaceTimeGrid,
    s: float,
    b: float,
    sign: int,
    carrier: tuple = (0.0, 0.0, 0.0),
) -> np.ndarray:
    """Squared weight <xi>^{2s} <tau + sign |xi|^2>^{2b} at true frequencies."""
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    sp = grid.spatial
    xi1 = sp.xi1 + carrier[0]
    xi2 = sp.xi2 + carrier[1]
    xi_sq = xi1**2 + xi2**2
    taus = grid.taus + carrier[2]
    tau_plus = taus[None, None, :] + sign * xi_sq[:, :, None]
    return (1.0 + xi_sq[:, :, None]) ** s * (1.0 + tau_plus**2) ** b


def xsb_norm(F: SpaceTimeField, s: float, b: float, sign: int = 1) -> float:
    """Weighted L^2 norm with weight <xi>^s <tau + sign |xi|^2>^b.

    Plancherel-consistent: at s = b = 0 this is the space-time L^2 norm,
    and a single mode of amplitude A contributes A * sqrt(volume) * weight.
    """
    hat = to_fourier3(F)
    w2 = xsb_weight_squared(F.grid, s, b, sign, F.carrier)
    total = np.sum(w2 * (hat.values.real**2 + hat.values.imag**2))
    return float(np.sqrt(F.grid.volume * total))


def free_solution_field(
    g: SpectralField, grid: SpaceTimeGrid, delta: float = 0.0
) -> SpaceTimeField:
    """Sample the free (optionally damped) flow of g over the time window."""
    if g.grid != grid.spatial:
        raise ValueError("spatial grids differ")
    ghat = to_fourier(g).values
    times = grid.times()
    phases = np.exp(
        (-1j * grid.spatial.xi_squared[:, :, None] - delta) * times[None, None, :]
    )
    samples = ghat[:, :, None] * phases
    hat_t = np.fft.fft(samples, axis=2) / grid.time_samples
    return SpaceTimeField(grid, hat_t, FOURIER)
