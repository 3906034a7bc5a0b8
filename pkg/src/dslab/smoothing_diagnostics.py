"""Duhamel-split smoothing diagnostics on rough data.

The flow is split as u(t) = e^{it Lap} u0 + N(t).  For data whose spectrum
decays like <xi>^{-s-1} (so u0 sits in H^{s'} exactly for s' < s), the linear
part keeps the data's roughness while N(t) is measurably smoother: its
H^{s+a} norm converges under grid refinement although the linear part's
diverges like M^a.  The growth of the nonlinear part in time is compared
against the envelope C <t>^{1 + beta(s) (3 + 2/s)}.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._rng import uniform_phases
from .ds_solver import SolverConfig, Trajectory, evolve
from .spectral_core import (
    DEFAULT_DOMAIN_LENGTH,
    FOURIER,
    GridSpec,
    SpectralField,
    free_evolve,
    sobolev_norm,
    to_fourier,
)


def beta_growth(s: float) -> float:
    """Growth-rate exponent beta(s) = 3s(1-s) / (2(5s-2)) on 2/5 < s < 1.

    For s >= 1 the value 0.0 is returned as a reporting label only; below
    the validity threshold the formula degenerates and a ValueError is
    raised.
    """
    if s >= 1.0:
        return 0.0
    if s <= 0.4:
        raise ValueError(f"growth exponent undefined for s = {s} <= 2/5")
    return 3.0 * s * (1.0 - s) / (2.0 * (5.0 * s - 2.0))


def envelope_exponent(s: float) -> float:
    """Time exponent 1 + beta(s) (3 + 2/s) of the smoothing envelope."""
    return 1.0 + beta_growth(s) * (3.0 + 2.0 / s)


@dataclass(frozen=True)
class RoughDataSpec:
    """Randomized datum with |u0_hat(xi)| = amplitude * <xi>^{-s-1}.

    Phases are hashed per integer mode, so refining the grid keeps every
    retained mode's value; the H^{s'} norm then converges for s' < s and
    grows like M^a at s' = s + a.
    """

    s: float
    amplitude: float
    seed: int

    def __post_init__(self) -> None:
        if not self.s > 0.5:
            raise ValueError(f"roughness s must exceed 1/2, got {self.s}")
        if self.amplitude < 0:
            raise ValueError("amplitude must be nonnegative")

    @property
    def spectral_law(self) -> float:
        """Decay exponent of |u0_hat|: modes fall off like <xi>^(this)."""
        return -self.s - 1.0


@dataclass
class SmoothingReport:
    """Measured H^{s+a} history of the nonlinear part against its envelope."""

    times: np.ndarray
    nonlinear_norms: np.ndarray
    solution_norms: np.ndarray
    s: float
    a: float
    beta: float
    envelope_constant: float
    envelope: np.ndarray
    violations: np.ndarray

    def __post_init__(self) -> None:
        for arr in (self.nonlinear_norms, self.solution_norms, self.envelope):
            if not np.all(np.isfinite(arr)) or np.any(arr < 0):
                raise ValueError("report series must be finite and nonnegative")


def make_rough_data(spec: RoughDataSpec, grid: GridSpec) -> SpectralField:
    """Build the datum in Fourier representation from the spec's law."""
    k1 = grid.mode_numbers[:, None] * np.ones((1, grid.modes_per_axis), dtype=np.int64)
    k2 = np.ones((grid.modes_per_axis, 1), dtype=np.int64) * grid.mode_numbers[None, :]
    magnitude = spec.amplitude * grid.bracket(spec.spectral_law)
    phases = uniform_phases(spec.seed, k1, k2)
    return SpectralField(grid, magnitude * np.exp(1j * phases), FOURIER)


def nonlinear_part(traj: Trajectory, u0: SpectralField, t: float) -> SpectralField:
    """Duhamel remainder u(t) - e^{it Lap} u0 at a sampled time."""
    u_t = to_fourier(traj.field_at(t))
    linear = free_evolve(to_fourier(u0), t)
    return SpectralField(u0.grid, u_t.values - linear.values, FOURIER)


def smoothing_report(
    traj: Trajectory, u0: SpectralField, s: float, a: float
) -> SmoothingReport:
    """Measure ||N(t)||_{H^{s+a}} against C <t>^{1+beta(s)(3+2/s)}.

    C is fitted at the first probe time with a positive measurement; every
    later sample exceeding the envelope is flagged.  a < min(1/2, s - 1/2)
    is the regime the theory covers; other a values are allowed for sweeps.
    """
    if len(traj.times) == 0:
        raise ValueError("empty trajectory")
    if not a < min(0.5, s - 0.5):
        warnings.warn(
            f"a = {a} is outside the guaranteed range for s = {s}", stacklevel=2
        )
    times = np.asarray(traj.times, dtype=float)
    nonlinear = np.array(
        [sobolev_norm(nonlinear_part(traj, u0, t), s + a) for t in times]
    )
    solution = np.array([sobolev_norm(f, s) for f in traj.fields])
    beta = beta_growth(s)
    exponent = 1.0 + beta * (3.0 + 2.0 / s)
    bracket_t = np.sqrt(1.0 + times**2)
    positive = np.nonzero(nonlinear > 0)[0]
    if len(positive):
        i0 = positive[0]
        constant = nonlinear[i0] / bracket_t[i0] ** exponent
    else:
        constant = 0.0
    envelope = constant * bracket_t**exponent
    violations = nonlinear > envelope * (1.0 + 1e-12)
    return SmoothingReport(
        times=times,
        nonlinear_norms=nonlinear,
        solution_norms=solution,
        s=s,
        a=a,
        beta=beta,
        envelope_constant=constant,
        envelope=envelope,
        violations=violations,
    )


def resonant_gauge_phase(datum: SpectralField, c1: float, c2: float) -> np.ndarray:
    """Phase rate sigma(xi) of the exactly resonant cubic self-interaction.

    On a periodic lattice each mode xi is dressed coherently by two pairings
    against the datum's spectral density rho(mu) = |u0_hat(mu)|^2: the mean
    potential (zero mode of V) and the pairing of the output mode with one
    u-factor.  Together

        sigma(xi) = 2 c1 rho_bar + c2 (alpha (*) rho)(xi),

    with (*) the circular lattice convolution, so the flow behaves like
    exp(-i sigma(xi) t) exp(i t Lap) on the datum's tail.  This factor has no
    continuum counterpart at fixed data (rho_bar = ||u||^2 / L^2 vanishes as
    L grows), so it is the leading finite-volume artifact in smoothing
    measurements.
    """
    hat = to_fourier(datum)
    rho = np.abs(hat.values) ** 2
    conv = np.real(np.fft.ifft2(np.fft.fft2(datum.grid.alpha_symbol) * np.fft.fft2(rho)))
    return 2.0 * c1 * float(np.sum(rho)) + c2 * conv


def gauged_nonlinear_part(
    traj: Trajectory, u0: SpectralField, t: float, c1: float, c2: float
) -> SpectralField:
    """Duhamel remainder against the resonantly gauged free flow.

    Same as nonlinear_part but the comparison flow carries the extra phase
    exp(-i sigma(xi) t) from resonant_gauge_phase, which removes the lattice
    dressing of the datum tail and leaves the grid-convergent remainder.
    """
    u_t = to_fourier(traj.field_at(t))
    sigma = resonant_gauge_phase(u0, c1, c2)
    linear = free_evolve(to_fourier(u0), t).values * np.exp(-1j * sigma * t)
    return SpectralField(u0.grid, u_t.values - linear, FOURIER)


def _fit_slope(log_x: np.ndarray, log_y: np.ndarray) -> float:
    return float(np.polyfit(log_x, log_y, 1)[0])


def refinement_study(
    spec: RoughDataSpec,
    resolutions: Sequence[int],
    t_probe: float,
    s: float,
    a: float,
    cfg: SolverConfig,
    domain_length: Optional[float] = None,
) -> dict:
    """Grid-refinement comparison of linear and nonlinear H^{s+a} norms.

    Runs the same datum law at each resolution (same L, nested phases) and
    returns per-resolution norms plus fitted log-log slopes.  The linear part
    picks up mass like M^a.  Two nonlinear columns are reported: the plain
    remainder u(t) - e^{it Lap} u0, whose tail inherits the resonant lattice
    dressing and therefore tracks the linear column's growth, and the gauged
    remainder with that dressing removed, which is the grid-convergent
    smoothing observable (slope near zero).
    """
    if len(resolutions) < 3:
        raise ValueError("need at least three resolutions for a slope fit")
    length = domain_length if domain_length is not None else DEFAULT_DOMAIN_LENGTH
    rows = []
    for m in resolutions:
        grid = GridSpec(m, length)
        u0 = make_rough_data(spec, grid)
        traj = evolve(u0, cfg)
        # split against the trajectory's own first sample so the comparison
        # matches the datum actually integrated (dealiasing masks it)
        datum = traj.fields[0]
        linear = sobolev_norm(free_evolve(datum, t_probe), s + a)
        nonlinear = sobolev_norm(nonlinear_part(traj, datum, t_probe), s + a)
        gauged = sobolev_norm(
            gauged_nonlinear_part(traj, datum, t_probe, cfg.c1, cfg.c2), s + a
        )
        rows.append(
            {
                "M": m,
                "norm_linear": linear,
                "norm_nonlinear": nonlinear,
                "norm_nonlinear_gauged": gauged,
            }
        )
    log_m = np.log([row["M"] for row in rows])

    def column_slope(key: str) -> float:
        vals = np.array([row[key] for row in rows])
        return _fit_slope(log_m, np.log(vals)) if np.all(vals > 0) else 0.0

    return {
        "rows": rows,
        "t_probe": t_probe,
        "s": s,
        "a": a,
        "linear_slope": column_slope("norm_linear"),
        "nonlinear_slope": column_slope("norm_nonlinear"),
        "gauged_slope": column_slope("norm_nonlinear_gauged"),
    }


def local_time(h_s_norm: float, s: float, kappa: float = 1.0, C0: float = 1.0) -> float:
    """Guaranteed existence time kappa * (C0 + ||u0||_{H^s})^{-2/s}."""
    if h_s_norm < 0:
        raise ValueError("norm must be nonnegative")
    if not s > 0:
        raise ValueError("s must be positive")
    return kappa * (C0 + h_s_norm) ** (-2.0 / s)
