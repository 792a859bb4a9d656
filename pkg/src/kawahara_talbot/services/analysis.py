"""Measurement instruments: dyadic projections, Besov and X^{s,b} norms, decay fits,
box-counting dimension, and Weierstrass calibration targets."""

import logging
from math import pi

import numpy as np
from scipy import stats

from ..domain.exceptions import ValidationError
from ..domain.models import (
    BesovEstimate,
    DecayFit,
    DimensionEstimate,
    DispersionSymbol,
    FourierState,
    RealGridFunction,
    Trajectory,
)
from .linear_propagator import linear_multiplier
from .spectral_core import bracket, synthesize

logger = logging.getLogger(__name__)

RELIABLE_R2 = 0.98
DROPPED_COARSE = 2
DROPPED_FINE = 2
MIN_FIT_SCALES = 4
TAPER_FRACTION = 0.1


def _glue(x: np.ndarray) -> np.ndarray:
    """e^{-1/x} for x > 0, else 0."""
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    positive = x > 0
    out[positive] = np.exp(-1.0 / x[positive])
    return out


def smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity transition: 0 for x <= 0, 1 for x >= 1."""
    left = _glue(x)
    return left / (left + _glue(1.0 - np.asarray(x, dtype=np.float64)))


def core_cutoff(t: np.ndarray) -> np.ndarray:
    """chi: 1 on |t| <= 1, 0 on |t| >= 2."""
    return 1.0 - smooth_step(np.abs(np.asarray(t, dtype=np.float64)) - 1.0)


def cutoff(t: np.ndarray) -> np.ndarray:
    """phi(t) = chi(t) - chi(2t), supported in 1/2 <= |t| <= 2."""
    t = np.asarray(t, dtype=np.float64)
    return core_cutoff(t) - core_cutoff(2.0 * t)


def block_weights(n_modes: int, j: int) -> np.ndarray:
    if j < 0:
        raise ValidationError("Dyadic block index must be nonnegative")
    k = np.arange(-n_modes, n_modes + 1, dtype=np.float64)
    if j == 0:
        return core_cutoff(k)
    return cutoff(k / 2.0**j)


def lp_projection(u: FourierState, j: int) -> FourierState:
    return FourierState(u.coeffs * block_weights(u.n_modes, j), real_symmetric=u.real_symmetric)


def highest_block(n_modes: int) -> int:
    """Largest j whose block meets the band |k| <= N."""
    return (n_modes - 1).bit_length()


def lebesgue_norm(coeffs: np.ndarray, p: float, oversample: int = 4) -> float:
    """||f||_{L^p(T)} with the unnormalized measure dx on [0, 2 pi)."""
    if p == 2:
        return float(np.sqrt(2.0 * pi * np.sum(np.abs(coeffs) ** 2)))
    n = (coeffs.size - 1) // 2
    n_points = oversample * (2 * n + 1)
    values = np.abs(synthesize(coeffs, n_points))
    if p == 1:
        return float(2.0 * pi * values.mean())
    return float(values.max())


def besov_norm(u: FourierState, s: float, p: float) -> BesovEstimate:
    """sup_j 2^{sj} ||P_j u||_{L^p}, truncated at the last block inside the band."""
    if p not in (1, 2, np.inf):
        raise ValidationError(f"Besov norms are available for p in (1, 2, inf), got {p!r}")
    j_max = highest_block(u.n_modes)
    values = [
        2.0 ** (s * j) * lebesgue_norm(lp_projection(u, j).coeffs, p) for j in range(j_max + 1)
    ]
    argmax = int(np.argmax(values))
    return BesovEstimate(value=float(values[argmax]), j_max=j_max, argmax_j=argmax)


def decay_slope(u: FourierState, j_min: int, j_max: int) -> DecayFit:
    """Fit log2 of the RMS of |u_k| over 2^j <= |k| < 2^{j+1} against j."""
    if j_min < 0 or j_max < j_min:
        raise ValidationError("Need 0 <= j_min <= j_max")
    if 2 ** (j_max + 1) - 1 > u.n_modes:
        raise ValidationError(f"Block j = {j_max} extends beyond the band N = {u.n_modes}")
    n = u.n_modes
    levels, rms = [], []
    for j in range(j_min, j_max + 1):
        k = np.arange(2**j, 2 ** (j + 1))
        power = np.concatenate([np.abs(u.coeffs[n + k]) ** 2, np.abs(u.coeffs[n - k]) ** 2])
        value = float(np.sqrt(power.mean()))
        if value > 0.0:
            levels.append(j)
            rms.append(value)
    if len(levels) < 3:
        raise ValidationError("Decay fit needs at least three nonzero dyadic blocks")
    fit = stats.linregress(levels, np.log2(rms))
    return DecayFit(
        slope=float(fit.slope),
        sigma0=float(-fit.slope - 0.5),
        r2=float(fit.rvalue**2),
        blocks=tuple(levels),
    )


def _column_counts(samples: np.ndarray, level: int) -> int:
    """sum over 2^level columns of ceil(osc / eps) + 1, each column closed on the right."""
    n_points = samples.size
    eps = 2.0**-level
    column = (np.arange(n_points) * 2**level) // n_points
    starts = np.flatnonzero(np.diff(column, prepend=-1))
    high = np.maximum.reduceat(samples, starts)
    low = np.minimum.reduceat(samples, starts)
    right_edge = samples[np.roll(starts, -1)]
    high = np.maximum(high, right_edge)
    low = np.minimum(low, right_edge)
    return int(np.sum(np.ceil((high - low) / eps) + 1))


def box_dimension(f: RealGridFunction, eps_levels: int) -> DimensionEstimate:
    """Box-counting slope of the graph over x in [0, 1) with eps = 2^-1 .. 2^-eps_levels."""
    if f.n_points < 2 ** (eps_levels + 4):
        raise ValidationError(
            f"{f.n_points} samples are too few for {eps_levels} levels "
            f"(need at least {2 ** (eps_levels + 4)})"
        )
    levels = np.arange(1, eps_levels + 1)
    counts = [_column_counts(f.samples, int(level)) for level in levels]
    window = slice(DROPPED_COARSE, len(levels) - DROPPED_FINE)
    fit_levels = levels[window]
    if fit_levels.size < MIN_FIT_SCALES:
        raise ValidationError(
            f"Only {fit_levels.size} usable scales after trimming; need {MIN_FIT_SCALES}"
        )
    fit = stats.linregress(fit_levels * np.log(2.0), np.log(np.asarray(counts)[window]))
    r2 = float(fit.rvalue**2)
    reliable = r2 >= RELIABLE_R2
    if not reliable:
        logger.warning("Box-counting fit is unreliable: r^2 = %.4f", r2)
    return DimensionEstimate(
        slope=float(fit.slope),
        window=(2.0 ** -float(fit_levels[-1]), 2.0 ** -float(fit_levels[0])),
        r2=r2,
        counts=tuple((2.0 ** -float(level), count) for level, count in zip(levels, counts)),
        reliable=reliable,
    )


def weierstrass(alpha_exp: float, j_max: int, n_points: int) -> RealGridFunction:
    """sum_{j=0}^{j_max} 2^{-alpha j} cos(2^j x) with exactly reduced arguments."""
    if not 0.0 < alpha_exp < 1.0:
        raise ValidationError("The Holder exponent must lie strictly between 0 and 1")
    if 2**j_max > n_points // 4:
        raise ValidationError(f"2^{j_max} exceeds a quarter of the grid ({n_points} points)")
    index = np.arange(n_points, dtype=np.int64)
    samples = np.zeros(n_points)
    for j in range(j_max + 1):
        residue = (2**j * index) % n_points
        samples += 2.0 ** (-alpha_exp * j) * np.cos(2.0 * pi * residue / n_points)
    return RealGridFunction(samples)


def time_taper(n_samples: int, fraction: float = TAPER_FRACTION) -> np.ndarray:
    """Smooth window rising over the first and falling over the last fraction of the samples."""
    s = np.linspace(0.0, 1.0, n_samples)
    return smooth_step(s / fraction) * smooth_step((1.0 - s) / fraction)


def xsb_norm(tr: Trajectory, s: float, b: float, sym: DispersionSymbol) -> float:
    """Tapered discrete ||<k>^s <tau + omega(k)>^b u^(k, tau)||_{L^2}; diagnostic only."""
    times = np.asarray(tr.times)
    if times.size < 2:
        raise ValidationError("X^{s,b} norm needs at least two recorded times")
    steps = np.diff(times)
    dt = float(steps.mean())
    if np.max(np.abs(steps - dt)) > 1e-9 * max(1.0, dt):
        raise ValidationError("X^{s,b} norm needs uniformly recorded times")
    n = tr.n_modes
    profile = np.array(
        [linear_multiplier(n, -t, sym) * state.coeffs for t, state in zip(times, tr.states)]
    )
    profile *= time_taper(times.size)[:, None]
    spectrum = np.fft.fft(profile, axis=0) * dt
    tau = 2.0 * pi * np.fft.fftfreq(times.size, d=dt)
    weight = bracket(tau)[:, None] ** (2.0 * b) * bracket(np.arange(-n, n + 1))[None, :] ** (2.0 * s)
    total = 2.0 * pi / (times.size * dt) * np.sum(weight * np.abs(spectrum) ** 2)
    return float(np.sqrt(total))
