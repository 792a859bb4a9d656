"""The free flow e^{Lt} and its collapse into q translates at rational times."""

import logging
from collections.abc import Callable, Iterator
from fractions import Fraction
from math import pi

import numpy as np
from scipy import fft as sp_fft

from ..domain.exceptions import ValidationError
from ..domain.models import (
    DispersionSymbol,
    FourierState,
    RationalTime,
    RealGridFunction,
    TimeClassification,
    TranslateDecomposition,
)
from ..utils.compensated import phase_turns, symbol_residues, unit_phase

logger = logging.getLogger(__name__)


def _drift_phase(k: np.ndarray, t: float, sym: DispersionSymbol) -> np.ndarray:
    if sym.mean_drift == 0.0:
        return np.ones(k.shape, dtype=np.complex128)
    return np.exp(-1j * sym.mean_drift * t * k)


def linear_multiplier(n_modes: int, t: float | RationalTime, sym: DispersionSymbol) -> np.ndarray:
    """exp(-i omega(k) t) on |k| <= N, conjugate-symmetric in k."""
    k = np.arange(0, n_modes + 1, dtype=np.int64)
    if isinstance(t, RationalTime):
        residues = symbol_residues(sym.alpha, t.q)[np.mod(k, t.q)]
        turns = (t.p * residues % t.q) / t.q
        positive = unit_phase(-turns) * _drift_phase(k, t.value, sym)
    else:
        turns = phase_turns(sym.integer_part(k), t / (2.0 * pi))
        positive = unit_phase(-turns) * _drift_phase(k, t, sym)
    positive[0] = 1.0
    return np.concatenate([np.conj(positive[1:][::-1]), positive])


def propagate(g: FourierState, t: float | RationalTime, sym: DispersionSymbol) -> FourierState:
    if not isinstance(t, RationalTime) and t == 0.0:
        return g
    multiplier = linear_multiplier(g.n_modes, t, sym)
    return FourierState(g.coeffs * multiplier, real_symmetric=g.real_symmetric)


def rational_multipliers(rt: RationalTime, alpha: int) -> np.ndarray:
    """Translate weights c_0 .. c_{q-1} with e^{-2 pi i p (k^5 - alpha k^3)/q} = sum_j c_j e^{-2 pi i jk/q}."""
    if isinstance(alpha, bool) or alpha not in (-1, 0, 1):
        raise ValidationError(f"alpha must be one of (-1, 0, 1), got {alpha!r}")
    residues = symbol_residues(alpha, rt.q)
    multipliers = unit_phase(-((rt.p * residues) % rt.q) / rt.q)
    return sp_fft.ifft(multipliers)


def translate_decomposition(rt: RationalTime, sym: DispersionSymbol) -> TranslateDecomposition:
    return TranslateDecomposition(
        q=rt.q,
        coeffs=rational_multipliers(rt, sym.alpha),
        mean_shift=sym.mean_drift * rt.value,
    )


def _fourier_shift(samples: np.ndarray, shift: float) -> np.ndarray:
    """Band-limited f(x - shift) on the same grid."""
    n_points = samples.size
    k = np.arange(n_points // 2 + 1)
    return sp_fft.irfft(sp_fft.rfft(samples) * np.exp(-1j * k * shift), n=n_points)


def reconstruct_translates(g: RealGridFunction, td: TranslateDecomposition) -> RealGridFunction:
    """Re sum_j c_j g(x - 2 pi j/q - mean_shift) from grid samples."""
    if g.n_points % td.q != 0:
        raise ValidationError(
            f"Grid size {g.n_points} is not divisible by q = {td.q}; translates would miss the grid"
        )
    stride = g.n_points // td.q
    total = np.zeros(g.n_points, dtype=np.complex128)
    for j, c in enumerate(td.coeffs):
        if c != 0:
            total += c * np.roll(g.samples, j * stride)
    samples = total.real
    if td.mean_shift:
        samples = _fourier_shift(samples, td.mean_shift)
    return RealGridFunction(samples)


def sample_translates(
    profile: Callable[[np.ndarray], np.ndarray], td: TranslateDecomposition, n_points: int
) -> RealGridFunction:
    """Re sum_j c_j profile(x - 2 pi j/q - mean_shift) evaluated pointwise, no band limit."""
    x = 2.0 * pi * np.arange(n_points) / n_points
    total = np.zeros(n_points, dtype=np.complex128)
    for j, c in enumerate(td.coeffs):
        if c != 0:
            total += c * profile(x - 2.0 * pi * j / td.q - td.mean_shift)
    return RealGridFunction(total.real)


def _convergents(x: Fraction) -> Iterator[tuple[int, int]]:
    """Successive convergents p/q of a nonnegative rational by the Euclidean algorithm."""
    p_prev, p = 1, int(x)
    q_prev, q = 0, 1
    yield p, q
    remainder = x - int(x)
    while remainder:
        x = 1 / remainder
        a = int(x)
        remainder = x - a
        p_prev, p = p, a * p + p_prev
        q_prev, q = q, a * q + q_prev
        yield p, q


def classify_time(t: float, q_max: int, tol: float) -> TimeClassification:
    """Smallest-q convergent of t / 2 pi within tol of t, else irrational."""
    if t < 0:
        raise ValidationError("Times are classified for t >= 0 only")
    if q_max < 1:
        raise ValidationError("q_max must be at least 1")
    for p, q in _convergents(Fraction(t / (2.0 * pi))):
        if q > q_max:
            break
        if abs(t - 2.0 * pi * p / q) <= tol:
            logger.debug("t = %r classified as 2 pi %d/%d", t, p, q)
            return TimeClassification.rational(p, q)
    return TimeClassification.irrational()
