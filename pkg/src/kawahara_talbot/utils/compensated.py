"""Phase arithmetic for the dispersion relation.

Phases of the form (k^5 - alpha k^3) t reach 1e18 radians on the bands used here, so they are
never formed in floating point. Rational times reduce the integer part modulo q exactly;
other times reduce P * tau modulo one with error-free products, tau = t / (2 pi).
"""

from math import pi

import numpy as np

# 2^27 + 1, the Veltkamp splitter for binary64
_SPLITTER = 134217729.0
_HIGH_SHIFT = 26


def _split(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    c = _SPLITTER * a
    high = c - (c - a)
    return high, a - high


def two_product(a: np.ndarray, b: float) -> tuple[np.ndarray, np.ndarray]:
    """Dekker's product: a * b == p + e exactly."""
    p = a * b
    a_high, a_low = _split(a)
    b_high, b_low = _split(np.asarray(b, dtype=np.float64))
    e = ((a_high * b_high - p) + a_high * b_low + a_low * b_high) + a_low * b_low
    return p, e


def _frac(x: np.ndarray) -> np.ndarray:
    return x - np.floor(x)


def phase_turns(integer_phase: np.ndarray, tau: float) -> np.ndarray:
    """Fractional part of P * tau in [0, 1) for int64 P, accurate to a few ulps of one turn."""
    integer_phase = np.asarray(integer_phase, dtype=np.int64)
    # high part keeps <= 38 significant bits, low part < 2^26: both exact as float64
    high = (integer_phase >> _HIGH_SHIFT) << _HIGH_SHIFT
    low = integer_phase - high
    p1, e1 = two_product(high.astype(np.float64), tau)
    p2, e2 = two_product(low.astype(np.float64), tau)
    return _frac(_frac(p1) + _frac(e1) + _frac(p2) + e2)


def unit_phase(turns: np.ndarray) -> np.ndarray:
    """exp(2 pi i turns)."""
    return np.exp(2j * pi * np.asarray(turns, dtype=np.float64))


def symbol_residues(alpha: int, q: int) -> np.ndarray:
    """(r^5 - alpha r^3) mod q for r = 0 .. q-1, in exact integer arithmetic."""
    return np.array([(r**5 - alpha * r**3) % q for r in range(q)], dtype=np.int64)
