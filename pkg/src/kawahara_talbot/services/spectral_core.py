"""Transforms between grid samples and band-limited Fourier coefficients.

Coefficients follow the analysis convention u_k = (1/2 pi) int e^{-ikx} f(x) dx and the
synthesis f(x) = sum_k u_k e^{ikx}. A band |k| <= N is stored densely at index k + N.
"""

import logging

import numpy as np
from scipy import fft as sp_fft

from ..domain.exceptions import ValidationError
from ..domain.models import FourierState, RealGridFunction, is_hermitian

logger = logging.getLogger(__name__)


def bracket(k: np.ndarray) -> np.ndarray:
    """<k> = (1 + k^2)^(1/2)."""
    k = np.asarray(k, dtype=np.float64)
    return np.sqrt(1.0 + k * k)


def dealiased_size(n_modes: int) -> int:
    """Grid size on which a quadratic product of band N is alias-free on |k| <= N."""
    return sp_fft.next_fast_len(3 * n_modes + 1)


def _require_grid(n_modes: int, n_points: int) -> None:
    if n_points < 2 * n_modes + 1:
        raise ValidationError(
            f"A grid of {n_points} points cannot represent the band |k| <= {n_modes}"
        )


def to_fft_order(coeffs: np.ndarray, n_points: int) -> np.ndarray:
    """Place u_k at index k mod M of a length-M array."""
    n = (coeffs.size - 1) // 2
    _require_grid(n, n_points)
    full = np.zeros(n_points, dtype=np.complex128)
    full[: n + 1] = coeffs[n:]
    if n:
        full[n_points - n :] = coeffs[:n]
    return full


def from_fft_order(spectrum: np.ndarray, n_modes: int) -> np.ndarray:
    n_points = spectrum.size
    _require_grid(n_modes, n_points)
    out = np.empty(2 * n_modes + 1, dtype=np.complex128)
    out[n_modes:] = spectrum[: n_modes + 1]
    if n_modes:
        out[:n_modes] = spectrum[n_points - n_modes :]
    return out


def synthesize(coeffs: np.ndarray, n_points: int) -> np.ndarray:
    """Complex samples sum_k u_k e^{ikx_j} on x_j = 2 pi j / M."""
    return sp_fft.ifft(to_fft_order(coeffs, n_points)) * n_points


def analyze(samples: np.ndarray, n_modes: int) -> np.ndarray:
    """Coefficients |k| <= N of complex grid samples."""
    return from_fft_order(sp_fft.fft(samples) / samples.size, n_modes)


def synthesize_real(coeffs: np.ndarray, n_points: int) -> np.ndarray:
    n = (coeffs.size - 1) // 2
    _require_grid(n, n_points)
    half = np.zeros(n_points // 2 + 1, dtype=np.complex128)
    half[: n + 1] = coeffs[n:]
    return sp_fft.irfft(half, n=n_points) * n_points


def analyze_real(samples: np.ndarray, n_modes: int) -> np.ndarray:
    """Hermitian coefficients of real samples; symmetry holds exactly."""
    _require_grid(n_modes, samples.size)
    positive = sp_fft.rfft(samples)[: n_modes + 1] / samples.size
    out = np.empty(2 * n_modes + 1, dtype=np.complex128)
    out[n_modes:] = positive
    out[:n_modes] = np.conj(positive[1:][::-1])
    out[n_modes] = out[n_modes].real
    return out


def forward_transform(f: RealGridFunction, n_modes: int) -> FourierState:
    if n_modes < 1:
        raise ValidationError("The band limit N must be at least 1")
    return FourierState(analyze_real(f.samples, n_modes), real_symmetric=True)


def inverse_transform(
    u: FourierState, n_points: int, require_real: bool = True
) -> RealGridFunction:
    """Sample sum_k u_k e^{ikx} on M points.

    A state that is not Hermitian is rejected when real output is required; otherwise the
    real part is returned and the result is flagged.
    """
    _require_grid(u.n_modes, n_points)
    if u.real_symmetric or is_hermitian(u.coeffs):
        return RealGridFunction(synthesize_real(u.coeffs, n_points))
    if require_real:
        raise ValidationError("State is not Hermitian; real samples cannot be produced")
    logger.debug("Dropping imaginary part of a non-Hermitian synthesis")
    return RealGridFunction(synthesize(u.coeffs, n_points).real, imaginary_dropped=True)


def sobolev_norm(u: FourierState, s: float) -> float:
    weights = bracket(u.wavenumbers) ** (2.0 * s)
    return float(np.sqrt(np.sum(weights * np.abs(u.coeffs) ** 2)))


def _same_band(a: FourierState, b: FourierState) -> None:
    if a.n_modes != b.n_modes:
        raise ValidationError(f"Band mismatch: N = {a.n_modes} and N = {b.n_modes}")


def convolve_direct(a: FourierState, b: FourierState) -> FourierState:
    """O(N^2) reference: (a*b)_k = sum_{k1+k2=k} a_k1 b_k2, truncated to |k| <= N."""
    _same_band(a, b)
    n = a.n_modes
    full = np.convolve(a.coeffs, b.coeffs)
    return FourierState(full[n : 3 * n + 1], real_symmetric=a.real_symmetric and b.real_symmetric)


def convolve_coeffs(a: np.ndarray, b: np.ndarray, real: bool = False) -> np.ndarray:
    """Pseudo-spectral product on the 3/2-padded grid; exact on the retained band."""
    n = (a.size - 1) // 2
    n_points = dealiased_size(n)
    if real:
        grid = synthesize_real(a, n_points) * synthesize_real(b, n_points)
        return analyze_real(grid, n)
    grid = synthesize(a, n_points) * synthesize(b, n_points)
    return analyze(grid, n)


def convolve_fft(a: FourierState, b: FourierState) -> FourierState:
    _same_band(a, b)
    real = a.real_symmetric and b.real_symmetric
    return FourierState(convolve_coeffs(a.coeffs, b.coeffs, real=real), real_symmetric=real)


def sup_norm(coeffs: np.ndarray, oversample: int = 4) -> float:
    """max_x |sum_k u_k e^{ikx}| sampled on an oversampled grid."""
    n = (coeffs.size - 1) // 2
    return float(np.max(np.abs(synthesize(coeffs, oversample * (2 * n + 1)))))


def quadratic_term(coeffs: np.ndarray, real: bool = False, dealias: bool = True) -> np.ndarray:
    """-(ik/2) (u*u)_k on the band of u, the Fourier form of -u u_x."""
    n = (coeffs.size - 1) // 2
    k = np.arange(-n, n + 1)
    if dealias:
        product = convolve_coeffs(coeffs, coeffs, real=real)
    else:
        n_points = 2 * n + 1
        if real:
            product = analyze_real(synthesize_real(coeffs, n_points) ** 2, n)
        else:
            product = analyze(synthesize(coeffs, n_points) ** 2, n)
    return -0.5j * k * product
