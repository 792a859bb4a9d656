"""Differentiation by parts for the Kawahara nonlinearity.

Integrating the quadratic term by parts in time splits it into a boundary form B and cubic
terms: the resonant rho and sigma (phase-free) and the non-resonant R. The public operators
follow the formulas literally, with intermediate frequencies k2 + k3 up to 2N. With
``galerkin=True`` every intermediate frequency stays inside the band |k| <= N; that variant
is exactly the cubic term of the truncated system the solver integrates.
"""

import logging
from functools import lru_cache
from math import factorial

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..domain.exceptions import ValidationError
from ..domain.models import (
    ALPHA_VALUES,
    DispersionSymbol,
    FourierState,
    MultilinearReport,
    RepresentationReport,
    ResonanceFactor,
    Trajectory,
    TriplePart,
    hermitian_extend,
    interaction_phase,
    resonance_theta,
)
from ..utils.compensated import unit_phase
from .linear_propagator import linear_multiplier
from .spectral_core import bracket, quadratic_term, sobolev_norm

logger = logging.getLogger(__name__)

# above this band R is obtained from the convolution form minus the resonant part
DIRECT_R_LIMIT = 64
SAMPLE_DECAY_RANGE = (0.1, 1.0)
SPARSE_MODES_MAX = 4


def resonance_factor(k1: int, k2: int, k3: int, alpha: int) -> ResonanceFactor:
    return ResonanceFactor.of(k1, k2, k3, alpha)


def pair_denominator(k1: np.ndarray, k2: np.ndarray, alpha: int) -> np.ndarray:
    """5(k1^2 + k2^2 + k1 k2) - 3 alpha."""
    return 5 * (k1 * k1 + k2 * k2 + k1 * k2) - 3 * alpha


def certify_denominators(max_k: int) -> dict[str, int]:
    """Minima of |theta|, the pair denominator and 15k^2 - 3 alpha over nonzero |k_i| <= max_k."""
    ks = np.concatenate([np.arange(-max_k, 0), np.arange(1, max_k + 1)]).astype(np.int64)
    k1, k2, k3 = np.meshgrid(ks, ks, ks, indexing="ij", sparse=True)
    a, b = np.meshgrid(ks, ks, indexing="ij", sparse=True)
    minima = {"theta": None, "pair": None, "single": None}
    for alpha in ALPHA_VALUES:
        candidates = {
            "theta": int(np.min(np.abs(resonance_theta(k1, k2, k3, alpha)))),
            "pair": int(np.min(pair_denominator(a, b, alpha))),
            "single": int(np.min(15 * ks * ks - 3 * alpha)),
        }
        for name, value in candidates.items():
            current = minima[name]
            minima[name] = value if current is None else min(current, value)
    return minima


def _require_mean_zero(*states: FourierState) -> None:
    for state in states:
        if not state.is_mean_zero:
            raise ValidationError("Normal-form operators act on mean-zero states")


def _wrap(coeffs: np.ndarray, *inputs: FourierState) -> FourierState:
    if all(state.real_symmetric for state in inputs):
        return FourierState(hermitian_extend(coeffs), real_symmetric=True)
    return FourierState(coeffs)


def _widen(coeffs: np.ndarray, n_modes: int) -> np.ndarray:
    """Zero-pad a coefficient array to the band |k| <= n_modes."""
    pad = n_modes - (coeffs.size - 1) // 2
    return np.pad(coeffs, pad)


@lru_cache(maxsize=16)
def _bilinear_kernel(n_modes: int, alpha: int) -> np.ndarray:
    """Kernel -1/(2 k1 k2 D) with k2 = k - k1, as a (k, k1) matrix."""
    ks = np.arange(-n_modes, n_modes + 1, dtype=np.int64)
    k, k1 = np.meshgrid(ks, ks, indexing="ij")
    k2 = k - k1
    valid = (k != 0) & (k1 != 0) & (k2 != 0) & (np.abs(k2) <= n_modes)
    denominator = np.where(valid, k1 * k2 * pair_denominator(k1, k2, alpha), 1)
    kernel = np.where(valid, -0.5 / denominator, 0.0)
    kernel.setflags(write=False)
    return kernel


def _shifted(psi: np.ndarray) -> np.ndarray:
    """Read-only view T[k + N, k1 + N] = psi_{k - k1}, zero off the band."""
    n = (psi.size - 1) // 2
    return sliding_window_view(np.pad(psi, n), 2 * n + 1)[:, ::-1]


def bilinear_coeffs(phi: np.ndarray, psi: np.ndarray, alpha: int, real: bool = False) -> np.ndarray:
    """B(phi, psi) on the band; with real (Hermitian phi and psi) only k >= 1 is summed."""
    n = (phi.size - 1) // 2
    kernel = _bilinear_kernel(n, alpha)
    shifted = _shifted(psi)
    if not real:
        return np.einsum("kj,kj,j->k", kernel, shifted, phi)
    out = np.zeros(2 * n + 1, dtype=np.complex128)
    out[n + 1 :] = np.einsum("kj,kj,j->k", kernel[n + 1 :], shifted[n + 1 :], phi)
    return hermitian_extend(out)


def bilinear_B(phi: FourierState, psi: FourierState, alpha: int) -> FourierState:
    if phi.n_modes != psi.n_modes:
        raise ValidationError("B needs both arguments on the same band")
    _require_mean_zero(phi, psi)
    real = phi.real_symmetric and psi.real_symmetric
    return _wrap(bilinear_coeffs(phi.coeffs, psi.coeffs, alpha, real=real), phi, psi)


@lru_cache(maxsize=32)
def _rho_factor(n_modes: int, alpha: int, galerkin: bool) -> np.ndarray:
    ks = np.arange(-n_modes, n_modes + 1, dtype=np.int64)
    valid = ks != 0
    if galerkin:
        valid &= 2 * np.abs(ks) <= n_modes
    denominator = np.where(valid, ks * (15 * ks * ks - 3 * alpha), 1)
    factor = np.where(valid, 1.0 / denominator, 0.0)
    factor.setflags(write=False)
    return factor


def rho_coeffs(u: np.ndarray, alpha: int, galerkin: bool = False) -> np.ndarray:
    n = (u.size - 1) // 2
    return 0.5j * np.abs(u) ** 2 * u * _rho_factor(n, alpha, galerkin)


def resonant_rho(u: FourierState, alpha: int, galerkin: bool = False) -> FourierState:
    _require_mean_zero(u)
    return _wrap(rho_coeffs(u.coeffs, alpha, galerkin), u)


@lru_cache(maxsize=32)
def _sigma_weights(n_modes: int, alpha: int, include_antipode: bool, galerkin: bool) -> np.ndarray:
    """1/(j (5(k^2 - kj + j^2) - 3 alpha)) as a (k, j) matrix on the admissible pairs."""
    ks = np.arange(-n_modes, n_modes + 1, dtype=np.int64)
    k, j = np.meshgrid(ks, ks, indexing="ij")
    valid = (k != 0) & (j != 0) & (j != k)
    if galerkin:
        valid &= np.abs(k - j) <= n_modes
    if not include_antipode:
        valid &= j != -k
    denominator = np.where(valid, j * pair_denominator(k, -j, alpha), 1)
    weights = np.where(valid, 1.0 / denominator, 0.0)
    weights.setflags(write=False)
    return weights


def sigma_coeffs(u: np.ndarray, alpha: int, galerkin: bool = False) -> np.ndarray:
    n = (u.size - 1) // 2
    return -1j * u * (_sigma_weights(n, alpha, False, galerkin) @ (np.abs(u) ** 2))


def resonant_sigma(u: FourierState, alpha: int, galerkin: bool = False) -> FourierState:
    _require_mean_zero(u)
    return _wrap(sigma_coeffs(u.coeffs, alpha, galerkin), u)


def _resonant_pairing(u: np.ndarray, alpha: int, galerkin: bool) -> np.ndarray:
    """Resonant part of the raw triple sum with u_j u_{-j} in place of |u_j|^2."""
    n = (u.size - 1) // 2
    pairing = u * u[::-1]
    first = -1j * u * (_sigma_weights(n, alpha, True, galerkin) @ pairing)
    return first - 0.5j * u * pairing * _rho_factor(n, alpha, galerkin)


def _triple_sum(u: np.ndarray, alpha: int, part: TriplePart, galerkin: bool) -> np.ndarray:
    """-(i/2) sum u_k1 u_k2 u_k3 / (k1 D(k1, k2 + k3)) over admissible triples, O(N^3)."""
    n = (u.size - 1) // 2
    ks = np.arange(-n, n + 1, dtype=np.int64)
    k2, k3 = np.meshgrid(ks, ks, indexing="ij")
    inner = k2 + k3
    inner_ok = inner != 0
    if galerkin:
        inner_ok &= np.abs(inner) <= n
    pair_products = np.outer(u, u)
    real_part = np.zeros(2 * n + 1)
    imag_part = np.zeros(2 * n + 1)
    for k1 in ks:
        if k1 == 0 or u[k1 + n] == 0:
            continue
        k = k1 + inner
        mask = inner_ok & (np.abs(k) <= n) & (k != 0)
        if part != TriplePart.ALL:
            resonant = ((k1 + k2) == 0) | ((k1 + k3) == 0)
            mask &= resonant if part == TriplePart.RESONANT else ~resonant
        if not mask.any():
            continue
        denominator = k1 * pair_denominator(k1, inner[mask], alpha)
        terms = u[k1 + n] * pair_products[mask] / denominator
        target = k[mask] + n
        real_part += np.bincount(target, weights=terms.real, minlength=2 * n + 1)
        imag_part += np.bincount(target, weights=terms.imag, minlength=2 * n + 1)
    return -0.5j * (real_part + 1j * imag_part)


def trilinear_sum(
    u: FourierState, alpha: int, part: TriplePart = TriplePart.ALL, galerkin: bool = False
) -> FourierState:
    """Raw cubic sum of the normal form, optionally restricted to resonant or other triples."""
    if part not in (TriplePart.ALL, TriplePart.RESONANT, TriplePart.NONRESONANT):
        raise ValidationError(f"Unknown triple selection {part!r}")
    _require_mean_zero(u)
    return _wrap(_triple_sum(u.coeffs, alpha, part, galerkin), u)


def cubic_coeffs(u: np.ndarray, alpha: int, real: bool = False, galerkin: bool = False) -> np.ndarray:
    """-2 B(u, N(u)) with N the quadratic term.

    The literal form evaluates N(u) on the doubled band 2N, where the product of two band-N
    states is exact, and restricts the result to |k| <= N.
    """
    if galerkin:
        return -2.0 * bilinear_coeffs(u, quadratic_term(u, real=real), alpha, real=real)
    n = (u.size - 1) // 2
    wide = _widen(u, 2 * n)
    full = -2.0 * bilinear_coeffs(wide, quadratic_term(wide, real=real), alpha, real=real)
    return full[n : 3 * n + 1]


def cubic_term(u: FourierState, alpha: int, galerkin: bool = False) -> FourierState:
    _require_mean_zero(u)
    return _wrap(cubic_coeffs(u.coeffs, alpha, real=u.real_symmetric, galerkin=galerkin), u)


def nonresonant_coeffs(
    u: np.ndarray, alpha: int, fast: bool | None = None, galerkin: bool = False
) -> np.ndarray:
    n = (u.size - 1) // 2
    if fast is None:
        fast = n > DIRECT_R_LIMIT
    if fast:
        return cubic_coeffs(u, alpha, galerkin=galerkin) - _resonant_pairing(u, alpha, galerkin)
    return _triple_sum(u, alpha, TriplePart.NONRESONANT, galerkin)


def nonresonant_R(
    u: FourierState, alpha: int, fast: bool | None = None, galerkin: bool = False
) -> FourierState:
    _require_mean_zero(u)
    return _wrap(nonresonant_coeffs(u.coeffs, alpha, fast, galerkin), u)


def _moments(theta: np.ndarray, degree: int) -> np.ndarray:
    """mu_m(theta) = int_0^1 s^m e^{i theta s} ds for m = 0 .. degree, shape (len(theta), degree+1)."""
    theta = np.asarray(theta, dtype=np.float64)
    out = np.empty((theta.size, degree + 1), dtype=np.complex128)
    small = np.abs(theta) < 1.0
    if small.any():
        z = 1j * theta[small]
        for m in range(degree + 1):
            total = np.zeros(z.size, dtype=np.complex128)
            for term in range(30):
                total += z**term / (factorial(term) * (term + m + 1))
            out[small, m] = total
    large = ~small
    if large.any():
        z = 1j * theta[large]
        e = np.exp(z)
        out[large, 0] = (e - 1.0) / z
        for m in range(1, degree + 1):
            out[large, m] = (e - m * out[large, m - 1]) / z
    return out


def filon_weights(theta: np.ndarray, offsets: tuple[float, ...]) -> np.ndarray:
    """Weights W with int_0^1 e^{i theta s} P(s) ds = sum_m W_m P(offsets[m]) for P of degree < len(offsets)."""
    degree = len(offsets) - 1
    vandermonde = np.vander(np.asarray(offsets, dtype=np.float64), degree + 1, increasing=True)
    moments = _moments(np.atleast_1d(theta), degree)
    return np.linalg.solve(vandermonde.T, moments.T).T


def _stencils(n_points: int) -> tuple[list[int], dict[int, tuple[float, ...]]]:
    """Start node of the interpolation stencil of each interval, and offsets per start shift."""
    width = min(4, n_points)
    starts = [min(max(i - 1, 0), n_points - width) for i in range(n_points - 1)]
    offsets = {}
    for i, start in enumerate(starts):
        shift = start - i
        offsets[shift] = tuple(float(shift + m) for m in range(width))
    return starts, offsets


def _uniform_spacing(times: tuple[float, ...], quad_dt: float) -> float:
    steps = np.diff(np.asarray(times))
    if steps.size == 0:
        return 0.0
    h = float(steps.mean())
    if np.max(np.abs(steps - h)) > 1e-9 * max(1.0, h):
        raise ValidationError("Representation check needs uniformly recorded times")
    if h > quad_dt * (1.0 + 1e-9):
        raise ValidationError(
            f"Recording spacing {h:g} is coarser than the quadrature step {quad_dt:g}"
        )
    return h


def _nonresonant_triples(n_modes: int, alpha: int, galerkin: bool = True):
    ks = np.arange(-n_modes, n_modes + 1, dtype=np.int64)
    k1, k2, k3 = (a.ravel() for a in np.meshgrid(ks, ks, ks, indexing="ij"))
    inner = k2 + k3
    k = k1 + inner
    keep = (
        (k1 != 0)
        & (inner != 0)
        & (np.abs(k) <= n_modes)
        & (k != 0)
        & ((k1 + k2) != 0)
        & ((k1 + k3) != 0)
    )
    if galerkin:
        keep &= np.abs(inner) <= n_modes
    k1, k2, k3, inner, k = k1[keep], k2[keep], k3[keep], inner[keep], k[keep]
    weight = -0.5j / (k1 * pair_denominator(k1, inner, alpha))
    phase = interaction_phase(k1, k2, k3, alpha)
    return k1 + n_modes, k2 + n_modes, k3 + n_modes, k + n_modes, weight, phase.astype(np.float64)


def verify_representation(
    tr: Trajectory, g: FourierState, sym: DispersionSymbol, quad_dt: float
) -> RepresentationReport:
    """Residual of the normal-form identity along a recorded trajectory.

    Integrals run in the interaction frame w = e^{i omega t} u: the resonant integrand is
    smooth there and uses the composite cubic rule, each non-resonant triple carries its
    integer phase and uses Filon weights on the same cubic interpolant. The operators are
    the band-limited (Galerkin) ones, matching the truncated system the trajectory solves.
    """
    n = tr.n_modes
    if g.n_modes != n:
        raise ValidationError("Initial data and trajectory live on different bands")
    if sym != tr.symbol:
        raise ValidationError("Representation check needs the symbol of the run it verifies")
    h = _uniform_spacing(tr.times, quad_dt)
    alpha = sym.alpha
    g0 = g.coeffs.copy()
    g0[n] = 0.0
    times = np.asarray(tr.times)
    n_points = times.size

    frames = np.array([linear_multiplier(n, -t, sym) for t in times])
    states = np.array([state.coeffs for state in tr.states])
    w = frames * states

    resonant = np.array(
        [rho_coeffs(x, alpha, galerkin=True) + sigma_coeffs(x, alpha, galerkin=True) for x in w]
    )
    i1, i2, i3, target, weight, phase = _nonresonant_triples(n, alpha)

    starts, offsets = _stencils(n_points)
    resonant_weights = {shift: filon_weights(0.0, nodes)[0] for shift, nodes in offsets.items()}
    triple_weights = {}
    if target.size:
        triple_weights = {shift: filon_weights(phase * h, nodes) for shift, nodes in offsets.items()}

    integral = np.zeros((n_points, 2 * n + 1), dtype=np.complex128)
    running = np.zeros(2 * n + 1, dtype=np.complex128)
    size = 2 * n + 1
    for i, start in enumerate(starts):
        shift = start - i
        nodes = slice(start, start + len(offsets[shift]))
        running = running + h * (resonant_weights[shift] @ resonant[nodes])
        if target.size:
            oscillation = unit_phase(phase * times[i] / (2.0 * np.pi))
            frame = w[nodes]
            amplitudes = weight * frame[:, i1] * frame[:, i2] * frame[:, i3]
            local = np.sum(triple_weights[shift] * amplitudes.T, axis=1)
            contribution = h * oscillation * local
            running = running + (
                np.bincount(target, weights=contribution.real, minlength=size)
                + 1j * np.bincount(target, weights=contribution.imag, minlength=size)
            )
        integral[i + 1] = running

    boundary_g = bilinear_coeffs(g0, g0, alpha)
    per_time = []
    for index, t in enumerate(times):
        u = states[index]
        rhs = np.conj(frames[index]) * (g0 - boundary_g + integral[index])
        rhs = rhs + bilinear_coeffs(u, u, alpha)
        per_time.append((float(t), float(np.max(np.abs(u - rhs)))))
    max_residual = max(r for _, r in per_time)
    logger.info("Representation residual %.3e over %d times", max_residual, n_points)
    return RepresentationReport(max_residual=max_residual, per_time=tuple(per_time))


def _random_sample(rng: np.random.Generator, n_modes: int, s: float) -> np.ndarray:
    """Real mean-zero state with unit H^s norm, drawn across the whole band.

    Half the draws fill every mode with a random phase and amplitude |k|^-(s + 1/2 + gamma),
    gamma uniform in SAMPLE_DECAY_RANGE; the other half put Gaussian values on 1-4 modes
    chosen uniformly from 1..N.
    """
    ks = np.arange(1, n_modes + 1)
    coeffs = np.zeros(2 * n_modes + 1, dtype=np.complex128)
    if rng.random() < 0.5:
        gamma = rng.uniform(*SAMPLE_DECAY_RANGE)
        phases = np.exp(2j * np.pi * rng.random(n_modes))
        coeffs[n_modes + 1 :] = ks.astype(np.float64) ** (-(s + 0.5 + gamma)) * phases
    else:
        count = int(rng.integers(1, min(SPARSE_MODES_MAX, n_modes) + 1))
        chosen = rng.choice(ks, size=count, replace=False)
        coeffs[chosen + n_modes] = rng.standard_normal(count) + 1j * rng.standard_normal(count)
    coeffs = hermitian_extend(coeffs)
    return coeffs / sobolev_norm(FourierState(coeffs), s)


def estimate_multilinear_constants(
    s: float, s1: float, n_modes: int, trials: int, seed: int, alpha: int = 0
) -> MultilinearReport:
    """Largest observed ||op(u)||_{H^s1} / ||u||^deg_{H^s} over seeded random samples.

    B is measured with one derivative more than rho and sigma, matching its extra gain.
    """
    if s <= -0.5:
        logger.warning("s = %g lies outside s > -1/2; proceeding in exploration mode", s)
    if s1 > s + 2:
        logger.warning("s1 = %g exceeds s + 2 for rho and sigma; proceeding", s1)
    if trials <= 0:
        return MultilinearReport(s=s, s1=s1, n_modes=n_modes, trials=0, seed=seed, ratios={})

    rng = np.random.default_rng(seed)
    ks = np.arange(-n_modes, n_modes + 1)
    weight_b = bracket(ks) ** (2.0 * (s1 + 1.0))
    weight = bracket(ks) ** (2.0 * s1)
    ratios = {"B": 0.0, "rho": 0.0, "sigma": 0.0}
    for _ in range(trials):
        u = _random_sample(rng, n_modes, s)
        values = {
            "B": np.sqrt(np.sum(weight_b * np.abs(bilinear_coeffs(u, u, alpha, real=True)) ** 2)),
            "rho": np.sqrt(np.sum(weight * np.abs(rho_coeffs(u, alpha)) ** 2)),
            "sigma": np.sqrt(np.sum(weight * np.abs(sigma_coeffs(u, alpha)) ** 2)),
        }
        for name, value in values.items():
            ratios[name] = max(ratios[name], float(value))
    logger.info("Multilinear constants at N = %d: %s", n_modes, ratios)
    return MultilinearReport(
        s=s, s1=s1, n_modes=n_modes, trials=trials, seed=seed, ratios=ratios
    )
