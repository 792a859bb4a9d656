"""Initial-data constructors."""

import logging
from collections.abc import Callable, Mapping, Sequence
from math import pi

import numpy as np

from ..domain.exceptions import ValidationError
from ..domain.models import (
    FourierState,
    InitialKind,
    StepFunctionSpec,
    hermitian_extend,
)
from .spectral_core import sobolev_norm

logger = logging.getLogger(__name__)

BV_SIGMA0_RANGE = (0.5, 17.0 / 32.0)


def make_step_function(spec: StepFunctionSpec, n_modes: int) -> FourierState:
    """Exact coefficients (1/(2 pi i k)) sum_i (v_i - v_{i-1}) e^{-ik x_i}; u_0 is the mean."""
    heights = spec.jump_heights
    if not np.any(heights):
        raise ValidationError("A step function needs at least one nonzero jump")
    jumps = np.asarray(spec.jumps, dtype=np.float64)
    values = np.asarray(spec.values, dtype=np.float64)
    lengths = np.diff(np.append(jumps, jumps[0] + 2.0 * pi))

    k = np.arange(1, n_modes + 1)
    phases = np.exp(-1j * np.outer(k, jumps))
    positive = (phases @ heights) / (2j * pi * k)
    coeffs = np.zeros(2 * n_modes + 1, dtype=np.complex128)
    coeffs[n_modes] = np.dot(values, lengths) / (2.0 * pi)
    coeffs[n_modes + 1 :] = positive
    return FourierState(hermitian_extend(coeffs), real_symmetric=True)


def _random_phases(rng: np.random.Generator, n_modes: int) -> np.ndarray:
    return np.exp(2j * pi * rng.random(n_modes))


def make_sobolev_data(sigma0: float, seed: int, n_modes: int) -> FourierState:
    """|g_k| = |k|^{-sigma0 - 1/2} with seeded unimodular phases, mean zero."""
    low, high = BV_SIGMA0_RANGE
    if not low <= sigma0 < high:
        logger.warning(
            "sigma0 = %g lies outside [1/2, 17/32); generating exploratory data", sigma0
        )
    rng = np.random.default_rng(seed)
    k = np.arange(1, n_modes + 1, dtype=np.float64)
    coeffs = np.zeros(2 * n_modes + 1, dtype=np.complex128)
    coeffs[n_modes + 1 :] = k ** (-sigma0 - 0.5) * _random_phases(rng, n_modes)
    return FourierState(hermitian_extend(coeffs), real_symmetric=True)


def make_random_data(n_modes: int, h1_norm: float, seed: int) -> FourierState:
    """Mean-zero real data with Gaussian coefficients damped like <k>^-2, scaled to an H^1 norm."""
    rng = np.random.default_rng(seed)
    k = np.arange(1, n_modes + 1, dtype=np.float64)
    amplitudes = (rng.standard_normal(n_modes) + 1j * rng.standard_normal(n_modes)) / (1.0 + k * k)
    coeffs = np.zeros(2 * n_modes + 1, dtype=np.complex128)
    coeffs[n_modes + 1 :] = amplitudes
    state = FourierState(hermitian_extend(coeffs), real_symmetric=True)
    return FourierState(state.coeffs * (h1_norm / sobolev_norm(state, 1.0)), real_symmetric=True)


def mollify(state: FourierState, width: float) -> FourierState:
    """Convolve with a Gaussian of the given width (multiply u_k by exp(-(k width)^2 / 2))."""
    if width < 0:
        raise ValidationError("Mollifier width must be nonnegative")
    k = state.wavenumbers.astype(np.float64)
    return FourierState(
        state.coeffs * np.exp(-0.5 * (k * width) ** 2), real_symmetric=state.real_symmetric
    )


def build_initial_data(
    kind: InitialKind,
    n_modes: int,
    jumps: Sequence[float] = (0.0, 1.0),
    values: Sequence[float] | None = None,
    sigma0: float = 0.5,
    width: float = 0.05,
    h1_norm: float = 0.5,
    seed: int = 0,
) -> FourierState:
    """Initial data by kind; jump locations are multiples of pi."""
    kind = InitialKind(kind)
    if kind in (InitialKind.STEP, InitialKind.SMOOTH_STEP):
        spec = StepFunctionSpec.from_pi_multiples(
            tuple(jumps), tuple(values) if values is not None else None
        )
        state = make_step_function(spec, n_modes)
        return mollify(state, width) if kind == InitialKind.SMOOTH_STEP else state
    if kind == InitialKind.SOBOLEV:
        return make_sobolev_data(sigma0, seed, n_modes)
    return make_random_data(n_modes, h1_norm, seed)


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def parse_initial_spec(text: str) -> tuple[InitialKind, dict[str, object]]:
    """Parse ``kind[:key=value;key=value]``, e.g. ``step:jumps=0,1;values=1,0``."""
    kind_text, _, rest = text.partition(":")
    try:
        kind = InitialKind(kind_text.strip())
    except ValueError:
        choices = ", ".join(k.value for k in InitialKind)
        raise ValidationError(f"Unknown initial data kind {kind_text!r} (choose {choices})")

    options: dict[str, object] = {}
    converters: Mapping[str, Callable[[str], object]] = {
        "jumps": _floats,
        "values": _floats,
        "sigma0": float,
        "width": float,
        "h1_norm": float,
        "seed": int,
    }
    for item in filter(None, (part.strip() for part in rest.split(";"))):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in converters:
            raise ValidationError(f"Cannot read initial data option {item!r}")
        try:
            options[key] = converters[key](value.strip())
        except ValueError as exc:
            raise ValidationError(f"Bad value for {key}: {value!r}") from exc
    return kind, options
