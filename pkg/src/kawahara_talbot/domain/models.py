from collections.abc import Callable, Mapping
from dataclasses import dataclass, field
from enum import StrEnum, unique
from math import e, gcd, pi, sqrt

import numpy as np

from .exceptions import ConfigurationError, ValidationError

SYMMETRY_TOL = 1e-12
MEAN_ZERO_TOL = 1e-12
# k^5 must stay exact in int64
MAX_BAND = 4096
ALPHA_VALUES = (-1, 0, 1)

# irrational times t = 2 pi * turns
IRRATIONAL_SURROGATES: dict[str, float] = {
    "golden": (sqrt(5.0) - 1.0) / 2.0,
    "sqrt2": sqrt(2.0) - 1.0,
    "e": e - 2.0,
    "pi": pi - 3.0,
}


def _frozen_array(values: object, dtype: type) -> np.ndarray:
    array = np.array(values, dtype=dtype, copy=True)
    array.setflags(write=False)
    return array


def is_hermitian(coeffs: np.ndarray, tol: float = SYMMETRY_TOL) -> bool:
    """Check u_{-k} = conj(u_k) on a coefficient array indexed by k + N."""
    n = (coeffs.size - 1) // 2
    if abs(coeffs[n].imag) > tol:
        return False
    return bool(np.all(np.abs(coeffs[::-1] - np.conj(coeffs)) <= tol))


def hermitian_extend(coeffs: np.ndarray) -> np.ndarray:
    """Rebuild the negative half from the nonnegative one so symmetry holds exactly."""
    n = (coeffs.size - 1) // 2
    out = np.array(coeffs, dtype=np.complex128, copy=True)
    out[:n] = np.conj(out[n + 1 :][::-1])
    out[n] = out[n].real
    return out


@dataclass(frozen=True, eq=False)
class FourierState:
    """Coefficients u_k on the band |k| <= N, stored densely at index k + N."""

    coeffs: np.ndarray
    real_symmetric: bool = False

    def __post_init__(self) -> None:
        coeffs = _frozen_array(self.coeffs, np.complex128)
        if coeffs.ndim != 1 or coeffs.size < 3 or coeffs.size % 2 == 0:
            raise ValidationError("Coefficients must cover a band [-N, N] with N >= 1")
        if not np.all(np.isfinite(coeffs)):
            raise ValidationError("Coefficients must be finite")
        if self.real_symmetric and not is_hermitian(coeffs):
            raise ValidationError("State flagged real_symmetric violates u_{-k} = conj(u_k)")
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, n_modes: int) -> "FourierState":
        return cls(np.zeros(2 * n_modes + 1, dtype=np.complex128), real_symmetric=True)

    @classmethod
    def from_modes(
        cls, n_modes: int, modes: Mapping[int, complex], real_symmetric: bool = False
    ) -> "FourierState":
        """Build a state from sparse modes; with real_symmetric the conjugates are filled in."""
        coeffs = np.zeros(2 * n_modes + 1, dtype=np.complex128)
        for k, value in modes.items():
            if abs(k) > n_modes:
                raise ValidationError(f"Mode {k} lies outside the band |k| <= {n_modes}")
            coeffs[k + n_modes] = value
            if real_symmetric:
                coeffs[-k + n_modes] = np.conj(value)
        return cls(coeffs, real_symmetric=real_symmetric)

    @classmethod
    def hermitian(cls, coeffs: np.ndarray) -> "FourierState":
        return cls(hermitian_extend(coeffs), real_symmetric=True)

    @property
    def n_modes(self) -> int:
        return (self.coeffs.size - 1) // 2

    @property
    def wavenumbers(self) -> np.ndarray:
        return np.arange(-self.n_modes, self.n_modes + 1, dtype=np.int64)

    @property
    def mean(self) -> complex:
        return complex(self.coeffs[self.n_modes])

    @property
    def is_mean_zero(self) -> bool:
        return abs(self.mean) <= MEAN_ZERO_TOL

    def __getitem__(self, k: int) -> complex:
        # zero outside the band: the state is band-limited
        if abs(k) > self.n_modes:
            return 0j
        return complex(self.coeffs[k + self.n_modes])

    def with_coeffs(self, coeffs: np.ndarray) -> "FourierState":
        """Same band and symmetry flag, new values (re-symmetrized when flagged)."""
        if self.real_symmetric:
            return FourierState.hermitian(coeffs)
        return FourierState(coeffs)

    def resized(self, n_modes: int) -> "FourierState":
        """Truncate or zero-pad to a new band."""
        coeffs = np.zeros(2 * n_modes + 1, dtype=np.complex128)
        common = min(n_modes, self.n_modes)
        coeffs[n_modes - common : n_modes + common + 1] = self.coeffs[
            self.n_modes - common : self.n_modes + common + 1
        ]
        return FourierState(coeffs, real_symmetric=self.real_symmetric)


@dataclass(frozen=True, eq=False)
class RealGridFunction:
    """Samples f(x_j) at x_j = 2 pi j / M."""

    samples: np.ndarray
    imaginary_dropped: bool = False

    def __post_init__(self) -> None:
        samples = _frozen_array(self.samples, np.float64)
        if samples.ndim != 1 or samples.size < 2:
            raise ValidationError("A grid function needs at least two samples")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("Samples must be finite")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_callable(
        cls, profile: Callable[[np.ndarray], np.ndarray], n_points: int
    ) -> "RealGridFunction":
        grid = 2.0 * pi * np.arange(n_points) / n_points
        return cls(np.asarray(profile(grid), dtype=np.float64))

    @property
    def n_points(self) -> int:
        return int(self.samples.size)

    @property
    def grid(self) -> np.ndarray:
        return 2.0 * pi * np.arange(self.n_points) / self.n_points


@dataclass(frozen=True)
class DispersionSymbol:
    """omega(k) = k^5 - alpha k^3 + m k; the linear flow multiplies u_k by exp(-i omega t)."""

    alpha: int = 0
    mean_drift: float = 0.0

    def __post_init__(self) -> None:
        if isinstance(self.alpha, bool) or self.alpha not in ALPHA_VALUES:
            raise ValidationError(f"alpha must be one of {ALPHA_VALUES}, got {self.alpha!r}")

    def integer_part(self, k: np.ndarray | int) -> np.ndarray:
        """Exact k^5 - alpha k^3 as int64."""
        k = np.asarray(k, dtype=np.int64)
        if np.any(np.abs(k) > MAX_BAND):
            raise ValidationError(f"Wavenumbers beyond {MAX_BAND} overflow the exact phase")
        return k**5 - self.alpha * k**3

    def __call__(self, k: np.ndarray | int) -> np.ndarray:
        k = np.asarray(k, dtype=np.int64)
        return self.integer_part(k).astype(np.float64) + self.mean_drift * k


@dataclass(frozen=True)
class RationalTime:
    """t = 2 pi p / q in lowest terms."""

    p: int
    q: int

    def __post_init__(self) -> None:
        if self.q < 1:
            raise ValidationError("Denominator q must be positive")
        if gcd(self.p, self.q) != 1:
            raise ValidationError(f"{self.p}/{self.q} is not in lowest terms")

    @classmethod
    def reduced(cls, p: int, q: int) -> "RationalTime":
        if q == 0:
            raise ValidationError("Denominator q must be nonzero")
        if q < 0:
            p, q = -p, -q
        divisor = gcd(p, q)
        return cls(p // divisor, q // divisor)

    @classmethod
    def from_pi_multiple(cls, p: int, q: int) -> "RationalTime":
        """t = pi p / q, the convention of the dichotomy statements."""
        return cls.reduced(p, 2 * q)

    @property
    def turns(self) -> float:
        return self.p / self.q

    @property
    def value(self) -> float:
        return 2.0 * pi * self.p / self.q


@dataclass(frozen=True, eq=False)
class TranslateDecomposition:
    """e^{Lt} g = sum_j c_j g(x - 2 pi j / q - mean_shift)."""

    q: int
    coeffs: np.ndarray
    mean_shift: float = 0.0

    def __post_init__(self) -> None:
        coeffs = _frozen_array(self.coeffs, np.complex128)
        if self.q < 1 or coeffs.shape != (self.q,):
            raise ValidationError("A translate decomposition needs exactly q coefficients")
        object.__setattr__(self, "coeffs", coeffs)


@unique
class TimeKind(StrEnum):
    RATIONAL = "rational"
    IRRATIONAL = "irrational"


@dataclass(frozen=True)
class TimeClassification:
    kind: TimeKind
    p: int | None = None
    q: int | None = None

    @classmethod
    def rational(cls, p: int, q: int) -> "TimeClassification":
        return cls(kind=TimeKind.RATIONAL, p=p, q=q)

    @classmethod
    def irrational(cls) -> "TimeClassification":
        return cls(kind=TimeKind.IRRATIONAL)

    @property
    def is_rational(self) -> bool:
        return self.kind == TimeKind.RATIONAL


@unique
class IntegrationScheme(StrEnum):
    IFRK4 = "ifrk4"
    NORMAL_FORM = "normal_form"


@unique
class InitialKind(StrEnum):
    STEP = "step"
    SMOOTH_STEP = "smooth_step"
    SOBOLEV = "sobolev"
    RANDOM = "random"


@unique
class ExperimentMode(StrEnum):
    LINEAR = "linear"
    NONLINEAR = "nonlinear"


@unique
class TriplePart(StrEnum):
    ALL = "all"
    RESONANT = "resonant"
    NONRESONANT = "nonresonant"


@dataclass(frozen=True)
class SolverConfig:
    n_modes: int
    dt: float
    t_end: float
    alpha: int = 0
    dealias: bool = True
    record_stride: int = 1
    scheme: IntegrationScheme = IntegrationScheme.NORMAL_FORM

    def validate(self) -> None:
        if not 1 <= self.n_modes <= MAX_BAND:
            raise ConfigurationError(f"n_modes must lie in [1, {MAX_BAND}]")
        if not self.dt > 0:
            raise ConfigurationError("dt must be positive")
        if not self.t_end >= 0:
            raise ConfigurationError("t_end must be nonnegative")
        if self.alpha not in ALPHA_VALUES:
            raise ConfigurationError(f"alpha must be one of {ALPHA_VALUES}")
        if self.record_stride < 1:
            raise ConfigurationError("record_stride must be at least 1")

    def as_dict(self) -> dict[str, object]:
        return {
            "n_modes": self.n_modes,
            "dt": self.dt,
            "t_end": self.t_end,
            "alpha": self.alpha,
            "dealias": self.dealias,
            "record_stride": self.record_stride,
            "scheme": self.scheme.value,
        }


@dataclass(frozen=True)
class ConservedQuantities:
    mean: float
    l2: float
    hamiltonian: float

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.mean, self.l2, self.hamiltonian)


@dataclass(frozen=True, eq=False)
class Trajectory:
    """States of one run in u-variables (mean removed, drift phase applied)."""

    config: SolverConfig
    times: tuple[float, ...]
    states: tuple[FourierState, ...]
    conserved_log: tuple[ConservedQuantities, ...]
    mean_drift: float = 0.0

    def __post_init__(self) -> None:
        if not self.times:
            raise ValidationError("A trajectory holds at least its initial state")
        if not (len(self.times) == len(self.states) == len(self.conserved_log)):
            raise ValidationError("Trajectory times, states and log must have equal lengths")
        if self.times[0] != 0.0:
            raise ValidationError("Trajectories start at t = 0")
        if any(b <= a for a, b in zip(self.times, self.times[1:])):
            raise ValidationError("Trajectory times must increase")

    @property
    def symbol(self) -> DispersionSymbol:
        return DispersionSymbol(self.config.alpha, self.mean_drift)

    @property
    def n_modes(self) -> int:
        return self.states[0].n_modes

    @property
    def final_state(self) -> FourierState:
        return self.states[-1]


def resonance_theta(k1, k2, k3, alpha: int):
    """5(k1^2 + k2^2 + k3^2 + k1 k2 + k2 k3 + k3 k1) - 3 alpha, for ints or int64 arrays."""
    return 5 * (k1 * k1 + k2 * k2 + k3 * k3 + k1 * k2 + k2 * k3 + k3 * k1) - 3 * alpha


def interaction_phase(k1, k2, k3, alpha: int):
    """Integer symbol of k1 + k2 + k3 minus those of k1, k2 and k3, in factored form."""
    return resonance_theta(k1, k2, k3, alpha) * (k1 + k2) * (k2 + k3) * (k3 + k1)


@dataclass(frozen=True)
class ResonanceFactor:
    k1: int
    k2: int
    k3: int
    theta: int
    pairs: tuple[int, int, int]

    @classmethod
    def of(cls, k1: int, k2: int, k3: int, alpha: int) -> "ResonanceFactor":
        theta = resonance_theta(k1, k2, k3, alpha)
        return cls(k1, k2, k3, theta, (k1 + k2, k2 + k3, k3 + k1))

    @property
    def is_resonant(self) -> bool:
        a, b, c = self.pairs
        return a * b * c == 0


@dataclass(frozen=True)
class DimensionEstimate:
    slope: float
    window: tuple[float, float]
    r2: float
    counts: tuple[tuple[float, int], ...]
    reliable: bool = True


@dataclass(frozen=True)
class DecayFit:
    """Least-squares slope of log2 block RMS against j, with sigma0 = -slope - 1/2."""

    slope: float
    sigma0: float
    r2: float
    blocks: tuple[int, ...]


@dataclass(frozen=True)
class BesovEstimate:
    value: float
    j_max: int
    argmax_j: int


@dataclass(frozen=True)
class StepFunctionSpec:
    """Piecewise constant g: values[i] on [jumps[i], jumps[i+1]), the last interval wrapping."""

    jumps: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.jumps) < 1:
            raise ValidationError("A step function needs at least one jump")
        if len(self.values) != len(self.jumps):
            raise ValidationError("Give one value per interval (as many values as jumps)")
        if any(not 0.0 <= x < 2.0 * pi for x in self.jumps):
            raise ValidationError("Jump locations must lie in [0, 2 pi)")
        if any(b <= a for a, b in zip(self.jumps, self.jumps[1:])):
            raise ValidationError("Jump locations must be distinct and increasing")
        if not all(np.isfinite(self.values)):
            raise ValidationError("Step values must be finite")

    @classmethod
    def from_pi_multiples(
        cls, jumps: tuple[float, ...], values: tuple[float, ...] | None = None
    ) -> "StepFunctionSpec":
        if values is None:
            values = tuple(1.0 if i % 2 == 0 else 0.0 for i in range(len(jumps)))
        return cls(tuple(pi * x for x in jumps), tuple(values))

    @property
    def jump_heights(self) -> np.ndarray:
        values = np.asarray(self.values, dtype=np.float64)
        return values - np.roll(values, 1)

    @property
    def jump_count(self) -> int:
        return int(np.count_nonzero(self.jump_heights))

    def evaluate(self, x: np.ndarray) -> np.ndarray:
        x = np.mod(np.asarray(x, dtype=np.float64), 2.0 * pi)
        index = np.searchsorted(np.asarray(self.jumps), x, side="right") - 1
        return np.asarray(self.values, dtype=np.float64)[index]


@dataclass(frozen=True)
class RepresentationReport:
    max_residual: float
    per_time: tuple[tuple[float, float], ...]


@dataclass(frozen=True)
class MultilinearReport:
    s: float
    s1: float
    n_modes: int
    trials: int
    seed: int
    ratios: Mapping[str, float] = field(default_factory=dict)


@dataclass(frozen=True)
class DichotomyRow:
    t: float
    classification: TimeKind
    q: int | None
    n_plateaus: int | None
    d_re: float
    d_im: float
    d_abs2: float
    slope_g: float | None
    slope_n: float | None
    estimates: Mapping[str, DimensionEstimate] = field(default_factory=dict)


@dataclass(frozen=True)
class DichotomyReport:
    rows: tuple[DichotomyRow, ...]
    sigma0: float
    window: tuple[float, float]


@dataclass(frozen=True)
class RunManifest:
    command: str
    config: Mapping[str, object]
    seed: int
    code_version: str
    input_hashes: Mapping[str, str]
    output_paths: tuple[str, ...]
    started_at: str
    wall_seconds: float
