import os
from collections.abc import Callable, Mapping
from dataclasses import dataclass, fields
from math import pi
from pathlib import Path

from ..domain.exceptions import ConfigurationError, KawaharaError
from ..domain.models import (
    ALPHA_VALUES,
    IRRATIONAL_SURROGATES,
    MAX_BAND,
    ExperimentMode,
    InitialKind,
    IntegrationScheme,
    RationalTime,
    SolverConfig,
)

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL")


def get_default_output_dir() -> str:
    """Get the default output directory in a global application data directory."""
    if os.name == "nt":  # Windows
        app_data_dir = Path(os.environ.get("APPDATA", Path.home() / "AppData" / "Roaming"))
    else:  # macOS and Linux
        app_data_dir = Path.home() / ".local" / "share"
    return str(app_data_dir / "kawahara-talbot")


@dataclass(frozen=True)
class Settings:
    output_dir: str = ""  # Will be set to default if empty
    log_level: str = "WARNING"
    max_workers: int = 4
    record_limit: int = 100_000

    def __post_init__(self):
        if not self.output_dir:
            object.__setattr__(self, "output_dir", get_default_output_dir())

    @classmethod
    def from_env(cls) -> "Settings":
        """Create settings from environment variables with defaults."""
        try:
            return cls(
                output_dir=os.getenv("KAWAHARA_OUTPUT_DIR", ""),
                log_level=os.getenv("KAWAHARA_LOG_LEVEL", "WARNING").upper(),
                max_workers=int(os.getenv("KAWAHARA_MAX_WORKERS", "4")),
                record_limit=int(os.getenv("KAWAHARA_RECORD_LIMIT", "100000")),
            )
        except (ValueError, TypeError) as e:
            raise ConfigurationError(f"Invalid configuration value: {e}")

    @classmethod
    def default(cls) -> "Settings":
        """Create default settings."""
        return cls()

    def get_output_dir(self) -> Path:
        return Path(self.output_dir)

    def validate(self) -> None:
        """Validate the configuration settings."""
        if self.log_level not in LOG_LEVELS:
            raise ConfigurationError(f"Log level must be one of {', '.join(LOG_LEVELS)}")

        if self.max_workers <= 0:
            raise ConfigurationError("Max workers must be positive")

        if self.record_limit <= 0:
            raise ConfigurationError("Record limit must be positive")


def get_settings() -> Settings:
    """Get application settings, trying environment variables first."""
    settings = Settings.from_env()
    settings.validate()
    return settings


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(part) for part in text.split(",") if part.strip())


def _rational_list(text: str) -> tuple[RationalTime, ...]:
    times = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        p, sep, q = part.partition("/")
        times.append(RationalTime.reduced(int(p), int(q) if sep else 1))
    return tuple(times)


def _irrational_list(text: str) -> tuple[float, ...]:
    """Surrogate names or explicit turn values."""
    turns = []
    for part in filter(None, (p.strip() for p in text.split(","))):
        turns.append(IRRATIONAL_SURROGATES[part] if part in IRRATIONAL_SURROGATES else float(part))
    return tuple(turns)


# file key -> (field name, parser)
_KEYS: dict[str, tuple[str, Callable[[str], object]]] = {
    "alpha": ("alpha", int),
    "n_modes": ("n_modes", int),
    "dt": ("dt", float),
    "t_end": ("t_end", float),
    "scheme": ("scheme", IntegrationScheme),
    "mode": ("mode", ExperimentMode),
    "record_stride": ("record_stride", int),
    "seed": ("seed", int),
    "initial.kind": ("initial_kind", InitialKind),
    "initial.jumps": ("initial_jumps", _float_list),
    "initial.values": ("initial_values", _float_list),
    "initial.sigma0": ("initial_sigma0", float),
    "initial.width": ("initial_width", float),
    "times.rational": ("times_rational", _rational_list),
    "times.irrational": ("times_irrational", _irrational_list),
    "dimension.levels": ("dimension_levels", int),
    "dimension.grid": ("dimension_grid", int),
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat key = value experiment description of the dichotomy runs."""

    alpha: int = 0
    n_modes: int = 256
    dt: float = 1e-4
    t_end: float | None = None
    scheme: IntegrationScheme = IntegrationScheme.NORMAL_FORM
    mode: ExperimentMode = ExperimentMode.NONLINEAR
    record_stride: int = 1
    seed: int = 0
    initial_kind: InitialKind = InitialKind.STEP
    initial_jumps: tuple[float, ...] = (0.0, 1.0)
    initial_values: tuple[float, ...] | None = None
    initial_sigma0: float = 0.5
    initial_width: float = 0.05
    times_rational: tuple[RationalTime, ...] = ()
    times_irrational: tuple[float, ...] = ()
    dimension_levels: int = 9
    dimension_grid: int = 0  # 0 selects 2^(levels + 5)

    @classmethod
    def from_mapping(cls, entries: Mapping[str, str]) -> "ExperimentConfig":
        values: dict[str, object] = {}
        for key, raw in entries.items():
            if key not in _KEYS:
                raise ConfigurationError(f"Unknown experiment key {key!r}")
            name, parse = _KEYS[key]
            try:
                values[name] = parse(raw.strip())
            except (ValueError, KeyError, KawaharaError) as e:
                raise ConfigurationError(f"Invalid value for {key}: {raw!r} ({e})")
        return cls(**values)

    @classmethod
    def from_file(cls, path: Path) -> "ExperimentConfig":
        """Read ``key = value`` lines; ``#`` starts a comment."""
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"Cannot read experiment config {path}: {e}")
        entries: dict[str, str] = {}
        for number, line in enumerate(text.splitlines(), start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigurationError(f"{path}:{number}: expected 'key = value'")
            entries[key.strip()] = value
        return cls.from_mapping(entries)

    @property
    def times(self) -> tuple[float, ...]:
        rational = [rt.value for rt in self.times_rational]
        irrational = [2.0 * pi * turns for turns in self.times_irrational]
        return tuple(rational + irrational)

    @property
    def resolved_t_end(self) -> float:
        if self.t_end is not None:
            return self.t_end
        return max(self.times, default=0.0)

    @property
    def grid_points(self) -> int:
        return self.dimension_grid or 2 ** (self.dimension_levels + 5)

    def solver_config(self) -> SolverConfig:
        return SolverConfig(
            n_modes=self.n_modes,
            dt=self.dt,
            t_end=self.resolved_t_end,
            alpha=self.alpha,
            record_stride=self.record_stride,
            scheme=self.scheme,
        )

    def validate(self) -> None:
        if self.alpha not in ALPHA_VALUES:
            raise ConfigurationError(f"alpha must be one of {ALPHA_VALUES}")

        if not 1 <= self.n_modes <= MAX_BAND:
            raise ConfigurationError(f"n_modes must lie in [1, {MAX_BAND}]")

        if self.dt <= 0:
            raise ConfigurationError("dt must be positive")

        if not self.times:
            raise ConfigurationError("Give at least one time in times.rational or times.irrational")

        if any(t < 0 for t in self.times):
            raise ConfigurationError("Sample times must be nonnegative")

        if self.resolved_t_end < max(self.times):
            raise ConfigurationError("t_end is shorter than the largest sample time")

        if self.dimension_levels < 8:
            raise ConfigurationError("dimension.levels must be at least 8 to leave four fit scales")

        if self.grid_points < 2 ** (self.dimension_levels + 4):
            raise ConfigurationError("dimension.grid is too small for the requested levels")

        if self.grid_points < 2 * self.n_modes + 1:
            raise ConfigurationError("dimension.grid cannot represent the band")

    def as_dict(self) -> dict[str, object]:
        out: dict[str, object] = {}
        for item in fields(self):
            value = getattr(self, item.name)
            if item.name == "times_rational":
                value = [f"{rt.p}/{rt.q}" for rt in value]
            elif isinstance(value, tuple):
                value = list(value)
            out[item.name] = value
        return out
