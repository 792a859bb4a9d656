"""Rational/irrational-time dichotomy experiment."""

import logging
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np
import pandas as pd

from ..config.settings import ExperimentConfig
from ..domain.exceptions import ExperimentStageError, KawaharaError, ValidationError
from ..domain.models import (
    DichotomyReport,
    DichotomyRow,
    DimensionEstimate,
    DispersionSymbol,
    ExperimentMode,
    FourierState,
    InitialKind,
    RationalTime,
    RealGridFunction,
    StepFunctionSpec,
    TimeClassification,
)
from ..infrastructure.storage import ResultStorage
from .analysis import box_dimension, decay_slope
from .initial_data import build_initial_data
from .kawahara_solver import duhamel_part, evolve, reduce_mean
from .linear_propagator import (
    classify_time,
    propagate,
    sample_translates,
    translate_decomposition,
)
from .spectral_core import synthesize

logger = logging.getLogger(__name__)

CLASSIFY_Q_MAX = 64
CLASSIFY_TOL = 1e-12
PLATEAU_TOL = 1e-8
SUMMARY_COLUMNS = (
    "t", "classification", "q", "n_plateaus", "D_re", "D_im", "D_abs2", "slope_g", "slope_N",
)
QUANTITIES = ("re", "im", "abs2")


def count_plateaus(samples: np.ndarray, tol: float = PLATEAU_TOL) -> int:
    """Maximal runs of a periodic sample sequence whose successive differences stay below tol."""
    samples = np.asarray(samples, dtype=np.float64)
    breaks = int(np.count_nonzero(np.abs(np.diff(samples, append=samples[0])) >= tol))
    return max(breaks, 1)


def predicted_window(sigma0: float) -> tuple[float, float]:
    """Dimension range [33/16 - 2 sigma0, 31/16] expected at generic irrational times."""
    return (33.0 / 16.0 - 2.0 * sigma0, 31.0 / 16.0)


def _decay_range(n_modes: int) -> tuple[int, int] | None:
    j_max = (n_modes + 1).bit_length() - 2
    return (2, j_max) if j_max >= 4 else None


def _safe_slope(state: FourierState) -> float | None:
    span = _decay_range(state.n_modes)
    if span is None:
        return None
    try:
        return decay_slope(state, *span).slope
    except ValidationError:
        return None


class DichotomyExperiment:
    """Measures quantization and fractalization of one run at the configured times."""

    def __init__(self, config: ExperimentConfig, max_workers: int = 4):
        self.config: ExperimentConfig = config
        self.max_workers: int = max_workers

    def _stage(self, stage: str, action, *args, **kwargs):
        try:
            return action(*args, **kwargs)
        except KawaharaError as e:
            raise ExperimentStageError(stage, e) from e

    def _initial_data(self) -> tuple[FourierState, StepFunctionSpec | None]:
        cfg = self.config
        g = build_initial_data(
            cfg.initial_kind,
            cfg.n_modes,
            jumps=cfg.initial_jumps,
            values=cfg.initial_values,
            sigma0=cfg.initial_sigma0,
            width=cfg.initial_width,
            seed=cfg.seed,
        )
        spec = None
        if cfg.initial_kind == InitialKind.STEP:
            spec = StepFunctionSpec.from_pi_multiples(cfg.initial_jumps, cfg.initial_values)
        return g, spec

    def _states(self, g: FourierState) -> tuple[dict[float, FourierState], DispersionSymbol]:
        """Mean-reduced u at every sample time, keyed by time."""
        cfg = self.config
        g0, m = reduce_mean(g)
        sym = DispersionSymbol(cfg.alpha, m)
        if cfg.mode == ExperimentMode.LINEAR:
            return {t: propagate(g0, t, sym) for t in cfg.times}, sym
        trajectory = evolve(g, cfg.solver_config(), checkpoints=cfg.times)
        recorded = dict(zip(trajectory.times, trajectory.states))
        missing = [t for t in cfg.times if t not in recorded]
        if missing:
            raise ValidationError(f"The run recorded no state at t = {missing}")
        self._duhamel = dict(zip(trajectory.times, duhamel_part(trajectory, g)))
        return {t: recorded[t] for t in cfg.times}, sym

    def _plateaus(
        self, classification: TimeClassification, spec: StepFunctionSpec | None, sym: DispersionSymbol
    ) -> int | None:
        if spec is None or not classification.is_rational:
            return None
        rt = RationalTime.reduced(classification.p, classification.q)
        td = translate_decomposition(rt, sym)
        linear = sample_translates(spec.evaluate, td, self.config.grid_points)
        return count_plateaus(linear.samples)

    def _measure(
        self,
        t: float,
        state: FourierState,
        mean: float,
        spec: StepFunctionSpec | None,
        sym: DispersionSymbol,
        slope_g: float | None,
    ) -> DichotomyRow:
        cfg = self.config
        classification = classify_time(t, CLASSIFY_Q_MAX, CLASSIFY_TOL)
        n_plateaus = self._stage("plateaus", self._plateaus, classification, spec, sym)

        coeffs = state.coeffs.copy()
        coeffs[state.n_modes] += mean
        samples = synthesize(coeffs, cfg.grid_points)
        if state.real_symmetric:
            samples = samples.real.astype(np.complex128)
        profiles = {
            "re": samples.real,
            "im": samples.imag,
            "abs2": np.abs(samples) ** 2,
        }
        estimates: dict[str, DimensionEstimate] = {}
        for name, values in profiles.items():
            estimates[name] = self._stage(
                f"dimension:{name}", box_dimension, RealGridFunction(values), cfg.dimension_levels
            )

        slope_n = None
        if cfg.mode == ExperimentMode.NONLINEAR:
            slope_n = _safe_slope(self._duhamel[t])
        logger.info(
            "t=%.6g %s D_re=%.3f plateaus=%s", t, classification.kind, estimates["re"].slope, n_plateaus
        )
        return DichotomyRow(
            t=t,
            classification=classification.kind,
            q=classification.q,
            n_plateaus=n_plateaus,
            d_re=estimates["re"].slope,
            d_im=estimates["im"].slope,
            d_abs2=estimates["abs2"].slope,
            slope_g=slope_g,
            slope_n=slope_n,
            estimates=estimates,
        )

    def run(self) -> DichotomyReport:
        cfg = self.config
        self._stage("config", cfg.validate)
        g, spec = self._stage("initial", self._initial_data)
        states, sym = self._stage("evolve", self._states, g)
        slope_g = _safe_slope(reduce_mean(g)[0])
        logger.info("Measuring %d times with %d workers", len(states), self.max_workers)
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            futures = [
                pool.submit(self._measure, t, state, sym.mean_drift, spec, sym, slope_g)
                for t, state in states.items()
            ]
            rows = [future.result() for future in futures]
        rows.sort(key=lambda row: row.t)
        sigma0 = cfg.initial_sigma0 if cfg.initial_kind == InitialKind.SOBOLEV else 0.5
        return DichotomyReport(rows=tuple(rows), sigma0=sigma0, window=predicted_window(sigma0))


def run_dichotomy_experiment(config: ExperimentConfig, max_workers: int = 4) -> DichotomyReport:
    return DichotomyExperiment(config, max_workers).run()


def summary_frame(report: DichotomyReport) -> pd.DataFrame:
    records = [
        {
            "t": row.t,
            "classification": row.classification.value,
            "q": row.q,
            "n_plateaus": row.n_plateaus,
            "D_re": row.d_re,
            "D_im": row.d_im,
            "D_abs2": row.d_abs2,
            "slope_g": row.slope_g,
            "slope_N": row.slope_n,
        }
        for row in report.rows
    ]
    frame = pd.DataFrame.from_records(records, columns=list(SUMMARY_COLUMNS))
    return frame.astype({"q": "Int64", "n_plateaus": "Int64"})


def counts_frame(estimate: DimensionEstimate) -> pd.DataFrame:
    return pd.DataFrame(list(estimate.counts), columns=["eps", "count"])


def emit_plot_data(report: DichotomyReport, storage: ResultStorage, stem: str = "dichotomy") -> list[Path]:
    """Summary CSV plus one eps,count table per (time, quantity)."""
    written = [storage.save_table(f"{stem}.csv", summary_frame(report))]
    for index, row in enumerate(report.rows):
        for quantity in QUANTITIES:
            estimate = row.estimates.get(quantity)
            if estimate is None:
                continue
            name = f"{stem}_t{index:03d}_{quantity}_counts.csv"
            written.append(storage.save_table(name, counts_frame(estimate)))
    return written
