import argparse
import json
import logging
import sys
import time
from collections.abc import Callable, Mapping
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config.logging_setup import configure_logging
from .config.settings import ExperimentConfig, Settings, get_settings
from .domain.exceptions import (
    ConfigurationError,
    ExperimentStageError,
    KawaharaError,
    NumericalInstabilityError,
    ValidationError,
)
from .domain.models import (
    ALPHA_VALUES,
    DimensionEstimate,
    InitialKind,
    IntegrationScheme,
    RationalTime,
    RunManifest,
    SolverConfig,
)
from .infrastructure.storage import (
    ResultStorage,
    create_file_storage,
    file_sha256,
    load_grid_function,
    load_state_file,
)
from .services.analysis import besov_norm, box_dimension, decay_slope, weierstrass, xsb_norm
from .services.dichotomy import emit_plot_data, run_dichotomy_experiment
from .services.initial_data import build_initial_data, parse_initial_spec
from .services.kawahara_solver import evolve
from .services.linear_propagator import rational_multipliers
from .services.normal_form import estimate_multilinear_constants, verify_representation
from .services.spectral_core import sobolev_norm
from .utils.formatters import (
    format_dichotomy_report,
    format_dimension_estimate,
    format_error_message,
    format_key_values,
    format_success_message,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_INVALID = 2
EXIT_NUMERICAL = 3
EXIT_UNRELIABLE = 4


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, ExperimentStageError):
        return exit_code_for(error.cause)
    if isinstance(error, (ValidationError, ConfigurationError)):
        return EXIT_INVALID
    if isinstance(error, NumericalInstabilityError):
        return EXIT_NUMERICAL
    return EXIT_ERROR


def main(argv: list[str] | None = None) -> int:
    """Main entry point for the kawahara-talbot CLI."""
    parser = create_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_help()
        return EXIT_OK

    try:
        settings = get_settings()
        level = {0: settings.log_level, 1: "INFO"}.get(args.verbose, "DEBUG")
        configure_logging(level)
        output_dir = Path(args.output_dir) if args.output_dir else settings.get_output_dir()
        storage = create_file_storage(output_dir)
        handler = COMMANDS[args.command]
        return Runner(args, settings, storage).run(handler)

    except KawaharaError as e:
        print(format_error_message(str(e)), file=sys.stderr)
        return exit_code_for(e)
    except Exception as e:
        logger.debug("Unexpected failure", exc_info=True)
        print(format_error_message(f"Unexpected error: {e}"), file=sys.stderr)
        return EXIT_ERROR


class Runner:
    """Executes one command, prints its payload and writes the run manifest."""

    def __init__(self, args: argparse.Namespace, settings: Settings, storage: ResultStorage):
        self.args: argparse.Namespace = args
        self.settings: Settings = settings
        self.storage: ResultStorage = storage
        self.outputs: list[Path] = []
        self.inputs: list[Path] = []

    def run(self, handler: Callable[["Runner"], Mapping[str, object]]) -> int:
        started = datetime.now(timezone.utc)
        clock = time.perf_counter()
        payload = handler(self)
        wall = time.perf_counter() - clock

        manifest = RunManifest(
            command=self.args.command,
            config=_arguments(self.args),
            seed=getattr(self.args, "seed", 0) or 0,
            code_version=__version__,
            input_hashes={str(path): file_sha256(path) for path in self.inputs},
            output_paths=tuple(str(path) for path in self.outputs),
            started_at=started.isoformat(),
            wall_seconds=wall,
        )
        name = self.args.command.replace("-", "_")
        manifest_path = self.storage.save_manifest(f"{name}_manifest.json", manifest)

        if self.args.format == "json":
            visible = {k: v for k, v in payload.items() if not k.startswith("_")}
            print(json.dumps(visible, indent=2, sort_keys=True, default=str))
        else:
            print(payload.get("_text") or format_key_values(self.args.command, _flat(payload)))
            print(format_success_message(f"Manifest written to {manifest_path}"))

        if payload.get("unreliable"):
            print(
                format_error_message("A dimension fit failed its quality check"), file=sys.stderr
            )
            return EXIT_UNRELIABLE
        return EXIT_OK

    def save_json(self, name: str, data: Mapping[str, object]) -> Path:
        path = self.storage.save_json(name, data)
        self.outputs.append(path)
        return path


def _arguments(args: argparse.Namespace) -> dict[str, object]:
    return {key: value for key, value in sorted(vars(args).items()) if key != "verbose"}


def _flat(payload: Mapping[str, object]) -> dict[str, object]:
    return {
        key: value
        for key, value in payload.items()
        if not key.startswith("_") and not isinstance(value, (list, dict))
    }


SEEDED_KINDS = (InitialKind.SOBOLEV, InitialKind.RANDOM)


def _initial_state(runner: Runner, n_modes: int):
    """Initial data from --initial; --seed replaces the seed of random kinds."""
    kind, options = parse_initial_spec(runner.args.initial)
    seed = getattr(runner.args, "seed", None)
    if seed is not None:
        if kind not in SEEDED_KINDS:
            raise ValidationError(f"--seed has no effect on {kind.value} initial data")
        options["seed"] = seed
    return build_initial_data(kind, n_modes, **options)


def _solver_config(args: argparse.Namespace, scheme: IntegrationScheme) -> SolverConfig:
    return SolverConfig(
        n_modes=args.n_modes,
        dt=args.dt,
        t_end=args.t_end,
        alpha=args.alpha,
        dealias=not args.no_dealias,
        record_stride=args.record_stride,
        scheme=scheme,
    )


def _check_record_budget(runner: Runner, cfg: SolverConfig) -> None:
    records = int(cfg.t_end / cfg.dt) // cfg.record_stride + 1
    if records > runner.settings.record_limit:
        raise ConfigurationError(
            f"Run would record {records} states (limit {runner.settings.record_limit}); "
            "raise --record-stride"
        )


def handle_evolve(runner: Runner) -> dict[str, object]:
    args = runner.args
    cfg = _solver_config(args, IntegrationScheme(args.scheme))
    cfg.validate()
    _check_record_budget(runner, cfg)
    g = _initial_state(runner, cfg.n_modes)
    trajectory = evolve(g, cfg, nonlinear=not args.linear)
    path = runner.storage.save_trajectory(args.out, trajectory)
    runner.outputs.append(path)

    first, last = trajectory.conserved_log[0], trajectory.conserved_log[-1]
    return {
        "trajectory": str(path),
        "records": len(trajectory.times),
        "t_final": trajectory.times[-1],
        "mean_drift": trajectory.mean_drift,
        "l2_drift": abs(last.l2 - first.l2),
        "hamiltonian_drift": abs(last.hamiltonian - first.hamiltonian),
    }


def handle_multipliers(runner: Runner) -> dict[str, object]:
    args = runner.args
    p = args.p_option if args.p_option is not None else args.p
    q = args.q_option if args.q_option is not None else args.q
    if p is None or q is None:
        raise ValidationError("multipliers needs p and q, positionally or as --p and --q")
    rt = RationalTime.from_pi_multiple(p, q) if args.pi else RationalTime.reduced(p, q)
    coeffs = rational_multipliers(rt, args.alpha)
    return {
        "p": rt.p,
        "q": rt.q,
        "t": rt.value,
        "alpha": args.alpha,
        "coeffs": [[float(c.real), float(c.imag)] for c in coeffs],
        "energy": float(sum(abs(c) ** 2 for c in coeffs)),
    }


def handle_verify_normal_form(runner: Runner) -> dict[str, object]:
    args = runner.args
    cfg = _solver_config(args, IntegrationScheme.NORMAL_FORM)
    cfg.validate()
    _check_record_budget(runner, cfg)
    g = _initial_state(runner, cfg.n_modes)
    trajectory = evolve(g, cfg)
    quad_dt = args.quad_dt or cfg.dt * cfg.record_stride
    report = verify_representation(trajectory, g, trajectory.symbol, quad_dt)
    per_time = [list(x) for x in report.per_time]
    path = runner.save_json(
        "normal_form_residuals.json", {"max_residual": report.max_residual, "per_time": per_time}
    )
    return {
        "max_residual": report.max_residual,
        "times": len(per_time),
        "per_time": per_time,
        "report": str(path),
    }


def _dimension_payload(estimate: DimensionEstimate, with_color: bool) -> dict[str, object]:
    return {
        "D": estimate.slope,
        "window": list(estimate.window),
        "r2": estimate.r2,
        "reliable": estimate.reliable,
        "counts": [list(pair) for pair in estimate.counts],
        "unreliable": not estimate.reliable,
        "_text": format_dimension_estimate(estimate, with_color),
    }


def handle_dimension(runner: Runner) -> dict[str, object]:
    args = runner.args
    if args.input:
        path = Path(args.input)
        runner.inputs.append(path)
        f = load_grid_function(path)
    else:
        f = weierstrass(args.weierstrass, args.j_max, args.points)
    estimate = box_dimension(f, args.levels)
    payload = _dimension_payload(estimate, args.color)
    runner.save_json("dimension.json", {k: v for k, v in payload.items() if not k.startswith("_")})
    return payload


def handle_norms(runner: Runner) -> dict[str, object]:
    args = runner.args
    source = args.state_in or args.state
    if not source:
        raise ValidationError("norms needs a state file, positionally or as --in")
    path = Path(source)
    runner.inputs.append(path)
    state = load_state_file(path)
    payload: dict[str, object] = {
        "n_modes": state.n_modes,
        "mean": state.mean.real,
        "sobolev": {f"{s:g}": sobolev_norm(state, s) for s in args.s},
    }
    if args.besov:
        s, p = args.besov
        estimate = besov_norm(state, s, p)
        payload["besov"] = {"s": s, "p": p, "value": estimate.value, "argmax_j": estimate.argmax_j}
    if args.decay:
        fit = decay_slope(state, *args.decay)
        payload["decay"] = {"slope": fit.slope, "sigma0": fit.sigma0, "r2": fit.r2}
    if args.xsb:
        if not args.trajectory:
            raise ValidationError("--xsb needs --trajectory")
        trajectory_path = Path(args.trajectory)
        runner.inputs.append(trajectory_path)
        trajectory = runner.storage.load_trajectory(trajectory_path)
        s, b = args.xsb
        payload["xsb"] = {"s": s, "b": b, "value": xsb_norm(trajectory, s, b, trajectory.symbol)}
    return payload


def handle_dichotomy(runner: Runner) -> dict[str, object]:
    args = runner.args
    path = Path(args.config)
    runner.inputs.append(path)
    cfg = ExperimentConfig.from_file(path)
    workers = args.workers or runner.settings.max_workers
    report = run_dichotomy_experiment(cfg, max_workers=workers)
    runner.outputs.extend(emit_plot_data(report, runner.storage))

    rows = [
        {
            "time": row.t,
            "classification": row.classification.value,
            "q": row.q,
            "n_plateaus": row.n_plateaus,
            "D_re": row.d_re,
            "D_im": row.d_im,
            "D_abs2": row.d_abs2,
            "slope_g": row.slope_g,
            "slope_N": row.slope_n,
            "reliable": all(e.reliable for e in row.estimates.values()),
        }
        for row in report.rows
    ]
    summary = {"config": cfg.as_dict(), "sigma0": report.sigma0, "window": list(report.window), "rows": rows}
    runner.save_json("dichotomy.json", summary)
    return {
        **summary,
        "unreliable": not all(row["reliable"] for row in rows),
        "_text": format_dichotomy_report(report, args.color),
    }


def handle_constants(runner: Runner) -> dict[str, object]:
    args = runner.args
    report = estimate_multilinear_constants(
        args.s, args.s1, args.n_modes, args.trials, args.seed, alpha=args.alpha
    )
    payload = {
        "s": report.s,
        "s1": report.s1,
        "n_modes": report.n_modes,
        "trials": report.trials,
        "seed": report.seed,
        "ratios": dict(report.ratios),
    }
    runner.save_json("constants.json", payload)
    return {**payload, "_text": format_key_values("Multilinear constants", dict(report.ratios))}


COMMANDS: dict[str, Callable[[Runner], Mapping[str, object]]] = {
    "evolve": handle_evolve,
    "multipliers": handle_multipliers,
    "verify-normal-form": handle_verify_normal_form,
    "dimension": handle_dimension,
    "norms": handle_norms,
    "dichotomy": handle_dichotomy,
    "constants": handle_constants,
}


def _add_solver_arguments(
    parser: argparse.ArgumentParser, default_t_end: float, default_initial: str = "step:jumps=0,1"
) -> None:
    parser.add_argument("--initial", default=default_initial, help="kind[:key=value;...]")
    parser.add_argument("-N", "--n-modes", type=int, default=64)
    parser.add_argument("--dt", type=float, default=1e-4)
    parser.add_argument("--t-end", type=float, default=default_t_end)
    parser.add_argument("--alpha", type=int, choices=ALPHA_VALUES, default=0)
    parser.add_argument("--record-stride", type=int, default=1)
    parser.add_argument("--no-dealias", action="store_true", help="Skip the 3/2-rule padding")
    parser.add_argument("--seed", type=int, help="Seed for sobolev and random initial data")


def create_parser() -> argparse.ArgumentParser:
    """Create the CLI argument parser."""
    parser = argparse.ArgumentParser(
        prog="kawahara-talbot",
        description="Spectral experiments on the Talbot effect for the periodic Kawahara equation",
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("-v", "--verbose", action="count", default=0)
    parser.add_argument("-o", "--output-dir", help="Directory for result files")
    parser.add_argument("--format", choices=("text", "json"), default="text")
    parser.add_argument("--color", action="store_true", help="Colored text output")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    evolve_parser = subparsers.add_parser("evolve", help="Integrate the equation and save the trajectory")
    _add_solver_arguments(evolve_parser, default_t_end=0.01)
    evolve_parser.add_argument(
        "--scheme",
        choices=[s.value for s in IntegrationScheme],
        default=IntegrationScheme.NORMAL_FORM.value,
    )
    evolve_parser.add_argument("--linear", action="store_true", help="Drop the nonlinear term")
    evolve_parser.add_argument("--out", default="trajectory.json")

    multipliers_parser = subparsers.add_parser(
        "multipliers", help="Translate coefficients of the free flow at t = 2 pi p / q"
    )
    multipliers_parser.add_argument("p", type=int, nargs="?")
    multipliers_parser.add_argument("q", type=int, nargs="?")
    multipliers_parser.add_argument("--p", type=int, dest="p_option")
    multipliers_parser.add_argument("--q", type=int, dest="q_option")
    multipliers_parser.add_argument("--alpha", type=int, choices=ALPHA_VALUES, default=0)
    multipliers_parser.add_argument("--pi", action="store_true", help="Read p/q as t = pi p / q")

    verify_parser = subparsers.add_parser(
        "verify-normal-form", help="Check the normal-form representation along a run"
    )
    _add_solver_arguments(verify_parser, default_t_end=0.01, default_initial="random:h1_norm=0.5")
    verify_parser.add_argument("--quad-dt", type=float, help="Quadrature spacing (default: record spacing)")

    dimension_parser = subparsers.add_parser("dimension", help="Box-counting dimension of a graph")
    source = dimension_parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--input", "--in", dest="input", help="CSV file with columns x,value")
    source.add_argument("--weierstrass", type=float, metavar="ALPHA", help="Weierstrass exponent")
    dimension_parser.add_argument("--j-max", type=int, default=14)
    dimension_parser.add_argument("--points", type=int, default=2**18)
    dimension_parser.add_argument("--levels", type=int, default=14)

    norms_parser = subparsers.add_parser("norms", help="Sobolev, Besov and decay diagnostics of a state")
    norms_parser.add_argument("state", nargs="?", help="Fourier state JSON file")
    norms_parser.add_argument("--in", dest="state_in", help="Fourier state JSON file")
    norms_parser.add_argument("--s", type=float, nargs="+", default=[0.0, 0.5, 1.0])
    norms_parser.add_argument("--besov", type=float, nargs=2, metavar=("S", "P"))
    norms_parser.add_argument("--decay", type=int, nargs=2, metavar=("J_MIN", "J_MAX"))
    norms_parser.add_argument("--trajectory", help="Trajectory JSON for the space-time norm")
    norms_parser.add_argument("--xsb", type=float, nargs=2, metavar=("S", "B"))

    dichotomy_parser = subparsers.add_parser("dichotomy", help="Run the rational/irrational time experiment")
    dichotomy_parser.add_argument("config", help="key = value experiment file")
    dichotomy_parser.add_argument("--workers", type=int, help="Worker threads (default from settings)")

    constants_parser = subparsers.add_parser("constants", help="Estimate multilinear operator constants")
    constants_parser.add_argument("--s", type=float, default=0.0)
    constants_parser.add_argument("--s1", type=float, default=1.0)
    constants_parser.add_argument("-N", "--n-modes", type=int, default=32)
    constants_parser.add_argument("--trials", type=int, default=200)
    constants_parser.add_argument("--seed", type=int, default=0)
    constants_parser.add_argument("--alpha", type=int, choices=ALPHA_VALUES, default=0)

    return parser


if __name__ == "__main__":
    sys.exit(main())
