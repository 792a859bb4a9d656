"""Time integration of u_t + u_xxxxx + alpha u_xxx + u u_x = 0 on the torus.

The mean is removed first and reappears as the drift term of the symbol. Both schemes are
Lawson (integrating-factor) RK4, so the dispersive phase is applied exactly:

- ``ifrk4`` integrates u with the quadratic term -(ik/2)(u*u)_k;
- ``normal_form`` integrates v = u - B(u, u), whose forcing is the cubic -2 B(u, N(u)), and
  recovers u from v by fixed-point iteration.
"""

import logging
from collections.abc import Callable, Sequence
from math import ceil, pi

import numpy as np

from ..domain.exceptions import NumericalInstabilityError, ValidationError
from ..domain.models import (
    ConservedQuantities,
    DispersionSymbol,
    FourierState,
    IntegrationScheme,
    SolverConfig,
    Trajectory,
    hermitian_extend,
)
from .linear_propagator import propagate
from .normal_form import bilinear_coeffs, cubic_coeffs
from .spectral_core import convolve_coeffs, quadratic_term, sup_norm

logger = logging.getLogger(__name__)

BLOW_UP_FACTOR = 10.0
FIXED_POINT_TOL = 1e-14
STAGE_TOL = 1e-12
FIXED_POINT_MAX_ITER = 60

RightHandSide = Callable[[np.ndarray], np.ndarray]


def reduce_mean(g: FourierState) -> tuple[FourierState, float]:
    if not g.real_symmetric:
        raise ValidationError("Initial data must be real (Hermitian coefficients)")
    m = g.mean.real
    coeffs = g.coeffs.copy()
    coeffs[g.n_modes] = 0.0
    return FourierState(coeffs, real_symmetric=True), m


def nonlinear_term(u: FourierState, dealias: bool = True) -> FourierState:
    """-(ik/2) sum_{k1+k2=k} u_k1 u_k2 on the band of u."""
    coeffs = quadratic_term(u.coeffs, real=u.real_symmetric, dealias=dealias)
    if u.real_symmetric:
        return FourierState(hermitian_extend(coeffs), real_symmetric=True)
    return FourierState(coeffs)


def stability_limit(u: np.ndarray) -> float:
    """Largest admissible dt = 1 / (4 N max|u|)."""
    n = (u.size - 1) // 2
    amplitude = sup_norm(u)
    if amplitude == 0.0:
        return float("inf")
    return 1.0 / (4.0 * n * amplitude)


def check_stability(u: np.ndarray, dt: float) -> float:
    """Raise when dt exceeds the advective bound; returns the sup norm that was checked."""
    limit = stability_limit(u)
    if dt > limit:
        raise NumericalInstabilityError(
            f"dt = {dt:g} exceeds the stability bound {limit:g} for the current state"
        )
    return sup_norm(u)


class _LawsonStepper:
    """Integrating-factor RK4 for c' = -i omega c + F(c), with exponentials cached per dt."""

    def __init__(self, omega: np.ndarray, rhs: RightHandSide, real: bool):
        self._omega = omega
        self._rhs = rhs
        self._real = real
        self._cache: dict[float, tuple[np.ndarray, np.ndarray]] = {}

    def _exponentials(self, dt: float) -> tuple[np.ndarray, np.ndarray]:
        if dt not in self._cache:
            half = np.exp(-0.5j * self._omega * dt)
            self._cache[dt] = (half, half * half)
        return self._cache[dt]

    def step(self, c: np.ndarray, dt: float) -> np.ndarray:
        e, e2 = self._exponentials(dt)
        a = self._rhs(c)
        b = self._rhs(e * (c + 0.5 * dt * a))
        d3 = self._rhs(e * c + 0.5 * dt * b)
        d4 = self._rhs(e2 * c + dt * e * d3)
        out = e2 * c + (dt / 6.0) * (e2 * a + 2.0 * e * (b + d3) + d4)
        if self._real:
            out = hermitian_extend(out)
        out[(out.size - 1) // 2] = 0.0
        if not np.all(np.isfinite(out)):
            raise NumericalInstabilityError("Non-finite coefficients produced by the time step")
        return out


class _NormalFormVariables:
    """Maps v = u - B(u, u) back to u and evaluates the cubic forcing.

    The boundary term B(u, u) of the last inversion seeds the next one, and an inversion
    of the same v at an equal or looser tolerance is answered from memory. Stage
    evaluations solve to STAGE_TOL; recorded states to FIXED_POINT_TOL.
    """

    def __init__(self, alpha: int, real: bool, guess: np.ndarray):
        self.alpha = alpha
        self.real = real
        self._boundary = self._bilinear(guess)
        self._last: tuple[np.ndarray, np.ndarray, float] | None = None

    def _bilinear(self, u: np.ndarray) -> np.ndarray:
        return bilinear_coeffs(u, u, self.alpha, real=self.real)

    def _solve(self, v: np.ndarray, tol: float) -> np.ndarray:
        if self._last is not None:
            last_v, last_u, last_tol = self._last
            if last_tol <= tol and np.array_equal(v, last_v):
                return last_u
        u = v + self._boundary
        for _ in range(FIXED_POINT_MAX_ITER):
            boundary = self._bilinear(u)
            updated = v + boundary
            if np.max(np.abs(updated - u)) <= tol:
                self._boundary = boundary
                self._last = (v.copy(), updated, tol)
                return updated
            u = updated
        raise NumericalInstabilityError(
            "Normal-form inversion u = v + B(u, u) did not converge; the data is too large"
        )

    def recover(self, v: np.ndarray) -> np.ndarray:
        return self._solve(v, FIXED_POINT_TOL)

    def forward(self, u: np.ndarray) -> np.ndarray:
        self._boundary = self._bilinear(u)
        v = u - self._boundary
        self._last = (v.copy(), u.copy(), FIXED_POINT_TOL)
        return v

    def __call__(self, v: np.ndarray) -> np.ndarray:
        return cubic_coeffs(self._solve(v, STAGE_TOL), self.alpha, real=self.real, galerkin=True)


def _omega(n_modes: int, sym: DispersionSymbol) -> np.ndarray:
    return sym(np.arange(-n_modes, n_modes + 1))


def step_ifrk4(
    u: FourierState, dt: float, sym: DispersionSymbol, nonlinear: bool = True, dealias: bool = True
) -> FourierState:
    if not u.is_mean_zero:
        raise ValidationError("The stepper advances mean-reduced states")
    real = u.real_symmetric

    def rhs(c: np.ndarray) -> np.ndarray:
        if not nonlinear:
            return np.zeros_like(c)
        return quadratic_term(c, real=real, dealias=dealias)

    stepper = _LawsonStepper(_omega(u.n_modes, sym), rhs, real)
    return FourierState(stepper.step(u.coeffs.copy(), dt), real_symmetric=real)


def step_normal_form(u: FourierState, dt: float, sym: DispersionSymbol) -> FourierState:
    if not u.is_mean_zero:
        raise ValidationError("The stepper advances mean-reduced states")
    real = u.real_symmetric
    variables = _NormalFormVariables(sym.alpha, real, u.coeffs)
    stepper = _LawsonStepper(_omega(u.n_modes, sym), variables, real)
    v = stepper.step(variables.forward(u.coeffs), dt)
    return FourierState(variables.recover(v), real_symmetric=real)


def conserved_quantities(u: FourierState, alpha: int) -> ConservedQuantities:
    """(u_0, sum |u_k|^2, H) with H = int (u_xx^2/2 - alpha u_x^2/2 + u^3/6) dx."""
    if not u.real_symmetric:
        raise ValidationError("Conserved quantities are defined for real states")
    k = u.wavenumbers.astype(np.float64)
    power = np.abs(u.coeffs) ** 2
    product = convolve_coeffs(u.coeffs, u.coeffs, real=True)
    cubic = np.sum(product * u.coeffs[::-1]).real
    hamiltonian = 2.0 * pi * (
        0.5 * np.sum(k**4 * power) - 0.5 * alpha * np.sum(k**2 * power) + cubic / 6.0
    )
    return ConservedQuantities(
        mean=float(u.mean.real), l2=float(np.sum(power)), hamiltonian=float(hamiltonian)
    )


def _step_plan(
    t_end: float, dt: float, checkpoints: Sequence[float]
) -> list[tuple[float, bool, float]]:
    """(step size, forced record, time after the step) landing on every checkpoint and t_end.

    Times are start + i h inside a segment and the checkpoint value itself at its end, so a
    recorded time compares equal to the checkpoint it was forced by.
    """
    targets = sorted({float(t) for t in checkpoints if 0.0 < t < t_end} | {float(t_end)})
    plan = []
    start = 0.0
    for target in targets:
        span = target - start
        if span <= 0.0:
            continue
        n_steps = max(1, ceil(span / dt - 1e-9))
        h = span / n_steps
        plan.extend((h, False, start + i * h) for i in range(1, n_steps))
        plan.append((h, True, target))
        start = target
    return plan


def evolve(
    g: FourierState,
    cfg: SolverConfig,
    checkpoints: Sequence[float] = (),
    nonlinear: bool = True,
) -> Trajectory:
    """Run the configured scheme from g and record u every record_stride steps.

    Recorded states are mean-reduced; the drift phase of the removed mean is part of the
    symbol, so trajectory.symbol reproduces the free flow of the run.
    """
    cfg.validate()
    if g.n_modes != cfg.n_modes:
        raise ValidationError(f"Initial data has band {g.n_modes}, config expects {cfg.n_modes}")
    u0, m = reduce_mean(g)
    sym = DispersionSymbol(cfg.alpha, m)
    initial_sup = check_stability(u0.coeffs, cfg.dt)

    logger.info(
        "Evolving N=%d alpha=%d scheme=%s dt=%g to t=%g (mean %.6g)",
        cfg.n_modes, cfg.alpha, cfg.scheme, cfg.dt, cfg.t_end, m,
    )
    omega = _omega(cfg.n_modes, sym)
    times = [0.0]
    states = [u0]
    log = [conserved_quantities(u0, cfg.alpha)]
    if cfg.t_end == 0.0:
        return Trajectory(cfg, tuple(times), tuple(states), tuple(log), mean_drift=m)

    if not nonlinear:
        variables = None
        stepper = _LawsonStepper(omega, np.zeros_like, True)
    elif cfg.scheme == IntegrationScheme.NORMAL_FORM:
        variables = _NormalFormVariables(cfg.alpha, True, u0.coeffs)
        stepper = _LawsonStepper(omega, variables, True)
    else:
        variables = None
        stepper = _LawsonStepper(
            omega, lambda c: quadratic_term(c, real=True, dealias=cfg.dealias), True
        )

    u = u0.coeffs.copy()
    state = variables.forward(u) if variables else u
    for count, (h, forced, t) in enumerate(_step_plan(cfg.t_end, cfg.dt, checkpoints), start=1):
        state = stepper.step(state, h)
        if not (forced or count % cfg.record_stride == 0):
            continue
        u = variables.recover(state) if variables else state
        current_sup = check_stability(u, cfg.dt)
        if initial_sup > 0.0 and current_sup > BLOW_UP_FACTOR * initial_sup:
            raise NumericalInstabilityError(
                f"Sup norm grew from {initial_sup:.3g} to {current_sup:.3g} by t = {t:.6g}"
            )
        recorded = FourierState(u, real_symmetric=True)
        times.append(t)
        states.append(recorded)
        log.append(conserved_quantities(recorded, cfg.alpha))
        logger.debug("t=%.6g l2=%.15g H=%.15g", t, log[-1].l2, log[-1].hamiltonian)

    logger.info("Recorded %d states", len(times))
    return Trajectory(cfg, tuple(times), tuple(states), tuple(log), mean_drift=m)


def duhamel_part(
    tr: Trajectory, g: FourierState, sym: DispersionSymbol | None = None
) -> list[FourierState]:
    """N(t) = u(t) - e^{Lt} g at every recorded time.

    The free flow is the run's own, tr.symbol; a symbol passed explicitly must equal it, and
    g must carry the mean the run removed.
    """
    if g.n_modes != tr.n_modes:
        raise ValidationError("Initial data and trajectory live on different bands")
    if sym is None:
        sym = tr.symbol
    elif sym != tr.symbol:
        raise ValidationError(
            f"Symbol (alpha={sym.alpha}, drift={sym.mean_drift:g}) does not match the run's "
            f"(alpha={tr.symbol.alpha}, drift={tr.symbol.mean_drift:g})"
        )
    g0, m = reduce_mean(g)
    if m != tr.mean_drift:
        raise ValidationError(f"Initial mean {m:g} differs from the run's drift {tr.mean_drift:g}")
    return [
        FourierState(state.coeffs - propagate(g0, t, sym).coeffs, real_symmetric=True)
        for t, state in zip(tr.times, tr.states)
    ]
