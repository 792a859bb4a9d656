import unittest
from math import log2, pi

import numpy as np

from src.kawahara_talbot.domain.exceptions import NumericalInstabilityError, ValidationError
from src.kawahara_talbot.domain.models import (
    IRRATIONAL_SURROGATES,
    DispersionSymbol,
    FourierState,
    IntegrationScheme,
    RationalTime,
)
from src.kawahara_talbot.services.analysis import decay_slope
from src.kawahara_talbot.services.initial_data import make_random_data, mollify
from src.kawahara_talbot.services.kawahara_solver import (
    check_stability,
    conserved_quantities,
    duhamel_part,
    evolve,
    nonlinear_term,
    reduce_mean,
    stability_limit,
    step_ifrk4,
    step_normal_form,
)
from src.kawahara_talbot.services.spectral_core import convolve_coeffs
from tests.utils.test_helpers import BaseTestCase, TestDataFactory


class TestReduceMean(BaseTestCase):
    def test_mean_zero_data_is_unchanged(self):
        g = TestDataFactory.create_random_state(6, seed=1)

        reduced, m = reduce_mean(g)

        self.assert_coeffs_close(reduced, g)
        self.assertEqual(m, 0.0)

    def test_constant_data(self):
        g = FourierState.from_modes(3, {0: 2.5}, real_symmetric=True)

        reduced, m = reduce_mean(g)

        self.assert_coeffs_close(reduced, np.zeros(7))
        self.assertEqual(m, 2.5)

    def test_indicator_has_half_mean(self):
        g = TestDataFactory.create_indicator(16)

        reduced, m = reduce_mean(g)

        self.assertAlmostEqual(m, 0.5, places=15)
        self.assertEqual(reduced[0], 0j)
        self.assertEqual(reduced[1], g[1])

    def test_complex_data_is_rejected(self):
        with self.assertRaises(ValidationError):
            reduce_mean(TestDataFactory.create_mode(4, 1))


class TestNonlinearTerm(BaseTestCase):
    def test_cosine(self):
        u = TestDataFactory.create_mode(4, 1, 0.5, real=True)
        expected = np.zeros(9, dtype=np.complex128)
        expected[4 + 2] = -0.25j
        expected[4 - 2] = 0.25j

        for dealias in (True, False):
            with self.subTest(dealias=dealias):
                result = nonlinear_term(u, dealias=dealias)

                self.assertTrue(result.real_symmetric)
                self.assert_coeffs_close(result, expected, atol=1e-15)

    def test_band_edge_without_dealiasing_aliases(self):
        u = TestDataFactory.create_mode(2, 2, 0.5, real=True)

        self.assert_coeffs_close(nonlinear_term(u), np.zeros(5), atol=1e-15)
        self.assertGreater(np.max(np.abs(nonlinear_term(u, dealias=False).coeffs)), 0.1)


class TestStability(unittest.TestCase):
    def test_zero_state_has_no_limit(self):
        self.assertEqual(stability_limit(np.zeros(9, dtype=complex)), float("inf"))

    def test_limit_scales_with_band_and_amplitude(self):
        u = TestDataFactory.create_mode(8, 1, 0.5, real=True)

        self.assertAlmostEqual(stability_limit(u.coeffs), 1.0 / 32.0, places=12)

    def test_large_step_is_rejected(self):
        u = TestDataFactory.create_mode(8, 1, 10.0, real=True)

        with self.assertRaises(NumericalInstabilityError):
            check_stability(u.coeffs, 0.01)


class TestStepIFRK4(BaseTestCase):
    def test_zero_state_stays_zero(self):
        u = step_ifrk4(FourierState.zeros(4), 0.01, DispersionSymbol())

        self.assert_coeffs_close(u, np.zeros(9))

    def test_linear_phase_is_exact(self):
        eps = 1e-3
        dt = 0.05
        for alpha in (-1, 0, 1):
            with self.subTest(alpha=alpha):
                u = TestDataFactory.create_mode(4, 1, eps, real=True)
                stepped = step_ifrk4(u, dt, DispersionSymbol(alpha=alpha), nonlinear=False)
                phase = np.exp(-1j * (1 - alpha) * dt)
                self.assertLess(abs(stepped[1] - eps * phase), 1e-14)
                self.assertLess(abs(stepped[-1] - eps * np.conj(phase)), 1e-14)

    def test_requires_mean_zero_state(self):
        u = FourierState.from_modes(2, {0: 1.0}, real_symmetric=True)

        with self.assertRaises(ValidationError):
            step_ifrk4(u, 0.01, DispersionSymbol())

    def test_keeps_reality_and_mean(self):
        u = make_random_data(8, 0.5, seed=2)

        stepped = step_ifrk4(u, 1e-3, DispersionSymbol(alpha=1))

        self.assertTrue(stepped.real_symmetric)
        self.assertEqual(stepped[0], 0j)

    def test_normal_form_step_agrees_with_ifrk4(self):
        u = make_random_data(4, 0.3, seed=3)
        sym = DispersionSymbol(alpha=-1)

        direct = step_ifrk4(u, 1e-5, sym)
        transformed = step_normal_form(u, 1e-5, sym)

        self.assert_coeffs_close(transformed, direct, atol=1e-12)


class TestConvergence(unittest.TestCase):
    def _final(self, g, scheme, dt):
        cfg = TestDataFactory.create_solver_config(
            n_modes=g.n_modes, dt=dt, t_end=0.5, scheme=scheme, record_stride=10**6
        )
        return evolve(g, cfg).final_state.coeffs

    def test_fourth_order_self_convergence(self):
        g = FourierState.from_modes(2, {1: 0.25, 2: 0.1j}, real_symmetric=True)
        for scheme in IntegrationScheme:
            with self.subTest(scheme=scheme):
                reference = self._final(g, scheme, 0.000625)
                coarse = np.max(np.abs(self._final(g, scheme, 0.005) - reference))
                fine = np.max(np.abs(self._final(g, scheme, 0.0025) - reference))
                order = log2(coarse / fine)
                self.assertGreater(order, 3.5)
                self.assertLess(order, 4.5)


class TestEvolve(BaseTestCase):
    def test_zero_data_gives_zero_trajectory(self):
        cfg = TestDataFactory.create_solver_config(n_modes=4)

        tr = evolve(FourierState.zeros(4), cfg)

        self.assertEqual(len(tr.times), 11)
        for state in tr.states:
            self.assert_coeffs_close(state, np.zeros(9))

    def test_zero_end_time_gives_single_entry(self):
        g = make_random_data(4, 0.5, seed=1)

        tr = evolve(g, TestDataFactory.create_solver_config(n_modes=4, t_end=0.0))

        self.assertEqual(tr.times, (0.0,))
        self.assert_coeffs_close(tr.states[0], g)

    def test_band_mismatch_is_rejected(self):
        with self.assertRaises(ValidationError):
            evolve(FourierState.zeros(4), TestDataFactory.create_solver_config(n_modes=8))

    def test_oversized_step_is_rejected(self):
        g = TestDataFactory.create_mode(8, 1, 10.0, real=True)

        with self.assertRaises(NumericalInstabilityError):
            evolve(g, TestDataFactory.create_solver_config(n_modes=8, dt=0.01))

    def test_checkpoints_and_stride(self):
        g = make_random_data(6, 0.5, seed=4)
        cfg = TestDataFactory.create_solver_config(n_modes=6, record_stride=1000)

        tr = evolve(g, cfg, checkpoints=(0.0035,))

        self.assertEqual(tr.times, (0.0, 0.0035, 0.01))

    def test_checkpoints_are_recorded_at_their_exact_values(self):
        rational = {RationalTime.reduced(p, q).value for q in range(1, 9) for p in range(q)}
        irrational = {2.0 * pi * turns for turns in IRRATIONAL_SURROGATES.values()}
        checkpoints = sorted(rational | irrational)
        g = make_random_data(2, 0.1, seed=7)
        cfg = TestDataFactory.create_solver_config(
            n_modes=2, dt=0.01, t_end=checkpoints[-1], record_stride=10**6
        )

        tr = evolve(g, cfg, checkpoints=checkpoints, nonlinear=False)

        self.assertEqual(tr.times, tuple(checkpoints))

    def test_mean_becomes_drift(self):
        g = TestDataFactory.create_indicator(8)

        tr = evolve(g, TestDataFactory.create_solver_config(n_modes=8, dt=1e-4, t_end=1e-3))

        self.assertAlmostEqual(tr.mean_drift, 0.5, places=15)
        self.assertEqual(tr.symbol, DispersionSymbol(0, tr.mean_drift))
        for state in tr.states:
            self.assertEqual(state[0], 0j)

    def test_conservation(self):
        g = mollify(TestDataFactory.create_indicator(16), 0.5)
        g, _ = reduce_mean(g)
        g = FourierState(0.5 * g.coeffs, real_symmetric=True)
        for scheme in IntegrationScheme:
            with self.subTest(scheme=scheme):
                cfg = TestDataFactory.create_solver_config(
                    n_modes=16, dt=1e-5, t_end=1e-3, scheme=scheme
                )
                tr = evolve(g, cfg)
                first, last = tr.conserved_log[0], tr.conserved_log[-1]
                self.assertLessEqual(abs(last.l2 - first.l2) / first.l2, 1e-8)
                self.assertLessEqual(
                    abs(last.hamiltonian - first.hamiltonian) / abs(first.hamiltonian), 1e-6
                )
                self.assertEqual(last.mean, 0.0)

    def test_linear_mode_matches_propagator(self):
        g = make_random_data(8, 0.5, seed=5)
        cfg = TestDataFactory.create_solver_config(n_modes=8, dt=1e-3, t_end=0.02)

        tr = evolve(g, cfg, nonlinear=False)

        for part in duhamel_part(tr, g, tr.symbol):
            self.assert_coeffs_close(part, np.zeros(17), atol=1e-10)


class TestLongRun(unittest.TestCase):
    """Smoothed and raw step data on the bands used by the experiments."""

    def test_conservation_of_smoothed_step(self):
        g = mollify(TestDataFactory.create_indicator(256), 0.05)
        cfg = TestDataFactory.create_solver_config(
            n_modes=256, dt=1e-4, t_end=1.0, record_stride=10**6
        )

        tr = evolve(g, cfg)

        first, last = tr.conserved_log[0], tr.conserved_log[-1]
        self.assertEqual(tr.times[-1], 1.0)
        self.assertLessEqual(abs(last.l2 - first.l2) / first.l2, 1e-8)
        self.assertLessEqual(
            abs(last.hamiltonian - first.hamiltonian) / abs(first.hamiltonian), 1e-6
        )

    def test_duhamel_part_is_smoother_than_step_data(self):
        g = TestDataFactory.create_indicator(128)
        cfg = TestDataFactory.create_solver_config(
            n_modes=128, dt=1e-4, t_end=0.5, record_stride=10**6
        )

        tr = evolve(g, cfg)
        duhamel = duhamel_part(tr, g)[-1]

        slope_g = decay_slope(reduce_mean(g)[0], 2, 6).slope
        slope_n = decay_slope(duhamel, 2, 6).slope
        self.assertAlmostEqual(slope_g, -1.0, delta=0.15)
        self.assertGreaterEqual(slope_g - slope_n, 1.5)


class TestConservedQuantities(unittest.TestCase):
    def test_zero_state(self):
        q = conserved_quantities(FourierState.zeros(3), 0)

        self.assertEqual((q.mean, q.l2, q.hamiltonian), (0.0, 0.0, 0.0))

    def test_cosine(self):
        u = TestDataFactory.create_mode(3, 1, 0.5, real=True)

        q = conserved_quantities(u, 0)

        self.assertAlmostEqual(q.l2, 0.5, places=15)
        self.assertAlmostEqual(q.hamiltonian, pi / 2, places=12)

    def test_alpha_enters_the_quadratic_part(self):
        u = TestDataFactory.create_mode(3, 1, 0.5, real=True)

        self.assertAlmostEqual(conserved_quantities(u, 1).hamiltonian, 0.0, places=12)

    def test_hamiltonian_is_a_first_integral_of_the_truncated_flow(self):
        for alpha in (-1, 0, 1):
            with self.subTest(alpha=alpha):
                u = make_random_data(16, 0.8, seed=10 + alpha)
                k = u.wavenumbers.astype(np.float64)
                sym = DispersionSymbol(alpha=alpha)
                velocity = -1j * sym(u.wavenumbers) * u.coeffs + nonlinear_term(u).coeffs
                quadratic = np.real(np.conj(u.coeffs) * (k**4 - alpha * k**2) * velocity)
                cubic = 0.5 * np.real(
                    velocity * np.conj(convolve_coeffs(u.coeffs, u.coeffs, real=True))
                )

                rate = quadratic.sum() + cubic.sum()

                scale = np.abs(quadratic).sum() + np.abs(cubic).sum()
                self.assertGreater(scale, 0.0)
                self.assertLess(abs(rate), 1e-12 * scale)

    def test_complex_state_is_rejected(self):
        with self.assertRaises(ValidationError):
            conserved_quantities(TestDataFactory.create_mode(3, 1), 0)


class TestDuhamelPart(BaseTestCase):
    def test_zero_data(self):
        cfg = TestDataFactory.create_solver_config(n_modes=4)
        g = FourierState.zeros(4)

        parts = duhamel_part(evolve(g, cfg), g, DispersionSymbol())

        for part in parts:
            self.assert_coeffs_close(part, np.zeros(9))

    def test_vanishes_at_time_zero(self):
        g = make_random_data(6, 0.5, seed=6)
        tr = evolve(g, TestDataFactory.create_solver_config(n_modes=6))

        parts = duhamel_part(tr, g, tr.symbol)

        self.assertEqual(len(parts), len(tr.times))
        self.assert_coeffs_close(parts[0], np.zeros(13))
        self.assertGreater(np.max(np.abs(parts[-1].coeffs)), 0.0)

    def test_band_mismatch_is_rejected(self):
        tr = evolve(FourierState.zeros(4), TestDataFactory.create_solver_config(n_modes=4))

        with self.assertRaises(ValidationError):
            duhamel_part(tr, FourierState.zeros(6), DispersionSymbol())

    def test_defaults_to_the_run_symbol(self):
        g = TestDataFactory.create_indicator(8)
        tr = evolve(g, TestDataFactory.create_solver_config(n_modes=8, dt=1e-4, t_end=1e-3))

        implicit = duhamel_part(tr, g)
        explicit = duhamel_part(tr, g, tr.symbol)

        for a, b in zip(implicit, explicit):
            self.assert_coeffs_close(a, b, atol=0.0)

    def test_symbol_mismatch_is_rejected(self):
        g = TestDataFactory.create_indicator(8)
        tr = evolve(g, TestDataFactory.create_solver_config(n_modes=8, dt=1e-4, t_end=1e-3))

        for sym in (DispersionSymbol(), DispersionSymbol(alpha=1, mean_drift=tr.mean_drift)):
            with self.subTest(sym=sym):
                with self.assertRaises(ValidationError):
                    duhamel_part(tr, g, sym)

    def test_initial_mean_must_match_the_run(self):
        g = TestDataFactory.create_indicator(8)
        tr = evolve(g, TestDataFactory.create_solver_config(n_modes=8, dt=1e-4, t_end=1e-3))

        with self.assertRaises(ValidationError):
            duhamel_part(tr, reduce_mean(g)[0])


if __name__ == "__main__":
    unittest.main()
