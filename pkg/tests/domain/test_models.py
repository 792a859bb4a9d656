import dataclasses
import unittest
from math import pi

import numpy as np

from src.kawahara_talbot.domain.exceptions import ConfigurationError, ValidationError
from src.kawahara_talbot.domain.models import (
    ConservedQuantities,
    DispersionSymbol,
    FourierState,
    IntegrationScheme,
    RationalTime,
    RealGridFunction,
    ResonanceFactor,
    SolverConfig,
    StepFunctionSpec,
    TimeClassification,
    TimeKind,
    Trajectory,
    TranslateDecomposition,
    hermitian_extend,
    interaction_phase,
    is_hermitian,
    resonance_theta,
)
from tests.utils.test_helpers import BaseTestCase, TestDataFactory


class TestFourierState(BaseTestCase):
    def test_zeros_has_full_band(self):
        state = FourierState.zeros(4)

        self.assertEqual(state.n_modes, 4)
        self.assertEqual(state.coeffs.size, 9)
        self.assertTrue(state.real_symmetric)
        self.assertTrue(state.is_mean_zero)

    def test_from_modes_fills_conjugates_when_real(self):
        state = FourierState.from_modes(3, {2: 1 + 2j}, real_symmetric=True)

        self.assertEqual(state[2], 1 + 2j)
        self.assertEqual(state[-2], 1 - 2j)
        self.assertEqual(state[0], 0j)

    def test_from_modes_rejects_modes_outside_band(self):
        with self.assertRaises(ValidationError):
            FourierState.from_modes(2, {3: 1.0})

    def test_getitem_is_zero_outside_band(self):
        state = TestDataFactory.create_mode(2, 1)

        self.assertEqual(state[5], 0j)
        self.assertEqual(state[-7], 0j)

    def test_rejects_even_length_arrays(self):
        with self.assertRaises(ValidationError):
            FourierState(np.zeros(4))

    def test_rejects_non_finite_coefficients(self):
        coeffs = np.zeros(5, dtype=complex)
        coeffs[1] = np.nan
        with self.assertRaises(ValidationError):
            FourierState(coeffs)

    def test_real_flag_requires_hermitian_symmetry(self):
        coeffs = np.zeros(5, dtype=complex)
        coeffs[3] = 1.0
        with self.assertRaises(ValidationError):
            FourierState(coeffs, real_symmetric=True)

    def test_coefficients_are_read_only(self):
        state = FourierState.zeros(2)

        with self.assertRaises(ValueError):
            state.coeffs[0] = 1.0

    def test_state_is_immutable(self):
        state = FourierState.zeros(2)

        with self.assertRaises(dataclasses.FrozenInstanceError):
            state.real_symmetric = False  # type: ignore

    def test_resized_truncates_and_pads(self):
        state = TestDataFactory.create_random_state(4, seed=1)

        smaller = state.resized(2)
        larger = state.resized(6)

        self.assertEqual(smaller.n_modes, 2)
        self.assertEqual(smaller[2], state[2])
        self.assertEqual(larger[4], state[4])
        self.assertEqual(larger[6], 0j)
        self.assertTrue(larger.real_symmetric)

    def test_with_coeffs_resymmetrizes_real_states(self):
        state = FourierState.zeros(2)
        coeffs = np.array([0, 0, 0.5, 1 + 1j, 2j])

        updated = state.with_coeffs(coeffs)

        self.assertTrue(is_hermitian(updated.coeffs))
        self.assertEqual(updated[-1], 1 - 1j)
        self.assertEqual(updated[-2], -2j)


class TestHermitianHelpers(unittest.TestCase):
    def test_extend_builds_negative_half(self):
        coeffs = np.array([9, 9, 1 + 1j, 2 + 3j, 4j])

        extended = hermitian_extend(coeffs)

        self.assertTrue(is_hermitian(extended))
        self.assertEqual(extended[0], -4j)
        self.assertEqual(extended[1], 2 - 3j)
        self.assertEqual(extended[2], 1.0)

    def test_imaginary_mean_is_not_hermitian(self):
        self.assertFalse(is_hermitian(np.array([0, 1j, 0])))


class TestRealGridFunction(unittest.TestCase):
    def test_from_callable_samples_uniform_grid(self):
        f = RealGridFunction.from_callable(np.cos, 8)

        self.assertEqual(f.n_points, 8)
        np.testing.assert_allclose(f.samples, np.cos(2 * pi * np.arange(8) / 8))
        self.assertFalse(f.imaginary_dropped)

    def test_rejects_non_finite_samples(self):
        with self.assertRaises(ValidationError):
            RealGridFunction(np.array([0.0, np.inf]))


class TestDispersionSymbol(unittest.TestCase):
    def test_symbol_values(self):
        sym = DispersionSymbol(alpha=1, mean_drift=0.5)

        self.assertEqual(int(sym.integer_part(2)), 32 - 8)
        self.assertAlmostEqual(float(sym(2)), 25.0)
        self.assertEqual(float(sym(0)), 0.0)

    def test_rejects_unknown_alpha(self):
        for alpha in (2, True):
            with self.subTest(alpha=alpha):
                with self.assertRaises(ValidationError):
                    DispersionSymbol(alpha=alpha)

    def test_integer_part_rejects_overflowing_wavenumbers(self):
        with self.assertRaises(ValidationError):
            DispersionSymbol().integer_part(5000)


class TestRationalTime(unittest.TestCase):
    def test_reduced_normalizes_sign_and_gcd(self):
        rt = RationalTime.reduced(-4, -6)

        self.assertEqual((rt.p, rt.q), (2, 3))
        self.assertAlmostEqual(rt.value, 4 * pi / 3)
        self.assertAlmostEqual(rt.turns, 2 / 3)

    def test_constructor_rejects_unreduced_fractions(self):
        with self.assertRaises(ValidationError):
            RationalTime(2, 4)

    def test_zero_denominator_is_rejected(self):
        with self.assertRaises(ValidationError):
            RationalTime.reduced(1, 0)

    def test_pi_multiple_doubles_denominator(self):
        rt = RationalTime.from_pi_multiple(1, 3)

        self.assertEqual((rt.p, rt.q), (1, 6))
        self.assertAlmostEqual(rt.value, pi / 3)


class TestTranslateDecomposition(unittest.TestCase):
    def test_requires_q_coefficients(self):
        with self.assertRaises(ValidationError):
            TranslateDecomposition(q=3, coeffs=np.ones(2))


class TestTimeClassification(unittest.TestCase):
    def test_factories(self):
        rational = TimeClassification.rational(1, 3)
        irrational = TimeClassification.irrational()

        self.assertTrue(rational.is_rational)
        self.assertEqual(rational.kind, TimeKind.RATIONAL)
        self.assertFalse(irrational.is_rational)
        self.assertIsNone(irrational.q)


class TestSolverConfig(unittest.TestCase):
    def test_valid_config_passes(self):
        TestDataFactory.create_solver_config().validate()

    def test_invalid_values_are_rejected(self):
        for overrides in (
            {"n_modes": 0},
            {"dt": 0.0},
            {"t_end": -1.0},
            {"alpha": 3},
            {"record_stride": 0},
        ):
            with self.subTest(overrides=overrides):
                with self.assertRaises(ConfigurationError):
                    TestDataFactory.create_solver_config(**overrides).validate()

    def test_normal_form_is_the_default_scheme(self):
        self.assertEqual(TestDataFactory.create_solver_config().scheme, IntegrationScheme.NORMAL_FORM)

    def test_as_dict_uses_plain_values(self):
        cfg = TestDataFactory.create_solver_config(scheme=IntegrationScheme.IFRK4)

        data = cfg.as_dict()

        self.assertEqual(data["scheme"], "ifrk4")
        self.assertEqual(SolverConfig(**{**data, "scheme": IntegrationScheme(data["scheme"])}), cfg)


class TestTrajectory(unittest.TestCase):
    def setUp(self):
        self.cfg = TestDataFactory.create_solver_config(n_modes=2)
        self.state = FourierState.zeros(2)
        self.log = ConservedQuantities(0.0, 0.0, 0.0)

    def test_properties(self):
        tr = Trajectory(self.cfg, (0.0, 0.1), (self.state, self.state), (self.log, self.log), 0.25)

        self.assertEqual(tr.n_modes, 2)
        self.assertIs(tr.final_state, self.state)
        self.assertEqual(tr.symbol, DispersionSymbol(0, 0.25))

    def test_rejects_mismatched_lengths(self):
        with self.assertRaises(ValidationError):
            Trajectory(self.cfg, (0.0, 0.1), (self.state,), (self.log,))

    def test_rejects_non_increasing_times(self):
        with self.assertRaises(ValidationError):
            Trajectory(self.cfg, (0.0, 0.0), (self.state,) * 2, (self.log,) * 2)

    def test_must_start_at_zero(self):
        with self.assertRaises(ValidationError):
            Trajectory(self.cfg, (0.1,), (self.state,), (self.log,))


class TestResonanceFactor(unittest.TestCase):
    def test_phase_factorizes_symbol_difference(self):
        sym = DispersionSymbol(alpha=1)
        k1, k2, k3 = 3, -1, 2
        k = k1 + k2 + k3
        expected = sym.integer_part(k) - sum(sym.integer_part(x) for x in (k1, k2, k3))

        factor = ResonanceFactor.of(k1, k2, k3, alpha=1)

        self.assertEqual(interaction_phase(k1, k2, k3, alpha=1), int(expected))
        self.assertEqual(factor.theta, resonance_theta(k1, k2, k3, alpha=1))
        self.assertFalse(factor.is_resonant)

    def test_phase_on_arrays(self):
        ks = np.arange(-6, 7, dtype=np.int64)
        k1, k2, k3 = np.meshgrid(ks, ks, ks, indexing="ij")
        for alpha in (-1, 0, 1):
            with self.subTest(alpha=alpha):
                sym = DispersionSymbol(alpha=alpha)
                expected = (
                    sym.integer_part(k1 + k2 + k3)
                    - sym.integer_part(k1)
                    - sym.integer_part(k2)
                    - sym.integer_part(k3)
                )

                np.testing.assert_array_equal(interaction_phase(k1, k2, k3, alpha), expected)

    def test_resonant_when_a_pair_cancels(self):
        self.assertTrue(ResonanceFactor.of(2, -2, 5, alpha=0).is_resonant)


class TestStepFunctionSpec(unittest.TestCase):
    def test_default_values_alternate(self):
        spec = StepFunctionSpec.from_pi_multiples((0.0, 1.0))

        self.assertEqual(spec.values, (1.0, 0.0))
        self.assertEqual(spec.jump_count, 2)
        np.testing.assert_allclose(spec.jump_heights, [1.0, -1.0])

    def test_evaluate_is_periodic(self):
        spec = StepFunctionSpec.from_pi_multiples((0.0, 1.0))

        values = spec.evaluate(np.array([0.5, 4.0, 2 * pi + 0.5, -0.5]))

        np.testing.assert_array_equal(values, [1.0, 0.0, 1.0, 0.0])

    def test_validation(self):
        for jumps, values in (
            ((), ()),
            ((0.0, 1.0), (1.0,)),
            ((1.0, 0.5), (1.0, 0.0)),
            ((0.0, 7.0), (1.0, 0.0)),
        ):
            with self.subTest(jumps=jumps):
                with self.assertRaises(ValidationError):
                    StepFunctionSpec(jumps, values)


if __name__ == "__main__":
    unittest.main()
