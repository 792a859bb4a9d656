import unittest
from math import pi

import numpy as np

from src.kawahara_talbot.domain.exceptions import ValidationError
from src.kawahara_talbot.domain.models import InitialKind, StepFunctionSpec
from src.kawahara_talbot.services.analysis import decay_slope
from src.kawahara_talbot.services.initial_data import (
    build_initial_data,
    make_random_data,
    make_sobolev_data,
    make_step_function,
    mollify,
    parse_initial_spec,
)
from src.kawahara_talbot.services.spectral_core import sobolev_norm
from tests.utils.test_helpers import BaseTestCase


class TestStepFunction(BaseTestCase):
    def test_indicator_closed_form(self):
        u = make_step_function(StepFunctionSpec.from_pi_multiples((0.0, 1.0)), 16)

        self.assertAlmostEqual(u[0].real, 0.5, places=15)
        for k in range(1, 17):
            expected = 1.0 / (pi * 1j * k) if k % 2 else 0.0
            with self.subTest(k=k):
                self.assertLess(abs(u[k] - expected), 1e-15)
                self.assertLess(abs(u[-k] - np.conj(expected)), 1e-15)

    def test_half_period_symmetry_kills_even_modes(self):
        spec = StepFunctionSpec.from_pi_multiples((0.5, 1.5), (2.0, -1.0))

        u = make_step_function(spec, 32)

        even = u.coeffs[32 + np.arange(2, 33, 2)]
        np.testing.assert_allclose(even, 0.0, atol=1e-15)

    def test_mean_is_weighted_by_interval_lengths(self):
        spec = StepFunctionSpec.from_pi_multiples((0.0, 0.5), (4.0, 0.0))

        u = make_step_function(spec, 4)

        self.assertAlmostEqual(u[0].real, 1.0, places=15)

    def test_flat_data_is_rejected(self):
        spec = StepFunctionSpec.from_pi_multiples((0.0, 1.0), (1.0, 1.0))

        with self.assertRaises(ValidationError):
            make_step_function(spec, 8)


class TestSobolevData(unittest.TestCase):
    def test_decay_recovers_sigma0(self):
        u = make_sobolev_data(0.5, seed=3, n_modes=256)

        fit = decay_slope(u, 3, 7)

        self.assertAlmostEqual(fit.sigma0, 0.5, delta=0.05)

    def test_single_mode(self):
        u = make_sobolev_data(0.5, seed=0, n_modes=1)

        self.assertEqual(u.n_modes, 1)
        self.assertAlmostEqual(abs(u[1]), 1.0, places=15)
        self.assertEqual(u[0], 0j)

    def test_same_seed_gives_same_state(self):
        first = make_sobolev_data(0.5, seed=9, n_modes=32)
        second = make_sobolev_data(0.5, seed=9, n_modes=32)
        other = make_sobolev_data(0.5, seed=10, n_modes=32)

        np.testing.assert_array_equal(first.coeffs, second.coeffs)
        self.assertFalse(np.array_equal(first.coeffs, other.coeffs))

    def test_exploratory_exponent_warns(self):
        with self.assertLogs("src.kawahara_talbot.services.initial_data", level="WARNING"):
            make_sobolev_data(1.0, seed=0, n_modes=8)


class TestRandomData(unittest.TestCase):
    def test_scaled_to_requested_norm(self):
        u = make_random_data(16, 0.7, seed=2)

        self.assertAlmostEqual(sobolev_norm(u, 1.0), 0.7, places=12)
        self.assertTrue(u.real_symmetric)
        self.assertTrue(u.is_mean_zero)


class TestMollify(BaseTestCase):
    def test_zero_width_is_identity(self):
        u = make_sobolev_data(0.5, seed=1, n_modes=8)

        self.assert_coeffs_close(mollify(u, 0.0), u)

    def test_damps_high_modes(self):
        u = make_sobolev_data(0.5, seed=1, n_modes=64)

        smooth = mollify(u, 0.1)

        self.assertLess(abs(smooth[64]), 1e-8 * abs(u[64]))
        self.assertAlmostEqual(abs(smooth[1]), abs(u[1]) * np.exp(-0.005), places=14)

    def test_negative_width_is_rejected(self):
        with self.assertRaises(ValidationError):
            mollify(make_sobolev_data(0.5, seed=1, n_modes=4), -0.1)


class TestBuildInitialData(BaseTestCase):
    def test_dispatch_by_kind(self):
        step = build_initial_data(InitialKind.STEP, 8)
        smooth = build_initial_data("smooth_step", 8, width=0.1)
        sobolev = build_initial_data(InitialKind.SOBOLEV, 8, seed=4)
        random = build_initial_data(InitialKind.RANDOM, 8, h1_norm=0.3, seed=4)

        self.assert_coeffs_close(smooth, mollify(step, 0.1))
        self.assert_coeffs_close(sobolev, make_sobolev_data(0.5, 4, 8))
        self.assert_coeffs_close(random, make_random_data(8, 0.3, 4))

    def test_unknown_kind_is_rejected(self):
        with self.assertRaises(ValueError):
            build_initial_data("triangle", 8)


class TestParseInitialSpec(unittest.TestCase):
    def test_kind_only(self):
        self.assertEqual(parse_initial_spec("random"), (InitialKind.RANDOM, {}))

    def test_options(self):
        kind, options = parse_initial_spec("step:jumps=0,0.5,1; values=1,-1,0 ;seed=3")

        self.assertEqual(kind, InitialKind.STEP)
        self.assertEqual(options, {"jumps": (0.0, 0.5, 1.0), "values": (1.0, -1.0, 0.0), "seed": 3})

    def test_errors(self):
        for text in ("triangle", "step:height=2", "sobolev:sigma0=abc", "step:jumps"):
            with self.subTest(text=text):
                with self.assertRaises(ValidationError):
                    parse_initial_spec(text)


if __name__ == "__main__":
    unittest.main()
