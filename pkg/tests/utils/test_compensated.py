import unittest
from fractions import Fraction

import numpy as np

from src.kawahara_talbot.utils.compensated import (
    phase_turns,
    symbol_residues,
    two_product,
    unit_phase,
)


def exact_turns(integer_phase: int, tau: float) -> float:
    value = Fraction(integer_phase) * Fraction(tau)
    return float(value - (value.numerator // value.denominator))


class TestTwoProduct(unittest.TestCase):
    def test_product_plus_error_is_exact(self):
        a = np.array([3.0**30, 1.0 / 3.0, 123456789.125, -7.5e10])
        b = 0.1

        p, e = two_product(a, b)

        for a_i, p_i, e_i in zip(a, p, e):
            with self.subTest(a=a_i):
                self.assertEqual(Fraction(a_i) * Fraction(b), Fraction(p_i) + Fraction(e_i))


class TestPhaseTurns(unittest.TestCase):
    def test_matches_rational_arithmetic_for_large_phases(self):
        k = np.array([1, 17, 255, 1024, 3001, 4096], dtype=np.int64)
        phases = k**5 - k**3
        tau = 0.123456789

        turns = phase_turns(phases, tau)

        for phase, value in zip(phases, turns):
            with self.subTest(phase=int(phase)):
                expected = exact_turns(int(phase), tau)
                # distance on the circle of turns
                error = abs((value - expected + 0.5) % 1.0 - 0.5)
                self.assertLess(error, 1e-12)

    def test_negative_phases_land_in_unit_interval(self):
        turns = phase_turns(np.array([-(4000**5)], dtype=np.int64), 0.3)

        self.assertGreaterEqual(turns[0], 0.0)
        self.assertLess(turns[0], 1.0)
        expected = exact_turns(-(4000**5), 0.3)
        self.assertLess(abs((turns[0] - expected + 0.5) % 1.0 - 0.5), 1e-12)

    def test_zero_phase(self):
        self.assertEqual(phase_turns(np.array([0]), 0.7)[0], 0.0)


class TestUnitPhaseAndResidues(unittest.TestCase):
    def test_unit_phase_values(self):
        np.testing.assert_allclose(unit_phase(np.array([0.0, 0.25, 0.5])), [1, 1j, -1], atol=1e-15)

    def test_residues_of_quintic(self):
        # r^5 = r mod 5 and mod 3 (Fermat)
        np.testing.assert_array_equal(symbol_residues(0, 3), [0, 1, 2])
        np.testing.assert_array_equal(symbol_residues(0, 5), [0, 1, 2, 3, 4])

    def test_residues_with_cubic_term(self):
        expected = [(r**5 + r**3) % 7 for r in range(7)]

        np.testing.assert_array_equal(symbol_residues(-1, 7), expected)


if __name__ == "__main__":
    unittest.main()
