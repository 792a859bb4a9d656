import unittest

from src.kawahara_talbot.domain.exceptions import (
    ConfigurationError,
    ExperimentStageError,
    KawaharaError,
    NumericalInstabilityError,
    StorageError,
    ValidationError,
)


class TestExceptions(unittest.TestCase):
    def test_kawahara_error_is_base_exception(self):
        exception = KawaharaError("test message")
        self.assertIsInstance(exception, Exception)
        self.assertEqual(str(exception), "test message")

    def test_specific_errors_inherit_from_kawahara_error(self):
        for error_type in (
            ValidationError,
            ConfigurationError,
            NumericalInstabilityError,
            StorageError,
        ):
            with self.subTest(error_type=error_type.__name__):
                exception = error_type("boom")
                self.assertIsInstance(exception, KawaharaError)
                self.assertEqual(str(exception), "boom")

    def test_stage_error_carries_stage_and_cause(self):
        cause = NumericalInstabilityError("sup norm exploded")
        exception = ExperimentStageError("evolve", cause)

        self.assertIsInstance(exception, KawaharaError)
        self.assertEqual(exception.stage, "evolve")
        self.assertIs(exception.cause, cause)
        self.assertEqual(str(exception), "[evolve] sup norm exploded")

    def test_exceptions_can_be_raised_and_caught(self):
        with self.assertRaises(KawaharaError):
            raise ValidationError("bad band")

        with self.assertRaises(ExperimentStageError) as context:
            raise ExperimentStageError("config", ConfigurationError("no times"))
        self.assertIsInstance(context.exception.cause, ConfigurationError)


if __name__ == "__main__":
    unittest.main()
