import math
import unittest
from unittest.mock import patch

import numpy as np

from entmeas.config import Settings
from entmeas.errors import DimensionMismatch, UnnormalizedTable, WitnessParseError
from entmeas.models import MeasurementAssembly, PreparationFamily, ProbabilityTable, VisibilityModel, WitnessValue
from entmeas.tools.quantum import (
    born_table,
    partial_bsm_ideal,
    partial_bsm_noisy,
    random_povm,
    random_pure_state,
    trigonal_preparations,
    unentangled_povm_pair,
)
from entmeas.tools.witnesses import (
    dump_witness,
    evaluate,
    parse_witness,
    resolve_witness,
    verdict,
    witness_v,
    witness_w,
)


def uniform_table(shape: tuple[int, ...]) -> ProbabilityTable:
    return ProbabilityTable(values=np.full(shape, 1.0 / shape[0]))


def ideal_table() -> ProbabilityTable:
    return born_table(trigonal_preparations("A"), trigonal_preparations("B"), partial_bsm_ideal())


class TestWitnessDefinitions(unittest.TestCase):
    """Tests for the built-in witnesses."""

    def test_witness_w_coefficients(self):
        """Test selected coefficients and the coefficient sum of W."""
        spec = witness_w()
        self.assertEqual(spec.coefficients[0, 0, 0, 0], 1)
        self.assertEqual(spec.coefficients[1, 1, 2, 0], 1)
        self.assertEqual(spec.coefficients[1, 1, 1, 0], -1)
        self.assertTrue(np.all(spec.coefficients[2] == 0))
        self.assertEqual(spec.coefficients.sum(), -6)
        self.assertEqual(spec.bounds["entangled_max"], 1.5)

    def test_witness_v_coefficients(self):
        """Test V puts weight on c=1 only and sums to −6."""
        spec = witness_v()
        self.assertEqual(spec.coefficients[0, 0, 0, 0], 2)
        self.assertEqual(spec.coefficients[0, 2, 1, 1], -1)
        self.assertTrue(np.all(spec.coefficients[1] == 0))
        self.assertEqual(spec.coefficients.sum(), -6)
        self.assertEqual(spec.bounds, {"classical": 2.0, "unentangled": 3.0})


class TestEvaluate(unittest.TestCase):
    """Tests for evaluating witnesses on probability tables."""

    def test_ideal_strategy_reaches_maximum(self):
        """Test W = 3/2 for trigonal states and the ideal partial BSM."""
        self.assertAlmostEqual(evaluate(witness_w(), ideal_table()).value, 1.5, places=12)

    def test_product_pair_reaches_three(self):
        """Test V = 3 for trigonal states and the product-measurement pair."""
        table = born_table(trigonal_preparations("A"), trigonal_preparations("B"), unentangled_povm_pair())
        self.assertAlmostEqual(evaluate(witness_v(), table).value, 3.0, places=12)

    def test_uniform_table(self):
        """Test the uniform table gives −2 for W and −3 for V."""
        self.assertAlmostEqual(evaluate(witness_w(), uniform_table((3, 3, 3, 1))).value, -2.0, places=12)
        self.assertAlmostEqual(evaluate(witness_v(), uniform_table((2, 3, 3, 2))).value, -3.0, places=12)

    def test_white_noise_is_linear(self):
        """Test W = 3V − 3/2 under white noise."""
        alice, bob = trigonal_preparations("A"), trigonal_preparations("B")
        for visibility in np.linspace(0, 1, 20):
            table = born_table(alice, bob, partial_bsm_noisy(VisibilityModel(visibility=visibility)))
            self.assertAlmostEqual(evaluate(witness_w(), table).value, 3 * visibility - 1.5, places=12)

    def test_linearity(self):
        """Test W(λp + (1−λ)q) = λW(p) + (1−λ)W(q)."""
        spec = witness_w()
        p, q = ideal_table(), uniform_table((3, 3, 3, 1))
        for weight in (0.0, 0.3, 0.8, 1.0):
            expected = weight * evaluate(spec, p).value + (1 - weight) * evaluate(spec, q).value
            self.assertAlmostEqual(evaluate(spec, p.mix(q, weight)).value, expected, places=12)

    def test_random_strategies_respect_quantum_maximum(self):
        """Test random qubit strategies never exceed W = 3/2."""
        rng = np.random.default_rng(12)
        spec = witness_w()
        for _ in range(300):
            alice = PreparationFamily(party="A", states=[random_pure_state(rng) for _ in range(3)])
            bob = PreparationFamily(party="B", states=[random_pure_state(rng) for _ in range(3)])
            table = born_table(alice, bob, MeasurementAssembly(settings=[random_povm(rng, 3)]))
            self.assertLessEqual(evaluate(spec, table).value, 1.5 + 1e-9)

    def test_dimension_mismatch(self):
        """Test a table of the wrong shape raises DimensionMismatch."""
        with self.assertRaises(DimensionMismatch):
            evaluate(witness_w(), uniform_table((2, 3, 3, 2)))

    def test_unnormalized_table(self):
        """Test a group that does not sum to one raises UnnormalizedTable."""
        values = np.full((3, 3, 3, 1), 1 / 3)
        values[0, 0, 0, 0] += 1e-6
        with self.assertRaises(UnnormalizedTable):
            evaluate(witness_w(), ProbabilityTable(values=values))


class TestVerdict(unittest.TestCase):
    """Tests for the certification verdict."""

    def test_entangled_certified(self):
        """Test 1.32 ± 0.07 on W excludes every unentangled class at 4.57σ."""
        result = verdict(witness_w(), WitnessValue(value=1.32, witness="w"), 0.07, significance=3.0)
        self.assertEqual(result.strongest_excluded, "unentangled")
        self.assertEqual(result.label, "entangled measurement certified (4.57σ)")
        sigmas = {d.bound_class: d.sigma for d in result.distances}
        self.assertAlmostEqual(sigmas["unentangled"], 0.32 / 0.07, places=9)
        self.assertLess(sigmas["entangled_max"], 0)

    def test_non_classical_certified(self):
        """Test 2.75 ± 0.06 on V is non-classical at 12.5σ but not entangled."""
        result = verdict(witness_v(), WitnessValue(value=2.75, witness="v"), 0.06, significance=3.0)
        self.assertEqual(result.strongest_excluded, "classical")
        self.assertEqual(result.label, "non-classical measurement certified (12.5σ)")

    def test_value_at_bound_is_inconclusive(self):
        """Test a value equal to the bound with zero error is inconclusive."""
        result = verdict(witness_w(), WitnessValue(value=1.0, witness="w"), 0.0, significance=3.0)
        self.assertIsNone(result.strongest_excluded)
        self.assertEqual(result.label, "inconclusive")
        self.assertEqual(result.distances[0].sigma, 0.0)

    def test_zero_stderr_above_bound(self):
        """Test zero error above a bound gives an infinite distance."""
        result = verdict(witness_w(), WitnessValue(value=1.2, witness="w"), 0.0, significance=3.0)
        self.assertTrue(math.isinf(result.distances[0].sigma))
        self.assertEqual(result.label, "entangled measurement certified (infσ)")

    def test_significance_from_settings(self):
        """Test the default significance comes from the configured settings."""
        with patch("entmeas.tools.witnesses.get_settings", return_value=Settings(significance=5.0)):
            result = verdict(witness_w(), WitnessValue(value=1.32, witness="w"), 0.07)
        self.assertEqual(result.significance, 5.0)
        self.assertIsNone(result.strongest_excluded)

    def test_negative_stderr_rejected(self):
        """Test a negative standard error is rejected."""
        with self.assertRaises(ValueError):
            verdict(witness_w(), WitnessValue(value=1.0, witness="w"), -0.1)


class TestWitnessFiles(unittest.TestCase):
    """Tests for the JSON witness format."""

    def test_dump_and_parse(self):
        """Test a dumped witness parses back to the same coefficients and bounds."""
        spec = witness_w()
        parsed = parse_witness(dump_witness(spec))
        np.testing.assert_array_equal(parsed.coefficients, spec.coefficients)
        self.assertEqual(parsed.bounds, spec.bounds)
        self.assertEqual(parsed.name, "w")

    def test_malformed_json_reports_location(self):
        """Test a JSON syntax error carries line and column."""
        with self.assertRaises(WitnessParseError) as ctx:
            parse_witness('{\n  "name": "w",\n  "dims": {,\n}')
        self.assertEqual(ctx.exception.line, 3)
        self.assertIsNotNone(ctx.exception.column)
        self.assertIn("line 3", str(ctx.exception))

    def test_schema_error_names_field(self):
        """Test a schema error names the failing field."""
        with self.assertRaises(WitnessParseError) as ctx:
            parse_witness('{"name": "w", "dims": {"nx": 3, "ny": 3, "nz": 1}}')
        self.assertIn("dims.nc", str(ctx.exception))

    def test_coefficient_outside_dims(self):
        """Test a coefficient index beyond the dims is rejected."""
        text = (
            '{"name": "t", "dims": {"nx": 1, "ny": 1, "nz": 1, "nc": 2},'
            ' "coefficients": [{"c": 3, "x": 0, "y": 0, "value": 1.0}]}'
        )
        with self.assertRaises(WitnessParseError):
            parse_witness(text)

    def test_non_monotone_bounds(self):
        """Test bounds that decrease along the class order are rejected."""
        text = '{"name": "t", "dims": {"nx": 1, "ny": 1, "nz": 1, "nc": 2}, "bounds": {"classical": 2, "locc": 1}}'
        with self.assertRaises(WitnessParseError):
            parse_witness(text)

    def test_resolve_builtin_and_unknown(self):
        """Test built-in names resolve and unknown names raise WitnessParseError."""
        self.assertEqual(resolve_witness("v").name, "v")
        with self.assertRaises(WitnessParseError):
            resolve_witness("no-such-witness")


if __name__ == "__main__":
    unittest.main()
