import tempfile
import unittest
from pathlib import Path

import numpy as np

from entmeas.errors import CountsParseError, DimensionMismatch, RatioOutOfRange
from entmeas.models import CountTable, ProbabilityTable, SplittingRatios, VisibilityModel
from entmeas.tools.quantum import born_table, partial_bsm_noisy, trigonal_preparations, unentangled_povm_pair
from entmeas.tools.simulate import (
    MEASURED_PREPARATIONS,
    apply_splitting_correction,
    bootstrap_stderr,
    characterization_rows,
    crossing_visibility,
    estimate,
    lab_families,
    load_counts,
    prep_characterization,
    sample_counts,
    save_counts,
    sidecar_path,
    visibility_sweep,
)
from entmeas.tools.witnesses import evaluate, witness_v, witness_w


def noisy_table(visibility: float) -> ProbabilityTable:
    model = VisibilityModel(visibility=visibility)
    return born_table(trigonal_preparations("A"), trigonal_preparations("B"), partial_bsm_noisy(model))


class TestSampling(unittest.TestCase):
    """Tests for multinomial count sampling."""

    def test_deterministic_table(self):
        """Test a deterministic table puts every event on the forced outcome."""
        values = np.zeros((3, 2, 2, 1))
        values[1] = 1.0
        counts = sample_counts(ProbabilityTable(values=values), 500, seed=1)
        np.testing.assert_array_equal(counts.counts[1], np.full((2, 2, 1), 500))
        self.assertEqual(counts.counts[0].sum() + counts.counts[2].sum(), 0)

    def test_frequencies_converge(self):
        """Test p = (1/2, 1/2, 0) with 10⁶ shots lands within 0.002 of the probabilities."""
        values = np.zeros((3, 1, 1, 1))
        values[:2] = 0.5
        counts = sample_counts(ProbabilityTable(values=values), 1_000_000, seed=3)
        np.testing.assert_allclose(counts.frequencies[:, 0, 0, 0], [0.5, 0.5, 0.0], atol=0.002)

    def test_same_seed_same_counts(self):
        """Test equal seeds give identical counts and different seeds do not."""
        table = noisy_table(0.9)
        first = sample_counts(table, 10_000, seed=42)
        second = sample_counts(table, 10_000, seed=42)
        third = sample_counts(table, 10_000, seed=43)
        np.testing.assert_array_equal(first.counts, second.counts)
        self.assertFalse(np.array_equal(first.counts, third.counts))
        self.assertEqual(first.provenance["seed"], 42)

    def test_rejects_zero_shots(self):
        """Test fewer than one shot is rejected."""
        with self.assertRaises(ValueError):
            sample_counts(noisy_table(1.0), 0, seed=1)

    def test_expected_counts(self):
        """Test expected counts keep every group at N with exact weights."""
        counts = CountTable.expected(noisy_table(0.9433), 10_001)
        self.assertTrue(np.all(counts.counts.sum(axis=0) == 10_001))
        np.testing.assert_allclose(counts.weights, noisy_table(0.9433).values * 10_001, atol=1e-9)


class TestEstimate(unittest.TestCase):
    """Tests for the witness estimator and its error bars."""

    def test_exact_frequencies_reproduce_evaluate(self):
        """Test expected counts give the exact witness value."""
        table = noisy_table(0.9433)
        value, _ = estimate(witness_w(), CountTable.expected(table, 10_000))
        self.assertAlmostEqual(value, evaluate(witness_w(), table).value, places=12)

    def test_stderr_scales_with_shots(self):
        """Test the standard error shrinks by 10 when N grows by 100."""
        table = noisy_table(0.9433)
        _, small = estimate(witness_w(), CountTable.expected(table, 10_000))
        _, large = estimate(witness_w(), CountTable.expected(table, 1_000_000))
        self.assertAlmostEqual(small / large, 10.0, places=9)

    def test_stderr_vanishes_for_large_samples(self):
        """Test the standard error is below 1e-5 at N = 10¹²."""
        _, stderr = estimate(witness_w(), CountTable.expected(noisy_table(0.9433), 10**12))
        self.assertLess(stderr, 1e-5)

    def test_deterministic_counts_have_zero_error(self):
        """Test counts concentrated on single outcomes have zero standard error."""
        values = np.zeros((3, 3, 3, 1))
        values[2] = 1.0
        counts = CountTable(counts=(values * 100).astype(int), shots_per_setting=100)
        self.assertEqual(estimate(witness_w(), counts), (0.0, 0.0))

    def test_error_calibration(self):
        """Test 3σ intervals cover the true value in at least 98% of 300 simulated runs."""
        table = noisy_table(0.9433)
        truth = evaluate(witness_w(), table).value
        self.assertAlmostEqual(truth, 3 * 0.9433 - 1.5, places=12)
        covered = 0
        for seed in range(300):
            value, stderr = estimate(witness_w(), sample_counts(table, 10_000, seed=seed))
            covered += abs(value - truth) <= 3 * stderr
        self.assertGreaterEqual(covered, 294)

    def test_propagated_matches_empirical_spread(self):
        """Test the propagated stderr matches the spread over 1000 simulated runs within 10%."""
        table = noisy_table(0.9433)
        values = [estimate(witness_w(), sample_counts(table, 10_000, seed=seed))[0] for seed in range(1000)]
        _, stderr = estimate(witness_w(), CountTable.expected(table, 10_000))
        self.assertAlmostEqual(float(np.std(values, ddof=1)) / stderr, 1.0, delta=0.1)

    def test_bootstrap_agrees(self):
        """Test the bootstrap standard error agrees with propagation within 10%."""
        counts = sample_counts(noisy_table(0.9433), 10_000, seed=5)
        _, stderr = estimate(witness_w(), counts)
        self.assertAlmostEqual(bootstrap_stderr(witness_w(), counts, resamples=1000, seed=2) / stderr, 1.0, delta=0.1)

    def test_dimension_mismatch(self):
        """Test counts for one witness cannot be estimated with another."""
        counts = CountTable.expected(noisy_table(1.0), 100)
        with self.assertRaises(DimensionMismatch):
            estimate(witness_v(), counts)


class TestSplittingCorrection(unittest.TestCase):
    """Tests for the bunched-pair splitting correction."""

    def setUp(self):
        counts = np.zeros((3, 1, 1, 1), dtype=int)
        counts[:, 0, 0, 0] = [40, 30, 30]
        self.counts = CountTable(counts=counts, shots_per_setting=100)

    def test_unit_ratio_is_identity(self):
        """Test r = 1 leaves the frequencies unchanged."""
        corrected = apply_splitting_correction(self.counts, SplittingRatios(ratios={"D3": 1.0}), {3: "D3"})
        np.testing.assert_allclose(corrected.frequencies, self.counts.frequencies, atol=1e-15)
        np.testing.assert_array_equal(corrected.counts, self.counts.counts)

    def test_half_ratio_doubles_outcome(self):
        """Test r = 0.5 doubles the mapped outcome before renormalizing."""
        corrected = apply_splitting_correction(self.counts, SplittingRatios(ratios={"D3": 0.5}), {3: "D3"})
        np.testing.assert_allclose(corrected.weights[:, 0, 0, 0], [40, 30, 60] / np.float64(130) * 100)
        self.assertEqual(corrected.mapping, {3: "D3"})

    def test_zero_counts_stay_zero(self):
        """Test an outcome with no counts stays at zero."""
        counts = np.zeros((3, 1, 1, 1), dtype=int)
        counts[:, 0, 0, 0] = [50, 50, 0]
        table = CountTable(counts=counts, shots_per_setting=100)
        corrected = apply_splitting_correction(table, SplittingRatios(ratios={"D3": 0.5}), {3: "D3"})
        self.assertEqual(corrected.weights[2, 0, 0, 0], 0.0)

    def test_ratio_out_of_range(self):
        """Test ratios of 0 or above 1, and missing labels, are rejected."""
        for ratio in (0.0, 1.5):
            with self.assertRaises(RatioOutOfRange):
                apply_splitting_correction(self.counts, SplittingRatios(ratios={"D3": ratio}), {3: "D3"})
        with self.assertRaises(RatioOutOfRange):
            apply_splitting_correction(self.counts, SplittingRatios(ratios={}), {3: "D3"})


class TestVisibilitySweep(unittest.TestCase):
    """Tests for exact visibility sweeps."""

    def test_witness_w_white(self):
        """Test W = 3V − 3/2 with the classical bound crossed at V = 5/6."""
        grid = list(np.linspace(0, 1, 20))
        points = visibility_sweep(witness_w(), grid)
        for visibility, value in points:
            self.assertAlmostEqual(value, 3 * visibility - 1.5, places=12)
        self.assertAlmostEqual(visibility_sweep(witness_w(), [5 / 6])[0][1], 1.0, places=12)
        self.assertAlmostEqual(visibility_sweep(witness_w(), [0.9])[0][1], 1.2, places=12)
        self.assertAlmostEqual(crossing_visibility(points, 1.0), 5 / 6, places=9)

    def test_witness_w_dephasing(self):
        """Test W = 3V/2 under dephasing."""
        for visibility, value in visibility_sweep(witness_w(), [0.0, 0.5, 1.0], kind="dephasing"):
            self.assertAlmostEqual(value, 1.5 * visibility, places=12)

    def test_witness_v(self):
        """Test V = 9V/2 − 3/2 under white noise and 3/2 + 3V/2 under dephasing."""
        points = visibility_sweep(witness_v(), list(np.linspace(0, 1, 11)))
        for visibility, value in points:
            self.assertAlmostEqual(value, 4.5 * visibility - 1.5, places=12)
        self.assertAlmostEqual(crossing_visibility(points, 2.0), 7 / 9, places=9)
        for visibility, value in visibility_sweep(witness_v(), [0.0, 1.0], kind="dephasing"):
            self.assertAlmostEqual(value, 1.5 + 1.5 * visibility, places=12)

    def test_no_crossing(self):
        """Test a bound above every value is never crossed."""
        self.assertIsNone(crossing_visibility(visibility_sweep(witness_w(), [0.0, 1.0]), 2.0))


class TestPreparationCharacterization(unittest.TestCase):
    """Tests for the H/V characterization of prepared states."""

    def test_theory_values(self):
        """Test Alice's trigonal states and Bob's relabelled ones in the H/V basis."""
        alice, bob = lab_families()
        expected_a = [(1.0, 0.0), (0.25, 0.75), (0.25, 0.75)]
        expected_b = [(0.0, 1.0), (0.75, 0.25), (0.75, 0.25)]
        for got, want in zip(prep_characterization(alice), expected_a, strict=True):
            np.testing.assert_allclose(got, want, atol=1e-12)
        for got, want in zip(prep_characterization(bob), expected_b, strict=True):
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_measured_values_agree(self):
        """Test the laboratory characterization lies within 0.01 of theory."""
        alice, bob = lab_families()
        rows = characterization_rows(alice) + characterization_rows(bob)
        self.assertEqual([row.label for row in rows], list(MEASURED_PREPARATIONS))
        for row in rows:
            self.assertLessEqual(row.deviation, 0.01)

    def test_rows_without_measurements(self):
        """Test rows without laboratory data have no deviation."""
        rows = characterization_rows(trigonal_preparations("A"), measured={})
        self.assertIsNone(rows[0].measured_h)
        self.assertIsNone(rows[0].deviation)


class TestCountFiles(unittest.TestCase):
    """Tests for the counts CSV and its sidecar."""

    def test_save_and_load(self):
        """Test counts, corrections and provenance survive a save and load."""
        counts = sample_counts(noisy_table(0.9), 1_000, seed=8)
        counts = apply_splitting_correction(counts, SplittingRatios(ratios={"D3": 0.8}), {3: "D3"})
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "counts.csv"
            sidecar = save_counts(counts, path)
            self.assertEqual(sidecar, sidecar_path(path))
            self.assertEqual(path.read_text().splitlines()[0], "z,x,y,c,count")
            loaded = load_counts(path)
        np.testing.assert_array_equal(loaded.counts, counts.counts)
        np.testing.assert_allclose(loaded.weights, counts.weights)
        self.assertEqual(loaded.mapping, {3: "D3"})
        self.assertEqual(loaded.provenance["seed"], 8)

    def test_rows_follow_header_order(self):
        """Test every written row holds the count of its own (z, x, y, c) cell, for both witness shapes."""
        product = born_table(trigonal_preparations("A"), trigonal_preparations("B"), unentangled_povm_pair())
        for table in (noisy_table(0.8), product):
            counts = sample_counts(table, 500, seed=3)
            with tempfile.TemporaryDirectory() as tmp:
                path = Path(tmp) / "counts.csv"
                save_counts(counts, path)
                rows = path.read_text().splitlines()[1:]
                loaded = load_counts(path)
            self.assertEqual(len(rows), counts.counts.size)
            for row in rows:
                z, x, y, c, count = (int(cell) for cell in row.split(","))
                self.assertEqual(counts.counts[c - 1, x, y, z], count)
            np.testing.assert_array_equal(loaded.counts, counts.counts)

    def test_non_integer_cells(self):
        """Test a non-numeric index or a fractional count is a parse error, not a truncation."""
        counts = CountTable.expected(noisy_table(1.0), 10)
        for body in ("0,0,0,one,5\n", "0,0,0,1,2.5\n", "0,0,0,1,\n"):
            with tempfile.TemporaryDirectory() as tmp:
                path = Path(tmp) / "counts.csv"
                save_counts(counts, path)
                path.write_text("z,x,y,c,count\n" + body)
                with self.assertRaises(CountsParseError) as ctx:
                    load_counts(path)
            self.assertIn("line 2", str(ctx.exception))

    def test_missing_sidecar(self):
        """Test a CSV without its sidecar is rejected."""
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "counts.csv"
            path.write_text("z,x,y,c,count\n0,0,0,1,5\n")
            with self.assertRaises(CountsParseError):
                load_counts(path)

    def test_missing_column(self):
        """Test a CSV lacking the count column is rejected."""
        counts = CountTable.expected(noisy_table(1.0), 10)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "counts.csv"
            save_counts(counts, path)
            path.write_text("z,x,y,c\n0,0,0,1\n")
            with self.assertRaises(CountsParseError):
                load_counts(path)

    def test_index_outside_dims(self):
        """Test an outcome index beyond the sidecar dims is rejected."""
        counts = CountTable.expected(noisy_table(1.0), 10)
        with tempfile.TemporaryDirectory() as tmp:
            path = Path(tmp) / "counts.csv"
            save_counts(counts, path)
            path.write_text("z,x,y,c,count\n0,0,0,4,10\n")
            with self.assertRaises(CountsParseError):
                load_counts(path)


if __name__ == "__main__":
    unittest.main()
