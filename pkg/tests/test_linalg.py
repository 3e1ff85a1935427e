import unittest
from unittest.mock import patch

import numpy as np

from entmeas.config import Settings, get_settings, settings_override
from entmeas.errors import NotHermitian, NotPSD, WrongDimension
from entmeas.tools.linalg import (
    check_hermitian,
    eig_hermitian,
    eigvals_hermitian,
    is_psd,
    kron,
    partial_trace_a,
    partial_trace_b,
    partial_transpose,
    positive_projector,
    psd_inv_sqrt,
    psd_projection,
    psd_sqrt,
)


def random_hermitian(rng: np.random.Generator, dim: int = 4) -> np.ndarray:
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return (x + x.conj().T) / 2


class TestEigenDecomposition(unittest.TestCase):
    """Tests for the Hermitian eigensolver."""

    def test_jacobi_residuals_on_random_matrices(self):
        """Test A·v = λ·v and orthonormality for 1000 random Hermitian 4×4 matrices."""
        rng = np.random.default_rng(7)
        for _ in range(1000):
            a = random_hermitian(rng)
            values, vectors = eig_hermitian(a, backend="jacobi")
            self.assertLessEqual(np.max(np.abs(a @ vectors - vectors * values)), 1e-10)
            self.assertLessEqual(np.max(np.abs(vectors.conj().T @ vectors - np.eye(4))), 1e-10)

    def test_eigenvalues_descending(self):
        """Test eigenvalues come back largest first."""
        values = eigvals_hermitian(np.diag([0.5, 3.0, -1.0, 2.0]).astype(complex))
        np.testing.assert_allclose(values, [3.0, 2.0, 0.5, -1.0], atol=1e-12)

    def test_backends_agree(self):
        """Test the Jacobi and LAPACK backends return the same spectrum."""
        rng = np.random.default_rng(11)
        for _ in range(50):
            a = random_hermitian(rng)
            np.testing.assert_allclose(
                eigvals_hermitian(a, backend="jacobi"), eigvals_hermitian(a, backend="lapack"), atol=1e-10
            )

    def test_phase_convention(self):
        """Test the first non-negligible component of every eigenvector is real and positive."""
        rng = np.random.default_rng(3)
        _, vectors = eig_hermitian(random_hermitian(rng))
        for k in range(4):
            column = vectors[:, k]
            lead = column[np.flatnonzero(np.abs(column) > 1e-12)[0]]
            self.assertAlmostEqual(lead.imag, 0.0, places=12)
            self.assertGreater(lead.real, 0.0)

    def test_zero_matrix_gives_standard_basis(self):
        """Test a fully degenerate input returns the computational basis in order."""
        _, vectors = eig_hermitian(np.zeros((2, 2), dtype=complex))
        np.testing.assert_allclose(vectors, np.eye(2), atol=1e-15)

    def test_rejects_non_hermitian(self):
        """Test a non-Hermitian input raises NotHermitian."""
        with self.assertRaises(NotHermitian):
            eig_hermitian(np.array([[0, 1], [0, 0]], dtype=complex))

    def test_rejects_non_square(self):
        """Test a non-square input raises WrongDimension."""
        with self.assertRaises(WrongDimension):
            check_hermitian(np.zeros((2, 3)))

    def test_default_backend_from_settings(self):
        """Test eig_hermitian follows the configured backend."""
        with patch("entmeas.tools.linalg._jacobi") as jacobi:
            with patch("entmeas.tools.linalg.get_settings", return_value=Settings(eigen_backend="lapack")):
                eig_hermitian(np.eye(2, dtype=complex))
        jacobi.assert_not_called()


class TestSubsystemOperations(unittest.TestCase):
    """Tests for Kronecker products, partial traces and partial transposes."""

    def test_partial_transpose_involution(self):
        """Test applying the partial transpose twice is the identity."""
        rng = np.random.default_rng(5)
        a = random_hermitian(rng)
        np.testing.assert_allclose(partial_transpose(partial_transpose(a)), a, atol=1e-15)

    def test_partial_transpose_of_product(self):
        """Test (A⊗B)^{T_B} = A⊗B^T."""
        rng = np.random.default_rng(6)
        a, b = random_hermitian(rng, 2), random_hermitian(rng, 2)
        np.testing.assert_allclose(partial_transpose(kron(a, b)), kron(a, b.T), atol=1e-14)

    def test_partial_trace_product_rule(self):
        """Test Tr_B(A⊗B) = A·Tr(B) and Tr_A(A⊗B) = B·Tr(A)."""
        rng = np.random.default_rng(8)
        a, b = random_hermitian(rng, 2), random_hermitian(rng, 2)
        np.testing.assert_allclose(partial_trace_b(kron(a, b)), a * np.trace(b), atol=1e-14)
        np.testing.assert_allclose(partial_trace_a(kron(a, b)), b * np.trace(a), atol=1e-14)

    def test_two_qubit_operations_reject_other_sizes(self):
        """Test partial operations require a 4×4 operator."""
        with self.assertRaises(WrongDimension):
            partial_transpose(np.eye(3))


class TestPositiveOperators(unittest.TestCase):
    """Tests for PSD helpers."""

    def test_psd_sqrt_squares_back(self):
        """Test psd_sqrt(A)² = A for a random PSD matrix."""
        rng = np.random.default_rng(9)
        x = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        a = x @ x.conj().T
        root = psd_sqrt(a)
        np.testing.assert_allclose(root @ root, a, atol=1e-10)

    def test_psd_sqrt_clamps_roundoff(self):
        """Test eigenvalues slightly below zero are clamped."""
        root = psd_sqrt(np.diag([1.0, -1e-12]).astype(complex))
        np.testing.assert_allclose(root, np.diag([1.0, 0.0]), atol=1e-12)

    def test_psd_sqrt_rejects_negative(self):
        """Test a clearly negative eigenvalue raises NotPSD."""
        with self.assertRaises(NotPSD):
            psd_sqrt(np.diag([1.0, -0.1]).astype(complex))

    def test_inverse_sqrt(self):
        """Test psd_inv_sqrt(A)·A·psd_inv_sqrt(A) = I for a positive definite matrix."""
        a = np.array([[2.0, 0.5], [0.5, 1.0]], dtype=complex)
        inv = psd_inv_sqrt(a)
        np.testing.assert_allclose(inv @ a @ inv, np.eye(2), atol=1e-12)

    def test_projections(self):
        """Test the PSD projection clips negatives and the positive projector keeps the positive span."""
        a = np.diag([2.0, -1.0]).astype(complex)
        np.testing.assert_allclose(psd_projection(a), np.diag([2.0, 0.0]), atol=1e-14)
        np.testing.assert_allclose(positive_projector(a), np.diag([1.0, 0.0]), atol=1e-14)
        self.assertTrue(is_psd(np.diag([1.0, 0.0]).astype(complex)))
        self.assertFalse(is_psd(a))


class TestSettings(unittest.TestCase):
    """Tests for configuration lookup."""

    def test_override_wins(self):
        """Test a value in settings_override is returned instead of the environment."""
        token = settings_override.set(Settings(significance=5.0))
        try:
            self.assertEqual(get_settings().significance, 5.0)
        finally:
            settings_override.reset(token)

    def test_defaults(self):
        """Test the Settings defaults."""
        settings = Settings()
        self.assertEqual(settings.significance, 3.0)
        self.assertEqual(settings.enumeration_budget, 10**8)
        self.assertEqual(settings.eigen_backend, "jacobi")
        self.assertEqual(settings.seesaw_backend, "lapack")


if __name__ == "__main__":
    unittest.main()
