import logging

import numpy as np

from entmeas.config import EigenBackend, get_settings
from entmeas.errors import NotHermitian, NotPSD, WrongDimension
from entmeas.models.base import HERMITIAN_TOL, PSD_TOL

logger = logging.getLogger(__name__)

JACOBI_OFF_TOL = 1e-13
JACOBI_MAX_SWEEPS = 100
PSD_CLAMP = 1e-10


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; the (i, j) block of the result is ``a[i, j] * b``."""
    return np.kron(a, b)


def hermitian_part(a: np.ndarray) -> np.ndarray:
    """Return (A + A†) / 2."""
    return (a + a.conj().T) / 2


def check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Validate Hermiticity elementwise and return the symmetrized matrix.

    Raises:
        NotHermitian: If max|A - A†| exceeds ``tol``
    """
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise WrongDimension(f"expected a square matrix, got shape {a.shape}")
    asymmetry = float(np.max(np.abs(a - a.conj().T))) if a.size else 0.0
    if asymmetry > tol:
        raise NotHermitian(f"max|A - A†| = {asymmetry:.3e} exceeds {tol:.0e}")
    return hermitian_part(a)


def _jacobi(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi rotations for a Hermitian matrix.

    Each rotation first removes the phase of A[p, q] with a diagonal unitary,
    then applies the real symmetric rotation that zeroes the element.
    """
    n = a.shape[0]
    work = a.astype(np.complex128, copy=True)
    vectors = np.eye(n, dtype=np.complex128)
    threshold = JACOBI_OFF_TOL * max(1.0, float(np.linalg.norm(work)))

    for sweep in range(JACOBI_MAX_SWEEPS):
        off = float(np.sqrt(np.sum(np.abs(work - np.diag(np.diag(work))) ** 2)))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = work[p, q]
                r = abs(apq)
                if r == 0.0:
                    continue
                phase = apq / r
                app, aqq = work[p, p].real, work[q, q].real
                theta = 0.5 * np.arctan2(2.0 * r, aqq - app)
                c, s = np.cos(theta), np.sin(theta)
                rot = np.eye(n, dtype=np.complex128)
                rot[p, p] = c
                rot[p, q] = s
                rot[q, p] = -s * np.conj(phase)
                rot[q, q] = c * np.conj(phase)
                work = rot.conj().T @ work @ rot
                vectors = vectors @ rot
    else:
        logger.warning("Jacobi eigensolver stopped after %d sweeps without reaching %.1e", sweep + 1, threshold)

    return np.diag(work).real.copy(), vectors


def _fix_order_and_phase(values: np.ndarray, vectors: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    order = np.argsort(-values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]
    for k in range(vectors.shape[1]):
        column = vectors[:, k]
        nonzero = np.flatnonzero(np.abs(column) > 1e-12)
        if nonzero.size:
            lead = column[nonzero[0]]
            vectors[:, k] = column * (abs(lead) / lead)
    return values, vectors


def eig_hermitian(a: np.ndarray, *, backend: EigenBackend | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of a Hermitian matrix.

    Eigenvalues come back in descending order; degenerate eigenvalues keep the
    solver's column order, and every eigenvector has its first non-negligible
    component made real and positive, so results are reproducible.

    Args:
        a: Hermitian matrix (tolerance 1e-12 elementwise)
        backend: ``"jacobi"`` or ``"lapack"``; defaults to the configured backend

    Returns:
        Tuple of (eigenvalues, eigenvectors as orthonormal columns)

    Raises:
        NotHermitian: If ``a`` is not Hermitian within tolerance
    """
    h = check_hermitian(np.asarray(a, dtype=np.complex128))
    chosen = backend or get_settings().eigen_backend
    if chosen == "jacobi":
        values, vectors = _jacobi(h)
    else:
        values, vectors = np.linalg.eigh(h)
    return _fix_order_and_phase(values, vectors)


def eigvals_hermitian(a: np.ndarray, *, backend: EigenBackend | None = None) -> np.ndarray:
    return eig_hermitian(a, backend=backend)[0]


def _require_two_qubits(a: np.ndarray) -> np.ndarray:
    if a.shape != (4, 4):
        raise WrongDimension(f"expected a 4×4 operator on 2⊗2, got shape {a.shape}")
    return a.reshape(2, 2, 2, 2)


def partial_transpose(a: np.ndarray) -> np.ndarray:
    """Transpose the second-subsystem indices of an operator on 2⊗2."""
    return _require_two_qubits(a).transpose(0, 3, 2, 1).reshape(4, 4)


def partial_trace_b(a: np.ndarray) -> np.ndarray:
    """Trace out the second qubit."""
    return np.trace(_require_two_qubits(a), axis1=1, axis2=3)


def partial_trace_a(a: np.ndarray) -> np.ndarray:
    """Trace out the first qubit."""
    return np.trace(_require_two_qubits(a), axis1=0, axis2=2)


def is_psd(a: np.ndarray, tol: float = PSD_TOL, *, backend: EigenBackend | None = None) -> bool:
    """Whether the smallest eigenvalue of a Hermitian matrix is at least ``-tol``."""
    return bool(eigvals_hermitian(a, backend=backend)[-1] >= -tol)


def psd_sqrt(a: np.ndarray, *, backend: EigenBackend | None = None) -> np.ndarray:
    """Principal square root of a positive-semidefinite matrix.

    Eigenvalues in [-1e-10, 0) are clamped to zero.

    Raises:
        NotPSD: If an eigenvalue lies below -1e-10
    """
    values, vectors = eig_hermitian(a, backend=backend)
    if values[-1] < -PSD_CLAMP:
        raise NotPSD(f"minimum eigenvalue {values[-1]:.3e} is below -{PSD_CLAMP:.0e}")
    roots = np.sqrt(np.clip(values, 0.0, None))
    return hermitian_part((vectors * roots) @ vectors.conj().T)


def psd_inv_sqrt(a: np.ndarray, floor: float = 1e-12, *, backend: EigenBackend | None = None) -> np.ndarray:
    """Inverse square root of a PSD matrix, eigenvalues floored at ``floor``."""
    values, vectors = eig_hermitian(a, backend=backend)
    roots = 1.0 / np.sqrt(np.maximum(values, floor))
    return hermitian_part((vectors * roots) @ vectors.conj().T)


def psd_projection(a: np.ndarray, *, backend: EigenBackend | None = None) -> np.ndarray:
    """Nearest positive-semidefinite matrix in Frobenius norm (negative eigenvalues dropped)."""
    values, vectors = eig_hermitian(a, backend=backend)
    return hermitian_part((vectors * np.clip(values, 0.0, None)) @ vectors.conj().T)


def positive_projector(a: np.ndarray, *, backend: EigenBackend | None = None) -> np.ndarray:
    """Projector onto the span of eigenvectors with strictly positive eigenvalue."""
    values, vectors = eig_hermitian(a, backend=backend)
    keep = vectors[:, values > 0]
    return keep @ keep.conj().T


def projector(vector: np.ndarray) -> np.ndarray:
    """|v⟩⟨v| for a normalized ket."""
    v = np.asarray(vector, dtype=np.complex128).reshape(-1)
    return np.outer(v, v.conj())
