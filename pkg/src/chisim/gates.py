"""Standard 2x2 gate matrices and random-unitary generation."""

from __future__ import annotations

import numpy as np

IDENTITY = np.eye(2, dtype=complex)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PROJ_1 = np.array([[0, 0], [0, 1]], dtype=complex)  # |1><1|


def phase_rotation(k: int, dagger: bool = False) -> np.ndarray:
    """Z-axis rotation diag(1, exp(+-2*pi*i / 2**k)) used in the Fourier ladder."""
    if k < 1:
        raise ValueError(f"rotation index must be >= 1, got {k}")
    angle = 2.0 * np.pi / 2**k
    if dagger:
        angle = -angle
    return np.array([[1, 0], [0, np.exp(1j * angle)]], dtype=complex)


def haar_unitary(rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed 2x2 unitary via QR of a complex Gaussian matrix.

    The R-diagonal phase fix makes the distribution exactly Haar rather
    than QR-biased.
    """
    z = (rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diagonal(r)
    return q * (d / np.abs(d))


def is_unitary(matrix: np.ndarray, tol: float = 1e-12) -> bool:
    """Check U^dagger U = I within ``tol``."""
    matrix = np.asarray(matrix)
    if matrix.shape != (2, 2):
        eye = np.eye(matrix.shape[0])
    else:
        eye = IDENTITY
    return bool(np.allclose(matrix.conj().T @ matrix, eye, atol=tol))
