"""Small dense linear-algebra helpers shared by the tensor-network routines."""

from __future__ import annotations

import numpy as np
import scipy.linalg

# Singular values below this fraction of the largest one are numerical noise
# and are always dropped, independently of any truncation policy.
NOISE_FLOOR = 1e-15

# Squared singular values below this absolute scale contribute zero entropy.
ENTROPY_FLOOR = 1e-14


def svd_safe(matrix: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """SVD with a fallback to the slower but more robust gesvd driver.

    numpy's default gesdd driver occasionally fails to converge on
    ill-conditioned inputs; gesvd does not.
    """
    try:
        return np.linalg.svd(matrix, full_matrices=False)
    except np.linalg.LinAlgError:
        return scipy.linalg.svd(matrix, full_matrices=False, lapack_driver="gesvd")


def truncation_rank(s: np.ndarray, chi_max: int, weight_cutoff: float = 0.0) -> int:
    """Number of singular values to keep under a bond-dimension cap.

    ``s`` must be sorted in descending order.  The cap is applied first;
    afterwards the largest tail whose squared sum stays below
    ``weight_cutoff`` (relative to the total squared sum) is dropped as
    well.  At least one value is always kept.
    """
    total = float(np.sum(np.abs(s) ** 2))
    if total == 0.0:
        return 1
    k = min(len(s), chi_max)
    # unconditional noise floor
    floor = np.abs(s[0]) * NOISE_FLOOR
    k = min(k, max(1, int(np.count_nonzero(np.abs(s) > floor))))
    if weight_cutoff > 0.0:
        tail = np.cumsum(np.abs(s[::-1]) ** 2)[::-1]  # tail[i] = sum of s[i:]**2
        while k > 1 and tail[k - 1] <= weight_cutoff * total:
            k -= 1
    return k


def kept_fraction(s: np.ndarray, k: int) -> float:
    """Fraction of the squared singular-value mass retained by keeping ``k``."""
    total = float(np.sum(np.abs(s) ** 2))
    if total == 0.0:
        return 1.0
    # pairwise summation can push the partial sum an ulp past the total
    return min(1.0, float(np.sum(np.abs(s[:k]) ** 2)) / total)


def entropy_from_singular_values(s: np.ndarray) -> float:
    """Von Neumann entropy (nats) of the squared singular-value spectrum."""
    p = np.abs(s) ** 2
    p = p[p > ENTROPY_FLOOR]
    if p.size == 0:
        return 0.0
    return float(-np.sum(p * np.log(p))) + 0.0
