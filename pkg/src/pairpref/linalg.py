"""Dense matrix primitives.

Matrices are plain ``numpy.ndarray`` objects of dtype float64. The helpers
here validate shapes, pull out principal blocks, evaluate the handful of
norms the sample-count constants need, and build Nystrom extensions.

Everything is a pure function of its inputs.
"""
from __future__ import annotations

from typing import Iterable, Sequence

import numpy as np

from .errors import DataFormatError, DimensionError, SingularMatrixError

#: Relative cutoff used when pseudo-inverting the principal block.
PINV_TOL = 1e-12

NORM_KINDS = ("max", "one", "two")


def as_matrix(m) -> np.ndarray:
    """Return ``m`` as a finite 2-D float64 array, raising on anything else."""
    a = np.asarray(m, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
        raise DimensionError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise DataFormatError("matrix has non-finite entries")
    return a


def _require_square(a: np.ndarray) -> None:
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {a.shape}")


def index_set(indices: Iterable[int], size: int) -> tuple:
    """Validate a selection of distinct indices into a ``size``-sided matrix."""
    idx = tuple(int(i) for i in indices)
    if len(set(idx)) != len(idx):
        raise DimensionError(f"repeated index in {idx}")
    for i in idx:
        if not 0 <= i < size:
            raise DimensionError(f"index {i} out of range for size {size}")
    return idx


def singular_values(m) -> np.ndarray:
    """All singular values of ``m`` in descending order (full SVD)."""
    return np.linalg.svd(as_matrix(m), compute_uv=False)


def sigma_min(m) -> float:
    """Smallest singular value of the square matrix ``m``."""
    a = as_matrix(m)
    _require_square(a)
    return float(np.linalg.svd(a, compute_uv=False)[-1])


def batched_sigma_min(stack: np.ndarray) -> np.ndarray:
    """Smallest singular value of every matrix in a ``(n, p, p)`` stack."""
    return np.linalg.svd(stack, compute_uv=False)[..., -1]


def principal_submatrix(m, s: Sequence[int]) -> np.ndarray:
    """Entries ``m[i, j]`` for ``i, j`` in ``s``, kept in the order of ``s``."""
    a = as_matrix(m)
    _require_square(a)
    idx = index_set(s, a.shape[0])
    if not idx:
        raise DimensionError("empty index set")
    return a[np.ix_(idx, idx)].copy()


def pinv(w, tol: float = PINV_TOL) -> np.ndarray:
    """Pseudo-inverse that drops singular values below ``tol * sigma_max``."""
    a = as_matrix(w)
    u, s, vt = np.linalg.svd(a, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return np.zeros(a.T.shape)
    keep = s > tol * s[0]
    inv_s = np.zeros_like(s)
    inv_s[keep] = 1.0 / s[keep]
    return (vt.T * inv_s) @ u.T


def nystrom_extend(c, w, tol: float = PINV_TOL) -> np.ndarray:
    """Nystrom extension ``C pinv(W) C^T``, symmetrized.

    Parameters
    ----------
    c : array_like, shape (K, s)
        Selected columns of the matrix being reconstructed.
    w : array_like, shape (s, s)
        Principal block of the matrix on the selected indices.
    tol : float
        Relative singular-value cutoff for the pseudo-inverse of ``w``.

    Returns
    -------
    ndarray, shape (K, K)
        The reconstruction, averaged with its transpose so that it is
        exactly symmetric.
    """
    c = as_matrix(c)
    w = as_matrix(w)
    _require_square(w)
    if c.shape[1] != w.shape[0]:
        raise DimensionError(
            f"column block has {c.shape[1]} columns but principal block is {w.shape}"
        )
    x = c @ pinv(w, tol) @ c.T
    return 0.5 * (x + x.T)


def norm(m, kind: str) -> float:
    """Matrix norm: ``max`` (largest |entry|), ``one`` (max column sum), ``two`` (spectral)."""
    a = as_matrix(m)
    if kind == "max":
        return float(np.max(np.abs(a)))
    if kind == "one":
        return float(np.max(np.sum(np.abs(a), axis=0)))
    if kind == "two":
        return float(np.linalg.svd(a, compute_uv=False)[0])
    raise ValueError(f"unknown norm kind {kind!r}; expected one of {NORM_KINDS}")


def c1_c2_constants(w, c) -> tuple:
    """Problem-dependent constants that scale the per-entry sample counts.

    ``C1`` gathers the norms of ``W^-1 C^T``, ``C W^-1`` and ``W^-1`` that
    govern the column block; ``C2`` the ones that govern the principal block.
    Both are computed exactly from an explicit inverse of ``w``.
    """
    w = as_matrix(w)
    c = as_matrix(c)
    _require_square(w)
    if c.shape[1] != w.shape[0]:
        raise DimensionError(f"c has {c.shape[1]} columns, w is {w.shape}")
    s = np.linalg.svd(w, compute_uv=False)
    if s[-1] <= 0.0 or s[-1] <= PINV_TOL * s[0]:
        raise SingularMatrixError("principal block is singular")
    w_inv = np.linalg.inv(w)
    winv_ct_max = norm(w_inv @ c.T, "max")
    c_winv_one = norm(c @ w_inv, "one")
    winv_max = norm(w_inv, "max")
    winv_two = norm(w_inv, "two")
    c1 = max(
        winv_ct_max,
        winv_ct_max**2,
        winv_max,
        c_winv_one**2,
        winv_two * winv_max,
    )
    c2 = max(
        winv_two**2 * winv_max**2,
        winv_two * winv_max,
        winv_two,
        winv_two**2,
    )
    return c1, c2


def inverse_perturbation_bound(w, e) -> tuple:
    """Check the first-order bound on how far ``(W + E)^-1`` moves from ``W^-1``.

    Returns ``(ratio, bound)`` where ``ratio = ||W^-1 E||_2`` and
    ``bound = 2 ||W^-1||_2 ||E||_2 ||W^-1||_max``. The bound on
    ``||(W+E)^-1 - W^-1||_max`` is only valid while ``ratio <= 1/2``.
    """
    w = as_matrix(w)
    e = as_matrix(e)
    w_inv = np.linalg.inv(w)
    ratio = norm(w_inv @ e, "two")
    bound = 2.0 * norm(w_inv, "two") * norm(e, "two") * norm(w_inv, "max")
    return ratio, bound


def read_matrix_csv(path) -> np.ndarray:
    """Load a headerless CSV of reals, one matrix row per line."""
    try:
        a = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2)
    except (ValueError, OSError) as exc:
        raise DataFormatError(f"cannot read matrix from {path}: {exc}") from exc
    return as_matrix(a)


def write_matrix_csv(path, m) -> None:
    # %.17g round-trips float64 exactly
    np.savetxt(path, as_matrix(m), delimiter=",", fmt="%.17g")
