"""Dense kernels behind the regularizer: centering, covariance, eigenvalues, traces.

An embedding batch is an ``(N, D)`` float array, one row per sample. The
covariance is normalized by ``1 / (N - 1)``; every quantity downstream that
matters (the Gini index, eigenvalue ratios) is invariant to that factor.

Two routes to the spectral sums are provided:

* the direct route forms the ``D x D`` covariance ``K`` and reads ``tr(K)``
  and ``tr(K^2) = ||K||_F^2`` off it, ``O(D^2 N)``;
* the Gram route uses ``C C^T`` (``N x N``) for the centered rows ``C``.
  ``C^T C`` and ``C C^T`` share their nonzero eigenvalues, so both traces
  come out identical at ``O(N^2 D)``, which wins whenever ``N < D``.
"""

from __future__ import annotations

import math

import numba
import numpy as np

from .errors import ConvergenceError, InsufficientSamplesError, InvalidInputError

__all__ = [
    "as_batch",
    "as_symmetric",
    "center_rows",
    "covariance",
    "sym_eigenvalues",
    "clamp_psd",
    "trace",
    "trace_of_square",
    "gram_traces",
    "batch_traces",
    "batch_spectrum",
    "SYMMETRY_ATOL",
    "PSD_RTOL",
    "JACOBI_TOL",
    "JACOBI_MAX_SWEEPS",
]

SYMMETRY_ATOL = 1e-12
# eigenvalues in [-PSD_RTOL * trace, 0) are floating-point drift, not signal
PSD_RTOL = 1e-9
JACOBI_TOL = 1e-11
JACOBI_MAX_SWEEPS = 100


def as_batch(data, min_samples: int = 2) -> np.ndarray:
    """Validate an embedding batch and return it as a float64 ``(N, D)`` array."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"embedding batch must be 2-D, got shape {arr.shape}")
    if arr.shape[1] < 1:
        raise InvalidInputError("embedding batch needs at least one dimension")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError("embedding batch contains NaN or Inf")
    if arr.shape[0] < min_samples:
        raise InsufficientSamplesError(
            f"need at least {min_samples} samples, got {arr.shape[0]}"
        )
    return arr


def as_symmetric(matrix, atol: float = SYMMETRY_ATOL) -> np.ndarray:
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("matrix contains NaN or Inf")
    if a.size and np.max(np.abs(a - a.T)) > atol:
        raise InvalidInputError(
            f"matrix is not symmetric (max |A - A^T| = {np.max(np.abs(a - a.T)):.3e})"
        )
    return a


def center_rows(batch) -> np.ndarray:
    """Subtract the column means from every row.

    A second correction pass removes the residual mean left by rounding, so
    column means of the result are zero to ~1e-16 relative to the data scale.
    Constant columns come out exactly zero, which keeps degeneracy checks
    (``tr(K) == 0``) free of rounding residue.
    """
    x = as_batch(batch, min_samples=1)
    c = x - x.mean(axis=0)
    c -= c.mean(axis=0)
    c[:, np.ptp(x, axis=0) == 0.0] = 0.0
    return c


def covariance(batch) -> np.ndarray:
    """Unbiased sample covariance ``C^T C / (N - 1)`` of an ``(N, D)`` batch."""
    x = as_batch(batch)
    c = center_rows(x)
    k = c.T @ c / (x.shape[0] - 1)
    # C^T C is symmetric in exact arithmetic; make it so bitwise
    return 0.5 * (k + k.T)


@numba.njit(cache=True, nogil=True)
def _cyclic_jacobi(a0, tol_rel, max_sweeps):
    """Cyclic Jacobi on the upper triangle of a symmetric matrix.

    Returns ``(diagonal, sweeps)``; ``sweeps == -1`` signals non-convergence.
    The diagonal is tracked separately in ``d``; only entries above the
    diagonal are read or written, so the lower triangle is ignored.
    """
    n = a0.shape[0]
    a = a0.copy()
    d = np.empty(n)
    fro2 = 0.0
    for i in range(n):
        d[i] = a[i, i]
        for j in range(n):
            fro2 += a[i, j] * a[i, j]
    tol = tol_rel * math.sqrt(fro2)

    for sweep in range(max_sweeps):
        off2 = 0.0
        for i in range(n):
            for j in range(i + 1, n):
                off2 += a[i, j] * a[i, j]
        if math.sqrt(2.0 * off2) <= tol:
            return d, sweep

        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                g = 100.0 * abs(apq)
                # after a few sweeps, drop entries below the diagonals' ulp
                if sweep > 3 and abs(d[p]) + g == abs(d[p]) and abs(d[q]) + g == abs(d[q]):
                    a[p, q] = 0.0
                    continue
                h = d[q] - d[p]
                if abs(h) + g == abs(h):
                    t = apq / h
                else:
                    theta = 0.5 * h / apq
                    t = 1.0 / (abs(theta) + math.sqrt(1.0 + theta * theta))
                    if theta < 0.0:
                        t = -t
                c = 1.0 / math.sqrt(1.0 + t * t)
                s = t * c
                d[p] -= t * apq
                d[q] += t * apq
                a[p, q] = 0.0
                for k in range(p):
                    x = a[k, p]
                    y = a[k, q]
                    a[k, p] = c * x - s * y
                    a[k, q] = s * x + c * y
                for k in range(p + 1, q):
                    x = a[p, k]
                    y = a[k, q]
                    a[p, k] = c * x - s * y
                    a[k, q] = s * x + c * y
                for k in range(q + 1, n):
                    x = a[p, k]
                    y = a[q, k]
                    a[p, k] = c * x - s * y
                    a[q, k] = s * x + c * y
    return d, -1


def sym_eigenvalues(
    matrix,
    method: str = "jacobi",
    tol: float = JACOBI_TOL,
    max_sweeps: int = JACOBI_MAX_SWEEPS,
) -> np.ndarray:
    """Eigenvalues of a symmetric matrix, sorted descending.

    Parameters
    ----------
    matrix : array_like, shape (D, D)
        Symmetric to within ``SYMMETRY_ATOL`` entrywise.
    method : {"jacobi", "lapack"}
        ``"jacobi"`` runs cyclic Jacobi rotations until the off-diagonal
        Frobenius norm drops below ``tol * ||A||_F``. ``"lapack"`` defers to
        ``numpy.linalg.eigvalsh``; it is much faster at large ``D`` and
        serves as an independent cross-check of the Jacobi solver.

    Raises
    ------
    InvalidInputError
        Non-square, non-finite or asymmetric input.
    ConvergenceError
        Jacobi did not converge within ``max_sweeps`` sweeps.
    """
    a = as_symmetric(matrix)
    if a.shape[0] == 0:
        return np.empty(0)
    if method == "jacobi":
        values, sweeps = _cyclic_jacobi(np.ascontiguousarray(a), float(tol), int(max_sweeps))
        if sweeps < 0:
            raise ConvergenceError(f"Jacobi did not converge within {max_sweeps} sweeps")
    elif method == "lapack":
        values = np.linalg.eigvalsh(a)
    else:
        raise InvalidInputError(f"unknown eigensolver {method!r}")
    return np.sort(values)[::-1].copy()


def clamp_psd(values) -> np.ndarray:
    """Zero out slightly negative eigenvalues of a PSD matrix.

    Values down to ``-PSD_RTOL * sum(|values|)`` are rounding noise and
    become 0; anything more negative means the matrix was not PSD.
    """
    v = np.asarray(values, dtype=np.float64)
    floor = -PSD_RTOL * float(np.sum(np.abs(v)))
    if np.any(v < floor):
        raise InvalidInputError(
            f"spectrum has eigenvalue {v.min():.3e} below PSD tolerance {floor:.3e}"
        )
    return np.where(v < 0.0, 0.0, v)


def trace(matrix) -> float:
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise InvalidInputError(f"expected a square matrix, got shape {a.shape}")
    return float(np.trace(a))


def trace_of_square(matrix) -> float:
    """``tr(A^2)`` for symmetric ``A``, computed as ``||A||_F^2`` (no matrix product)."""
    a = as_symmetric(matrix)
    return float(np.sum(a * a))


def gram_traces(batch) -> tuple[float, float]:
    """``(tr(K), tr(K^2))`` of the batch covariance via the ``N x N`` Gram matrix."""
    x = as_batch(batch)
    c = center_rows(x)
    g = c @ c.T
    norm = x.shape[0] - 1
    return float(np.trace(g)) / norm, float(np.sum(g * g)) / (norm * norm)


def batch_traces(batch) -> tuple[float, float]:
    """``(tr(K), tr(K^2))`` through whichever of the Gram or covariance side is smaller."""
    x = as_batch(batch)
    n, d = x.shape
    if n < d:
        return gram_traces(x)
    k = covariance(x)
    return trace(k), trace_of_square(k)


def batch_spectrum(batch, method: str = "jacobi") -> np.ndarray:
    """All ``D`` covariance eigenvalues, descending, without forming ``K`` when ``N < D``.

    With ``N < D`` the covariance has rank at most ``N - 1``; its nonzero
    eigenvalues are those of ``C C^T / (N - 1)``, and the rest are zero.
    """
    x = as_batch(batch)
    n, d = x.shape
    if n >= d:
        return sym_eigenvalues(covariance(x), method=method)
    c = center_rows(x)
    g = c @ c.T / (n - 1)
    small = sym_eigenvalues(0.5 * (g + g.T), method=method)
    return np.sort(np.concatenate([small, np.zeros(d - n)]))[::-1].copy()
