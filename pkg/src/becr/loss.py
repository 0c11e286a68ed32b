"""Gini-of-eigenvalues regularizer, its hinge penalty, combined loss and gradient.

For an embedding batch with covariance ``K`` and eigenvalues ``lam_i``::

    G  = 1 - sum_i (lam_i / sum_j lam_j)^2  =  1 - tr(K^2) / tr(K)^2
    R  = max(0, epsilon - G)^2
    L' = (1 - lambda) * L + lambda * R

``G`` is the Gini impurity (Simpson diversity) of the normalized spectrum:
0 when all variance sits in one direction, ``1 - 1/D`` when it is spread
evenly over ``D`` directions. The trace form needs no eigendecomposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DegenerateSpectrumError, InvalidInputError
from .linalg import as_batch, batch_traces, center_rows, clamp_psd

__all__ = [
    "BecrConfig",
    "BecrResult",
    "gini_from_spectrum",
    "gini_from_traces",
    "gini_trace",
    "becr_penalty",
    "total_loss",
    "becr_evaluate",
    "becr_gradient",
    "bce_loss",
    "finite_difference_gradient",
    "max_relative_error",
    "gradient_check",
    "DEFAULT_EPSILON",
    "DEFAULT_LAMBDA",
]

DEFAULT_EPSILON = 0.7
DEFAULT_LAMBDA = 0.05

# 1 - ratio cancels to a few ulp at rank 1; anything below this is zero
GINI_FLOOR = 1e-12
BCE_CLAMP = 1e-7


def _unit_interval(name: str, value: float) -> float:
    value = float(value)
    if not (0.0 <= value <= 1.0):
        raise InvalidInputError(f"{name} must lie in [0, 1], got {value!r}")
    return value


@dataclass(frozen=True)
class BecrConfig:
    """Hinge threshold ``epsilon`` on the Gini index and mixing weight ``lam``."""

    epsilon: float = DEFAULT_EPSILON
    lam: float = DEFAULT_LAMBDA

    def __post_init__(self):
        object.__setattr__(self, "epsilon", _unit_interval("epsilon", self.epsilon))
        object.__setattr__(self, "lam", _unit_interval("lambda", self.lam))


@dataclass(frozen=True)
class BecrResult:
    gini: float
    penalty: float
    total_loss: float
    vanilla_loss: float


def _snap(g: float) -> float:
    if g < GINI_FLOOR:
        return 0.0
    return min(g, 1.0)


def gini_from_spectrum(spectrum) -> float:
    """Gini index of a PSD spectrum (any order).

    Raises ``DegenerateSpectrumError`` when every eigenvalue is zero.
    """
    lam = clamp_psd(np.asarray(spectrum, dtype=np.float64).ravel())
    if lam.size == 0:
        raise InvalidInputError("empty spectrum")
    total = float(np.sum(lam))
    if total == 0.0:
        raise DegenerateSpectrumError("all eigenvalues are zero; Gini index is undefined")
    return _snap(1.0 - float(np.sum(lam * lam)) / (total * total))


def gini_from_traces(tr_k: float, tr_k2: float) -> float:
    if tr_k <= 0.0:
        raise DegenerateSpectrumError("covariance is zero; Gini index is undefined")
    return _snap(1.0 - tr_k2 / (tr_k * tr_k))


def gini_trace(batch) -> float:
    """Gini index of the batch covariance from ``tr(K)`` and ``tr(K^2)`` alone.

    Uses the ``N x N`` Gram matrix when ``N < D`` so the ``D x D`` covariance
    is never built; cost is ``O(min(N, D)^2 max(N, D))``.
    """
    return gini_from_traces(*batch_traces(batch))


def becr_penalty(gini: float, epsilon: float) -> float:
    g = _unit_interval("gini", gini)
    eps = _unit_interval("epsilon", epsilon)
    gap = max(0.0, eps - g)
    return gap * gap


def total_loss(vanilla: float, penalty: float, lam: float) -> float:
    lam = _unit_interval("lambda", lam)
    if not (math.isfinite(vanilla) and math.isfinite(penalty)):
        raise InvalidInputError("vanilla loss and penalty must be finite")
    return (1.0 - lam) * vanilla + lam * penalty


def becr_evaluate(batch, config: BecrConfig, vanilla_loss: float) -> BecrResult:
    g = gini_trace(batch)
    r = becr_penalty(g, config.epsilon)
    return BecrResult(
        gini=g,
        penalty=r,
        total_loss=total_loss(vanilla_loss, r, config.lam),
        vanilla_loss=float(vanilla_loss),
    )


def becr_gradient(batch, config: BecrConfig) -> np.ndarray:
    """Analytic ``dR/dX`` for the raw ``(N, D)`` batch ``X``.

    With ``C`` the centered batch, ``s = ||C||_F^2`` and ``t = ||C^T C||_F^2``
    the normalization cancels and ``G = 1 - t / s^2``, so::

        dG/dC = 4 t C / s^3 - 4 (C C^T) C / s^2

    Centering is a symmetric projection, so ``dG/dX`` is ``dG/dC`` with its
    column means removed. The hinge contributes ``-2 (epsilon - G)``.
    The result is exactly zero when ``G >= epsilon``.
    """
    x = as_batch(batch)
    n, d = x.shape
    g = gini_trace(x)
    if g >= config.epsilon:
        return np.zeros_like(x)

    c = center_rows(x)
    s = float(np.sum(c * c))
    if n < d:
        gram = c @ c.T
        t = float(np.sum(gram * gram))
        gc = gram @ c
    else:
        scatter = c.T @ c
        t = float(np.sum(scatter * scatter))
        gc = c @ scatter
    dg = 4.0 * (t / s**3) * c - (4.0 / s**2) * gc
    dg -= dg.mean(axis=0)
    return -2.0 * (config.epsilon - g) * dg


def bce_loss(predictions, targets) -> float:
    """Mean binary cross-entropy with probabilities clamped to ``[1e-7, 1 - 1e-7]``."""
    p = np.asarray(predictions, dtype=np.float64).ravel()
    t = np.asarray(targets, dtype=np.float64).ravel()
    if p.shape != t.shape:
        raise InvalidInputError(f"length mismatch: {p.size} predictions vs {t.size} targets")
    if p.size == 0:
        raise InvalidInputError("empty input")
    if np.any((p < 0) | (p > 1)) or not np.all(np.isfinite(p)):
        raise InvalidInputError("predictions must lie in [0, 1]")
    if np.any((t != 0) & (t != 1)):
        raise InvalidInputError("targets must be 0 or 1")
    p = np.clip(p, BCE_CLAMP, 1.0 - BCE_CLAMP)
    return float(-np.mean(t * np.log(p) + (1.0 - t) * np.log1p(-p)))


def finite_difference_gradient(
    func: Callable[[np.ndarray], float], x, rel_step: float = 1e-5
) -> np.ndarray:
    """Central differences with per-entry step ``rel_step * (1 + |x_ij|)``."""
    x = np.array(x, dtype=np.result_type(np.asarray(x).dtype, np.float64))
    grad = np.empty_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        h = rel_step * (1.0 + abs(orig))
        x[idx] = orig + h
        f_plus = func(x)
        x[idx] = orig - h
        f_minus = func(x)
        x[idx] = orig
        grad[idx] = (f_plus - f_minus) / (2.0 * h)
    return grad


def max_relative_error(analytic, numeric, floor: float = 1e-8) -> float:
    """Largest ``|a - n| / max(|a|, |n|)`` over entries whose magnitude exceeds ``floor``."""
    a = np.asarray(analytic, dtype=np.float64)
    b = np.asarray(numeric, dtype=np.float64)
    scale = np.maximum(np.abs(a), np.abs(b))
    mask = scale > floor
    if not np.any(mask):
        return 0.0
    return float(np.max(np.abs(a - b)[mask] / scale[mask]))


def _penalty_extended(x: np.ndarray, epsilon: float) -> float:
    # reference evaluation of R in extended precision for the difference oracle
    z = np.asarray(x, dtype=np.longdouble)
    c = z - z.mean(axis=0)
    s = np.sum(c * c)
    gram = c @ c.T if c.shape[0] < c.shape[1] else c.T @ c
    g = 1 - np.sum(gram * gram) / (s * s)
    gap = max(np.longdouble(0), np.longdouble(epsilon) - g)
    return gap * gap


def gradient_check(batch, config: BecrConfig, rel_step: float = 1e-5) -> float:
    """Max relative error between ``becr_gradient`` and central differences of ``R``.

    The differenced function is evaluated in extended precision, so the
    oracle's own rounding noise stays far below the float64 gradient error.
    """
    x = as_batch(batch)
    numeric = finite_difference_gradient(
        lambda z: _penalty_extended(z, config.epsilon),
        x.astype(np.longdouble),
        rel_step,
    )
    return max_relative_error(becr_gradient(x, config), numeric.astype(np.float64))
