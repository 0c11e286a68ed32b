"""Dispersion diagnostics for a set of embeddings.

Higher dispersion shows up as a higher Gini index of the covariance spectrum,
a lower share of variance in the top eigen-directions, and lower cluster
separation scores (F statistic, Calinski-Harabasz) for a fixed k.

K-means randomness comes from numpy's ``Philox`` bit generator, a
counter-based PRNG (Salmon et al., Random123). Restart ``r`` of a call with
seed ``s`` draws from ``Philox(key=s).jumped(r)``, so streams are
independent, reproducible and do not depend on the number of restarts.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import DegenerateSpectrumError, InvalidInputError
from .linalg import as_batch, batch_spectrum, clamp_psd
from .loss import gini_trace

__all__ = [
    "ClusterAssignment",
    "DispersionReport",
    "top_m_eigenvalue_ratio",
    "ratio_from_spectrum",
    "kmeans",
    "f_test",
    "calinski_harabasz",
    "dispersion_report",
    "KMEANS_MAX_ITER",
    "KMEANS_N_INIT",
]

KMEANS_MAX_ITER = 300
KMEANS_N_INIT = 10


@dataclass(frozen=True)
class ClusterAssignment:
    labels: np.ndarray
    centroids: np.ndarray
    inertia: float
    n_iter: int

    @property
    def k(self) -> int:
        return self.centroids.shape[0]


@dataclass
class DispersionReport:
    """Metric bundle for one embedding set.

    A metric that cannot be computed on the input (e.g. the Gini index of a
    zero covariance) is ``None`` and its reason is recorded in ``undefined``.
    """

    gini_index: float | None
    top_m_eigenvalue_ratio: float | None
    m: int
    f_test: float | None
    calinski_harabasz: float | None
    k: int
    n_samples: int
    dim: int
    undefined: dict[str, str] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "DispersionReport":
        fields = {name: data[name] for name in cls.__dataclass_fields__ if name in data}
        return cls(**fields)


def ratio_from_spectrum(spectrum, m: int) -> float:
    lam = np.sort(clamp_psd(spectrum))[::-1]
    if not 1 <= m <= lam.size:
        raise InvalidInputError(f"m must be in [1, {lam.size}], got {m}")
    total = float(np.sum(lam))
    if total == 0.0:
        raise DegenerateSpectrumError("covariance is zero; eigenvalue ratio is undefined")
    return min(1.0, float(np.sum(lam[:m])) / total)


def top_m_eigenvalue_ratio(batch, m: int, method: str = "jacobi") -> float:
    """Share of total variance carried by the ``m`` largest covariance eigenvalues."""
    x = as_batch(batch)
    if not 1 <= m <= x.shape[1]:
        raise InvalidInputError(f"m must be in [1, {x.shape[1]}], got {m}")
    return ratio_from_spectrum(batch_spectrum(x, method=method), m)


def _sq_distances(x: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # exact pairwise differences; the expanded |x|^2 - 2xc + |c|^2 form loses
    # precision for points far from the origin
    diff = x[:, None, :] - centers[None, :, :]
    return np.einsum("nkd,nkd->nk", diff, diff)


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = x.shape[0]
    chosen = [int(rng.integers(n))]
    closest = _sq_distances(x, x[chosen])[:, 0]
    for _ in range(1, k):
        total = float(np.sum(closest))
        if total > 0.0:
            idx = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            idx = min(idx, n - 1)
        else:
            idx = int(rng.integers(n))
        chosen.append(idx)
        closest = np.minimum(closest, _sq_distances(x, x[idx : idx + 1])[:, 0])
    return x[chosen].copy()


def _lloyd(x: np.ndarray, centers: np.ndarray, max_iter: int):
    k = centers.shape[0]
    labels = None
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        dist = _sq_distances(x, centers)
        new_labels = np.argmin(dist, axis=1)
        # repair empty clusters: take the point farthest from its own centroid
        for j in range(k):
            if not np.any(new_labels == j):
                own = dist[np.arange(x.shape[0]), new_labels]
                counts = np.bincount(new_labels, minlength=k)
                own = np.where(counts[new_labels] > 1, own, -1.0)
                far = int(np.argmax(own))
                new_labels[far] = j
                centers[j] = x[far]
                dist[far] = _sq_distances(x[far : far + 1], centers)[0]
        if labels is not None and np.array_equal(new_labels, labels):
            break
        labels = new_labels
        for j in range(k):
            centers[j] = x[labels == j].mean(axis=0)
    inertia = float(np.sum((x - centers[labels]) ** 2))
    return labels, centers, inertia, n_iter


def kmeans(
    batch,
    k: int,
    seed: int = 0,
    n_init: int = KMEANS_N_INIT,
    max_iter: int = KMEANS_MAX_ITER,
) -> ClusterAssignment:
    """Lloyd's k-means with k-means++ seeding.

    Runs ``n_init`` seeded restarts and keeps the lowest within-cluster sum of
    squares (first restart wins ties). Each restart iterates until labels stop
    changing or ``max_iter`` is reached. Deterministic in ``(batch, k, seed)``.
    """
    x = as_batch(batch, min_samples=1)
    n = x.shape[0]
    if not 2 <= k <= n:
        raise InvalidInputError(f"k must be in [2, {n}], got {k}")
    if n_init < 1:
        raise InvalidInputError("n_init must be positive")
    base = np.random.Philox(key=int(seed) & (2**64 - 1))
    best = None
    for restart in range(n_init):
        rng = np.random.Generator(base.jumped(restart))
        centers = _kmeans_pp(x, k, rng)
        labels, centers, inertia, n_iter = _lloyd(x, centers, max_iter)
        if best is None or inertia < best.inertia:
            best = ClusterAssignment(labels, centers, inertia, n_iter)
    return best


def _check_assignment(x: np.ndarray, assignment: ClusterAssignment):
    labels = np.asarray(assignment.labels)
    k = assignment.k
    n = x.shape[0]
    if labels.shape != (n,):
        raise InvalidInputError(f"assignment has {labels.size} labels for {n} samples")
    if np.any(labels < 0) or np.any(labels >= k):
        raise InvalidInputError("cluster label out of range")
    if n <= k:
        raise InvalidInputError(f"need more samples than clusters (N={n}, k={k})")
    return labels, k


def _ratio(between: float, within: float, k: int, n: int) -> float:
    if within == 0.0:
        if between == 0.0:
            raise InvalidInputError("zero within- and between-cluster scatter")
        return math.inf
    return (between / (k - 1)) / (within / (n - k))


def f_test(batch, assignment: ClusterAssignment) -> float:
    """One-way ANOVA F on Euclidean scatter: ``[SSB/(k-1)] / [SSW/(N-k)]``.

    Group means are recomputed from the labels. SSB and SSW sum squared
    distances over all coordinates.
    """
    x = as_batch(batch)
    labels, k = _check_assignment(x, assignment)
    n = x.shape[0]
    grand = x.mean(axis=0)
    ssb = 0.0
    ssw = 0.0
    for j in range(k):
        members = x[labels == j]
        if members.shape[0] == 0:
            continue
        mu = members.mean(axis=0)
        ssb += members.shape[0] * float(np.sum((mu - grand) ** 2))
        ssw += float(np.sum((members - mu) ** 2))
    return _ratio(ssb, ssw, k, n)


def calinski_harabasz(batch, assignment: ClusterAssignment) -> float:
    """``[tr(B)/(k-1)] / [tr(W)/(N-k)]`` from the between/within scatter matrices."""
    x = as_batch(batch)
    labels, k = _check_assignment(x, assignment)
    n, d = x.shape
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1.0
    counts = onehot.sum(axis=0)
    present = counts > 0
    means = (onehot.T @ x)[present] / counts[present, None]
    centered_means = means - x.mean(axis=0)
    between = (centered_means * counts[present, None]).T @ centered_means
    resid = x - (onehot[:, present] @ means)
    within = resid.T @ resid
    return _ratio(float(np.trace(between)), float(np.trace(within)), k, n)


def dispersion_report(batch, k: int = 4, m: int = 2, seed: int = 0) -> DispersionReport:
    """All dispersion metrics for one embedding set.

    Metrics that are undefined on this input come back as ``None`` with a
    reason; invalid ``k`` or ``m`` still raise.
    """
    x = as_batch(batch)
    n, d = x.shape
    if not 1 <= m <= d:
        raise InvalidInputError(f"m must be in [1, {d}], got {m}")
    if not 2 <= k < n:
        raise InvalidInputError(f"k must be in [2, {n - 1}] for N={n}, got {k}")
    undefined: dict[str, str] = {}

    try:
        gini = gini_trace(x)
    except DegenerateSpectrumError as exc:
        gini = None
        undefined["gini_index"] = str(exc)
    try:
        ratio = top_m_eigenvalue_ratio(x, m)
    except DegenerateSpectrumError as exc:
        ratio = None
        undefined["top_m_eigenvalue_ratio"] = str(exc)

    assignment = kmeans(x, k, seed=seed)
    scores = {}
    for name, fn in (("f_test", f_test), ("calinski_harabasz", calinski_harabasz)):
        try:
            value = fn(x, assignment)
        except InvalidInputError as exc:
            value = None
            undefined[name] = str(exc)
        else:
            if not math.isfinite(value):
                undefined[name] = "zero within-cluster scatter (score is infinite)"
                value = None
        scores[name] = value

    return DispersionReport(
        gini_index=gini,
        top_m_eigenvalue_ratio=ratio,
        m=m,
        f_test=scores["f_test"],
        calinski_harabasz=scores["calinski_harabasz"],
        k=k,
        n_samples=n,
        dim=d,
        undefined=undefined,
    )
