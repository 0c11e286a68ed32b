"""Timing harness comparing three routes to the same Gini index.

* ``eigen``: covariance, Jacobi eigenvalues, Gini of the normalized spectrum.
* ``direct``: covariance, then ``tr(K)`` and ``||K||_F^2``, ``O(D^2 N)``.
* ``gram``: the same traces from the ``N x N`` Gram matrix, ``O(N^2 D)``.

All three must agree before anything is timed.
"""

from __future__ import annotations

import statistics
import time
from dataclasses import asdict, dataclass

import numpy as np

from .errors import ConsistencyError, InvalidInputError
from .linalg import covariance, gram_traces, sym_eigenvalues, trace, trace_of_square
from .loss import gini_from_spectrum, gini_from_traces

AGREEMENT_ATOL = 1e-8
TIMING_FIELDS = ("eigen_seconds", "direct_seconds", "gram_seconds", "gram_speedup_vs_eigen")


def gini_eigen_path(x: np.ndarray) -> float:
    return gini_from_spectrum(sym_eigenvalues(covariance(x), method="jacobi"))


def gini_direct_path(x: np.ndarray) -> float:
    k = covariance(x)
    return gini_from_traces(trace(k), trace_of_square(k))


def gini_gram_path(x: np.ndarray) -> float:
    return gini_from_traces(*gram_traces(x))


PATHS = {"eigen": gini_eigen_path, "direct": gini_direct_path, "gram": gini_gram_path}


@dataclass
class BenchRow:
    dim: int
    n: int
    repeats: int
    gini: float
    max_disagreement: float
    eigen_seconds: float
    direct_seconds: float
    gram_seconds: float
    gram_speedup_vs_eigen: float


def bench_batch(dim: int, n: int, seed: int) -> np.ndarray:
    return np.random.default_rng([seed, dim, n]).standard_normal((n, dim))


def median_time(fn, x, repeats: int) -> float:
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        fn(x)
        samples.append(time.perf_counter() - start)
    return statistics.median(samples)


def run_benchmark(dims, n: int = 10, repeats: int = 5, seed: int = 0) -> list[BenchRow]:
    """Check path agreement, then time each path ``repeats`` times per dimension.

    Raises ``ConsistencyError`` if any pair of paths differs by more than
    ``AGREEMENT_ATOL`` on any batch.
    """
    dims = [int(d) for d in dims]
    if not dims or any(d < 1 for d in dims):
        raise InvalidInputError("dims must be positive integers")
    if n < 2:
        raise InvalidInputError("batch size n must be at least 2")
    if repeats < 1:
        raise InvalidInputError("repeats must be at least 1")

    rows = []
    for dim in dims:
        x = bench_batch(dim, n, seed)
        # doubles as JIT warm-up for the Jacobi kernel
        values = {name: fn(x) for name, fn in PATHS.items()}
        spread = max(values.values()) - min(values.values())
        if spread > AGREEMENT_ATOL:
            raise ConsistencyError(
                f"D={dim}: Gini paths disagree by {spread:.3e} (> {AGREEMENT_ATOL:g}): {values}"
            )
        times = {name: median_time(fn, x, repeats) for name, fn in PATHS.items()}
        rows.append(
            BenchRow(
                dim=dim,
                n=n,
                repeats=repeats,
                gini=values["gram"],
                max_disagreement=spread,
                eigen_seconds=times["eigen"],
                direct_seconds=times["direct"],
                gram_seconds=times["gram"],
                gram_speedup_vs_eigen=times["eigen"] / max(times["gram"], 1e-12),
            )
        )
    return rows


def format_table(rows: list[BenchRow]) -> str:
    head = f"{'D':>6} {'N':>4} {'gini':>10} {'eigen (s)':>12} {'direct (s)':>12} {'gram (s)':>12} {'eigen/gram':>11}"
    lines = [head, "-" * len(head)]
    for r in rows:
        lines.append(
            f"{r.dim:>6} {r.n:>4} {r.gini:>10.6f} {r.eigen_seconds:>12.3e} "
            f"{r.direct_seconds:>12.3e} {r.gram_seconds:>12.3e} {r.gram_speedup_vs_eigen:>10.1f}x"
        )
    return "\n".join(lines)


def rows_to_json(rows: list[BenchRow], seed: int) -> dict:
    return {"seed": seed, "timing_fields": list(TIMING_FIELDS), "results": [asdict(r) for r in rows]}
