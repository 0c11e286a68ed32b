"""Gini-of-covariance-spectrum regularization for embedding batches.

Core entry points::

    from becr import gini_trace, becr_gradient, BecrConfig, dispersion_report
"""

__version__ = "0.1.0"

from .dispersion import (
    ClusterAssignment,
    DispersionReport,
    calinski_harabasz,
    dispersion_report,
    f_test,
    kmeans,
    top_m_eigenvalue_ratio,
)
from .linalg import (
    batch_spectrum,
    center_rows,
    covariance,
    gram_traces,
    sym_eigenvalues,
    trace,
    trace_of_square,
)
from .loss import (
    BecrConfig,
    BecrResult,
    bce_loss,
    becr_evaluate,
    becr_gradient,
    becr_penalty,
    gini_from_spectrum,
    gini_trace,
    gradient_check,
    total_loss,
)
