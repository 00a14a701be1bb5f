"""Fit the (peak value, peak week) prior from historical seasons."""

from __future__ import annotations

import logging

import numpy as np

from .config import ZPrior

log = logging.getLogger(__name__)

SINGULAR_INFLATION = 1e-8


def fit_z_prior(history, piv_upper: float = 1.0, pit_bounds=(1.0, 35.0)) -> ZPrior:
    """Sample mean and (unbiased) sample covariance of historical peaks.

    The lower truncation of the peak value is left to the initial prevalence
    the prior is later conditioned on. A singular covariance gets its
    diagonal inflated by 1e-8 with a logged warning.
    """
    h = np.asarray(history, dtype=float)
    if h.ndim != 2 or h.shape[1] != 2:
        raise ValueError("history must be a sequence of (peak_value, peak_week) pairs")
    if len(h) < 2:
        raise ValueError("need at least two historical seasons")
    mean = h.mean(axis=0)
    cov = np.cov(h, rowvar=False, ddof=1)
    eig = np.linalg.eigvalsh(cov)
    if not eig.min() > 1e-12 * max(eig.max(), 1e-300):
        log.warning("historical peak covariance is singular; inflating the diagonal by %g",
                    SINGULAR_INFLATION)
        cov = cov + SINGULAR_INFLATION * np.eye(2)
    return ZPrior(mean=tuple(mean.tolist()), cov=tuple(map(tuple, cov.tolist())),
                  piv_upper=piv_upper, pit_bounds=tuple(pit_bounds))
