import math

import numpy as np
import pytest
from scipy import integrate, stats

from peakmap.bench import HISTORICAL_MEAN, HISTORICAL_COV
from peakmap.truncnorm import LowAcceptanceError, TruncatedBvn, symmetrize


def historical_dist(i0=0.05):
    return TruncatedBvn(HISTORICAL_MEAN, HISTORICAL_COV, (i0, 1.0), (1.0, 35.0))


def test_symmetrize_uses_lower_entry():
    c = symmetrize(HISTORICAL_COV)
    assert c[0, 1] == c[1, 0] == -0.0187


def test_rejects_bad_inputs():
    with pytest.raises(ValueError):
        TruncatedBvn((0, 0), [[1, 2], [2, 1]], (-1, -1), (1, 1))
    with pytest.raises(ValueError):
        TruncatedBvn((0, 0), np.eye(2), (1, -1), (1, 1))


def test_samples_stay_in_box(rng):
    d = TruncatedBvn(HISTORICAL_MEAN, HISTORICAL_COV, (0.0002, 1.0), (1.0, 35.0))
    x = d.sample(rng, 5000)
    assert np.all(d.contains(x))


def test_untruncated_moments_when_box_is_wide(rng):
    d = TruncatedBvn((0.0, 0.0), [[1.0, 0.3], [0.3, 2.0]], (-50, -50), (50, 50))
    x = d.sample(rng, 200_000)
    np.testing.assert_allclose(x.mean(axis=0), 0.0, atol=0.02)
    np.testing.assert_allclose(np.cov(x, rowvar=False), [[1.0, 0.3], [0.3, 2.0]], atol=0.03)


def test_log_mass_matches_scipy():
    d = TruncatedBvn((0.0, 0.0), [[1.0, 0.5], [0.5, 1.0]], (-0.5, -1.0), (1.0, 2.0))
    mvn = stats.multivariate_normal([0, 0], [[1.0, 0.5], [0.5, 1.0]])
    exact = (mvn.cdf([1.0, 2.0]) - mvn.cdf([-0.5, 2.0]) - mvn.cdf([1.0, -1.0])
             + mvn.cdf([-0.5, -1.0]))
    assert math.exp(d.log_mass()) == pytest.approx(exact, abs=1e-6)


def test_density_integrates_to_one():
    d = TruncatedBvn((0.0, 0.0), [[1.0, -0.4], [-0.4, 0.5]], (-1.0, -0.5), (2.0, 1.5))
    total, _ = integrate.dblquad(lambda y, x: math.exp(d.logpdf([x, y])), -1.0, 2.0, -0.5, 1.5,
                                 epsabs=1e-9)
    assert total == pytest.approx(1.0, abs=1e-6)
    assert d.logpdf([3.0, 0.0]) == -math.inf


def test_low_acceptance_raises(rng):
    d = TruncatedBvn((0.0, 0.0), np.eye(2), (8.0, 8.0), (9.0, 9.0))
    with pytest.raises(LowAcceptanceError):
        d.sample(rng, 1)
