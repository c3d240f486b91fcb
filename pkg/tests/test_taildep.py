import math

import numpy as np
import pytest
from scipy.stats import norm

from msextrap.errors import CalibrationError, DomainError, FactorizationError
from msextrap.taildep import (
    EG_THETA_MAX,
    ModelKind,
    ModelSpec,
    calibrate_sigma,
    cholesky_jitter,
    complete_dependence,
    extremal_coefficient,
    gaussian_covariance,
    independence,
    l_bivariate_eg,
    l_bivariate_hr,
    l_mc_eg,
    l_mc_log_gaussian,
    model_tdf,
    pair_tdf,
    pair_variogram,
)

TABLE = {  # theta -> (BR, Smith, EG)
    1.3: (0.771, 1.298, 5.039),
    1.6: (1.683, 0.594, 0.786),
    1.7: (2.073, 0.482, 0.256),
}


@pytest.mark.parametrize("theta", sorted(TABLE))
def test_calibration_table(theta):
    got = [round(calibrate_sigma(k, theta), 3) for k in ("br", "smith", "eg")]
    assert got == list(TABLE[theta])


@pytest.mark.parametrize("kind", ["br", "smith", "eg"])
def test_calibration_roundtrip(kind):
    for theta in np.arange(1.1, 1.95, 0.1):
        if kind == "eg" and theta >= EG_THETA_MAX:
            with pytest.raises(CalibrationError):
                calibrate_sigma(kind, theta)
            continue
        s = calibrate_sigma(kind, theta)
        assert extremal_coefficient(ModelSpec(kind, s), 1.0) == pytest.approx(theta, abs=1e-9)


def test_calibration_rejects_out_of_range():
    for bad in (1.0, 2.0, 0.5):
        with pytest.raises(CalibrationError):
            calibrate_sigma("br", bad)
    with pytest.raises(CalibrationError):
        calibrate_sigma("eg", 1.8)


def test_extremal_coefficient_values():
    assert extremal_coefficient(ModelSpec("br", 1.683), 1) == pytest.approx(1.6, abs=1e-3)
    assert extremal_coefficient(ModelSpec("smith", 0.482), 1) == pytest.approx(1.7, abs=1e-3)
    for k in ModelKind:
        assert extremal_coefficient(ModelSpec(k, 0.9), 0.0) == 1.0
    h = np.array([0.5, 1, 4])
    assert extremal_coefficient(ModelSpec("eg", 2.0), h).shape == (3,)
    with pytest.raises(DomainError):
        extremal_coefficient(ModelSpec("br", 1.0), -1)


def test_hr_closed_form():
    g = 0.771**2 / 2
    assert l_bivariate_hr(1, 1, g) == pytest.approx(2 * norm.cdf(0.771 / 2))
    assert l_bivariate_hr(1, 1, g) == pytest.approx(1.3, abs=1e-3)
    assert l_bivariate_hr(1, 1, 1e6) == pytest.approx(2.0, abs=1e-6)
    assert l_bivariate_hr(1, 1, 1e-12) == pytest.approx(1.0, abs=1e-5)
    assert l_bivariate_hr(0, 2.5, 1.0) == 2.5
    with pytest.raises(DomainError):
        l_bivariate_hr(1, 1, 0.0)


def test_eg_closed_form():
    assert l_bivariate_eg(0.3, 2.0, 1.0) == pytest.approx(2.0)
    assert l_bivariate_eg(1, 1, 0.0) == pytest.approx(1 + 1 / math.sqrt(2))
    assert l_bivariate_eg(1, 1, math.exp(-1 / 5.039)) == pytest.approx(1.3, abs=1e-3)
    with pytest.raises(DomainError):
        l_bivariate_eg(1, 1, 1.01)


def test_mc_log_gaussian_matches_hr(rng):
    s = ModelSpec("br", 1.2)
    cov = gaussian_covariance(s, [3.0, 5.0])
    for x in ([1, 1], [0.3, 2.0], [4, 1]):
        est = l_mc_log_gaussian(x, cov, np.diag(cov), rng, 100_000)
        ref = l_bivariate_hr(*x, float(pair_variogram(s, 2)))
        assert abs(est.value - ref) < 3 * est.se


def test_mc_eg_matches_closed_form(rng):
    est = l_mc_eg([1, 1], np.eye(2), rng, 100_000)
    assert abs(est.value - (1 + 1 / math.sqrt(2))) < 3 * est.se
    rho = 0.6
    est = l_mc_eg([2, 0.5], np.array([[1, rho], [rho, 1]]), rng, 100_000)
    assert abs(est.value - l_bivariate_eg(2, 0.5, rho)) < 3 * est.se


def test_mc_normalization(rng):
    est = l_mc_log_gaussian([2.5], np.array([[0.7]]), [0.7], rng, 100_000)
    assert abs(est.value - 2.5) < 3 * est.se
    est = l_mc_eg([1.0], np.eye(1), rng, 100_000)
    assert abs(est.value - 1.0) < 3 * est.se
    assert l_mc_eg([0, 0], np.eye(2), rng).value == 0.0
    assert l_mc_log_gaussian([0, 0], np.eye(2), [1, 1], rng).value == 0.0
    with pytest.raises(DomainError):
        l_mc_eg([1.0], np.eye(1), rng, 10)


def _evaluators(rng):
    yield pair_tdf(ModelSpec("br", 1.683), 1.0)
    yield pair_tdf(ModelSpec("smith", 0.482), 2.0)
    yield pair_tdf(ModelSpec("eg", 0.786), 1.0)
    for k, s in (("br", 1.683), ("smith", 0.594), ("eg", 0.786)):
        yield model_tdf(ModelSpec(k, s), [1.0, 2.0, 4.0], rng, 20_000)
    yield independence(3)
    yield complete_dependence(3)


def test_tdf_invariants(rng):
    for l in _evaluators(rng):
        xs = rng.exponential(size=(100, l.n))
        for x in xs:
            v = l(x)
            assert x.max() - 1e-12 <= v <= x.sum() + 1e-12
            for c in (0.5, 2.0, 10.0):
                assert l(c * x) == pytest.approx(c * v, rel=1e-12)
            # monotone
            assert l(x + rng.exponential(size=l.n)) >= v - 1e-12
        for j in range(l.n):
            e = np.zeros(l.n)
            e[j] = 1
            assert l(e) == pytest.approx(1.0, abs=1e-12)


def test_extended_vector_bounds(rng):
    l = model_tdf(ModelSpec("br", 1.683), [1.0, 2.0, 3.0], rng, 20_000)
    for _ in range(50):
        w = rng.exponential(size=2)
        a = l(np.r_[0.0, w])
        b = l(np.r_[1.0, w])
        assert a <= b <= 1 + a + 1e-12


def test_cholesky_jitter():
    near = np.ones((3, 3))  # rank one
    chol = cholesky_jitter(near)
    assert np.allclose(chol @ chol.T, near, atol=1e-5)
    with pytest.raises(FactorizationError):
        cholesky_jitter(-np.eye(2))


def test_tdf_rejects_bad_input():
    l = independence(2)
    with pytest.raises(DomainError):
        l([1.0, 2.0, 3.0])
    with pytest.raises(DomainError):
        l([-1.0, 2.0])
    with pytest.raises(DomainError):
        ModelSpec("br", -1.0)
    with pytest.raises(DomainError):
        ModelSpec("nope", 1.0)
