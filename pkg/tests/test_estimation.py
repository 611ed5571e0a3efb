"""Spectrum estimation: sampling determinism, concentration helpers, CSV IO."""

import math

import numpy as np
import pytest

from latentstop.estimation import (
    SampleSet,
    chi2_deviation_bound,
    empirical_covariance,
    empirical_variances,
    epsilon_u,
    load_samples_csv,
    s_of_sigma,
    sample_gaussian,
    save_samples_csv,
)
from latentstop.frechet import GaussianModel, Spectrum


@pytest.fixture
def model():
    return GaussianModel.from_spectrum(Spectrum((4.0, 1.0, 0.25), flavor="true"))


def test_sampling_is_deterministic(model):
    a = sample_gaussian(model, 50, seed=3)
    b = sample_gaussian(model, 50, seed=3)
    assert np.array_equal(a.data, b.data)
    c = sample_gaussian(model, 50, seed=4)
    assert not np.array_equal(a.data, c.data)


def test_sample_moments_within_five_stderr(model):
    n = 100000
    samples = sample_gaussian(model, n, seed=11)
    for j, v in enumerate((4.0, 1.0, 0.25)):
        emp = float(np.mean(samples.data[:, j] ** 2))
        se = v * math.sqrt(2.0 / n)
        assert abs(emp - v) <= 5.0 * se
    # mean of each coordinate
    for j, v in enumerate((4.0, 1.0, 0.25)):
        assert abs(float(np.mean(samples.data[:, j]))) <= 5.0 * math.sqrt(v / n)


def test_empirical_variances_are_sorted_spectrum(model):
    samples = sample_gaussian(model, 5000, seed=2)
    est = empirical_variances(samples)
    assert est.flavor == "estimated"
    assert all(a >= b for a, b in zip(est.variances, est.variances[1:]))


def test_zero_variance_components_stay_zero():
    model = GaussianModel.from_spectrum(Spectrum((1.0, 0.0, 0.0), flavor="true"))
    samples = sample_gaussian(model, 200, seed=5)
    assert np.all(samples.data[:, 1:] == 0.0)
    est = empirical_variances(samples)
    assert est.variances[1] == 0.0
    assert est.variances[2] == 0.0


def test_empirical_covariance_recovers_block():
    model = GaussianModel.from_spectrum(Spectrum((2.0, 0.5, 0.0), flavor="true"))
    samples = sample_gaussian(model, 50000, seed=7)
    fitted = empirical_covariance(samples)
    cov = fitted.covariance
    assert cov[2, 2] == 0.0
    assert cov[0, 2] == 0.0
    assert abs(cov[0, 0] - 2.0) <= 5.0 * 2.0 * math.sqrt(2.0 / 50000)
    assert abs(cov[0, 1]) <= 5.0 * math.sqrt(2.0 * 0.5 / 50000)


def test_sample_set_validation():
    with pytest.raises(ValueError):
        SampleSet(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        SampleSet(np.zeros(5))


def test_epsilon_u_reference_value():
    # (8/3) (sqrt((D+u)/n) + (D+u)/n) at n=1e4, D=10, u=ln(40)
    u = math.log(40.0)
    r = (10.0 + u) / 1e4
    expected = (8.0 / 3.0) * (math.sqrt(r) + r)
    assert epsilon_u(10000, 10, u) == pytest.approx(expected, abs=1e-15)
    assert epsilon_u(10000, 10, u) == pytest.approx(0.10231299643527156, abs=1e-12)


def test_epsilon_u_scales_with_constant():
    assert epsilon_u(100, 2, 1.0, Cuniv=2.0) == pytest.approx(
        2.0 * epsilon_u(100, 2, 1.0), abs=1e-15
    )


def test_epsilon_u_validation():
    with pytest.raises(ValueError):
        epsilon_u(0, 2, 1.0)
    with pytest.raises(ValueError):
        epsilon_u(100, 0, 1.0)
    with pytest.raises(ValueError):
        epsilon_u(100, 2, -1.0)


def test_chi2_bound_values():
    # eps = 1, n = 8: exponent = 8/(4*2) = 1
    assert chi2_deviation_bound(8, 1.0) == pytest.approx(2.0 / math.e, abs=1e-15)
    assert chi2_deviation_bound(10000, 0.1) == pytest.approx(
        2.0 * math.exp(-100.0 / 4.4), rel=1e-12
    )


def test_chi2_bound_shrinks_with_n():
    assert chi2_deviation_bound(20000, 0.05) < chi2_deviation_bound(10000, 0.05)


def test_spectrum_sum_weight():
    spec = Spectrum((4.0, 0.25), flavor="true")
    # max(2, 4) + max(0.5, 0.0625)
    assert s_of_sigma(spec) == pytest.approx(4.5, abs=1e-15)


def test_samples_csv_round_trip(tmp_path, model):
    samples = sample_gaussian(model, 37, seed=9)
    path = tmp_path / "samples.csv"
    save_samples_csv(samples, str(path))
    header = path.read_text().splitlines()[0]
    assert header == "x1,x2,x3"
    loaded = load_samples_csv(str(path))
    assert np.array_equal(loaded.data, samples.data)


def test_samples_csv_rejects_bad_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b\n1.0,2.0\n")
    with pytest.raises(ValueError):
        load_samples_csv(str(path))


def test_samples_csv_rejects_empty(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("x1,x2\n")
    with pytest.raises(ValueError):
        load_samples_csv(str(path))
