import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from tcdiv.covariance import (CorrelationMatrix, EigenStructure,
                              OneRingGeometry, bai_logdet_lower,
                              complex_normal, eigen_decompose,
                              one_ring_correlation, sample_channel,
                              support_intervals, support_measure,
                              support_rank, szego_logdet_rate,
                              szego_spectrum)
from tcdiv.exceptions import DomainError, ValidationError


def trapezoid_lags(geom, n=200001):
    a = np.linspace(-geom.delta, geom.delta, n)
    k = np.arange(geom.antennas)[:, None]
    vals = np.exp(2j * np.pi * geom.spacing * k * np.sin(a + geom.theta))
    return np.trapezoid(vals, a, axis=1) / (2 * geom.delta)


def test_geometry_validation():
    with pytest.raises(ValidationError):
        OneRingGeometry(0.0, 0.0)
    with pytest.raises(ValidationError):
        OneRingGeometry(0.0, 0.1, spacing=-1.0)
    with pytest.raises(ValidationError):
        OneRingGeometry(4.0, 0.1)
    g = OneRingGeometry.from_degrees(30, 5, 0.5, 16)
    assert g.theta == pytest.approx(math.pi / 6)
    assert g.antennas == 16


def test_unit_diagonal_and_toeplitz():
    r = one_ring_correlation(OneRingGeometry.from_degrees(20, 7, 0.5, 12)).entries
    assert np.allclose(np.diag(r), 1.0, atol=1e-14)
    for k in range(1, 12):
        d = np.diag(r, -k)
        assert np.max(np.abs(d - d[0])) < 1e-14
    assert np.max(np.abs(r - r.conj().T)) <= 1e-12


def test_matches_trapezoid_oracle():
    g = OneRingGeometry.from_degrees(0, 10, 0.5, 8)
    r = one_ring_correlation(g).entries
    assert np.max(np.abs(r[:, 0] - trapezoid_lags(g))) < 1e-8


def test_small_spread_is_rank_one():
    g = OneRingGeometry(0.3, 1e-6, 0.5, 6)
    r = one_ring_correlation(g).entries
    k = np.arange(6)
    steer = np.exp(2j * np.pi * 0.5 * k * math.sin(0.3))
    assert np.max(np.abs(r - np.outer(steer, steer.conj()))) < 1e-9
    es = eigen_decompose(r)
    assert es.effective_rank == 1
    assert es.eigenvalues[0] == pytest.approx(6.0, abs=1e-12)


def test_random_geometries_are_valid():
    rng = np.random.default_rng(3)
    for _ in range(200):
        g = OneRingGeometry(rng.uniform(-math.pi, math.pi),
                            rng.uniform(1e-3, math.pi / 2),
                            rng.uniform(0.1, 1.5), int(rng.integers(1, 24)))
        cm = one_ring_correlation(g)
        cm.validate()
        ev = np.linalg.eigvalsh(cm.entries)
        assert ev[0] >= -1e-8 * ev[-1]
        assert np.real(np.trace(cm.entries)) == pytest.approx(g.antennas, abs=1e-12)


def test_correlation_json_roundtrip():
    cm = one_ring_correlation(OneRingGeometry.from_degrees(15, 5, 0.5, 6))
    back = CorrelationMatrix.from_json(cm.to_json())
    assert np.array_equal(back.entries, cm.entries)


def test_eigen_decompose_identity():
    es = eigen_decompose(np.eye(5))
    assert es.effective_rank == 5
    assert np.allclose(es.eigenvalues, 1.0)
    assert np.allclose(es.basis, np.eye(5))


def test_eigen_decompose_invariants():
    r = one_ring_correlation(OneRingGeometry.from_degrees(-25, 12, 0.5, 32)).entries
    es = eigen_decompose(r)
    u = es.basis
    assert np.max(np.abs(u.conj().T @ u - np.eye(es.effective_rank))) <= 1e-10
    assert np.sum(es.eigenvalues) == pytest.approx(32.0, abs=1e-10)
    assert np.all(np.diff(es.eigenvalues) <= 0)
    # reconstruction of the truncated matrix before the trace rescaling
    ev = np.linalg.eigvalsh(r)[::-1][:es.effective_rank]
    recon = (u * ev) @ u.conj().T
    assert np.linalg.norm(recon - r) <= 1e-6 * np.linalg.norm(r)


def test_eigen_decompose_rejects_indefinite():
    with pytest.raises(ValidationError):
        eigen_decompose(np.diag([1.0, -0.5]))


def test_eigen_decompose_deterministic_ties():
    a = eigen_decompose(np.eye(4) * 2.0)
    b = eigen_decompose(np.eye(4) * 2.0)
    assert np.array_equal(a.basis, b.basis)


def test_effective_rank_against_support():
    g = OneRingGeometry.from_degrees(0, 15, 0.5, 32)
    r = one_ring_correlation(g)
    # the default 1e-8 floor keeps the slowly decaying tail; a dominant
    # threshold recovers the support-length rule
    dominant = eigen_decompose(r, truncation=0.5)
    assert abs(dominant.effective_rank - support_measure(g) * 32) <= 2
    assert eigen_decompose(r).effective_rank > dominant.effective_rank


def test_szego_outside_support_is_zero():
    g = OneRingGeometry.from_degrees(0, 3, 0.5)
    assert szego_spectrum(g, 0.49) == 0.0
    with pytest.raises(DomainError):
        szego_spectrum(g, 0.7)


@pytest.mark.parametrize("theta,delta", [(0, 10), (30, 5), (60, 40), (80, 20), (-45, 8)])
def test_szego_integrates_to_one(theta, delta):
    g = OneRingGeometry.from_degrees(theta, delta, 0.5)
    total = 0.0
    for a, b in support_intervals(g):
        # scipy's QUADPACK handles the inverse square-root edges
        total += quad(lambda x: float(szego_spectrum(g, x)), a, b, limit=200)[0]
    assert total == pytest.approx(1.0, abs=1e-6)


def test_szego_lag_is_fourier_coefficient():
    g = OneRingGeometry.from_degrees(20, 10, 0.5, 4)
    lags = one_ring_correlation(g).entries[:, 0]
    for k in (1, 2, 3):
        re = sum(quad(lambda x: float(szego_spectrum(g, x)) * math.cos(2 * math.pi * k * x),
                      a, b, limit=200)[0] for a, b in support_intervals(g))
        im = sum(quad(lambda x: float(szego_spectrum(g, x)) * math.sin(2 * math.pi * k * x),
                      a, b, limit=200)[0] for a, b in support_intervals(g))
        # R[k, 0] = int S(xi) exp(-j 2 pi k xi) d xi
        assert abs(lags[k] - (re - 1j * im)) < 1e-6


def test_support_measure_value():
    g = OneRingGeometry.from_degrees(0, 10, 0.5)
    assert support_measure(g) == pytest.approx(math.sin(math.radians(10)), abs=1e-12)
    g2 = OneRingGeometry.from_degrees(0, 10, 0.5, 64)
    assert support_rank(g2) == round(64 * math.sin(math.radians(10)))


def test_szego_logdet_rate_reference():
    g = OneRingGeometry.from_degrees(0, 10, 0.5)
    # oracle: scipy quad of ln S per support interval
    ref = sum(quad(lambda x: math.log(float(szego_spectrum(g, x))), a, b, limit=400)[0]
              for a, b in support_intervals(g))
    assert szego_logdet_rate(g) == pytest.approx(ref, abs=1e-7)


def test_szego_rate_shrinks_with_spread():
    vals = [szego_logdet_rate(OneRingGeometry.from_degrees(30, d, 0.5))
            for d in (8, 5, 3, 1)]
    assert all(np.isfinite(vals))
    assert all(a > b for a, b in zip(vals, vals[1:]))


def test_szego_mean_log_eigenvalue_m256():
    g = OneRingGeometry.from_degrees(0, 10, 0.5, 256)
    es = eigen_decompose(one_ring_correlation(g), rank=support_rank(g))
    mean_log = es.logdet / es.effective_rank
    target = szego_logdet_rate(g) / support_measure(g)
    assert abs(mean_log - target) <= 0.05 * abs(target)


def test_bai_logdet_lower_flat():
    assert bai_logdet_lower(4.0, 8, 2, 4) == pytest.approx(2 * math.log(4.0))


def test_bai_logdet_lower_random_spectra():
    rng = np.random.default_rng(8)
    lam_min, M, r, G = 0.5, 64, 16, 4
    bound = bai_logdet_lower(lam_min, M, r, G)
    for _ in range(100):
        w = rng.dirichlet(np.ones(r - 1))
        rest = lam_min + w * (M - r * lam_min)
        spec = np.concatenate([rest, [lam_min]])
        assert spec.sum() == pytest.approx(M)
        assert bound <= np.sum(np.log(spec)) + 1e-9


def test_bai_logdet_lower_large_r():
    lam_min, r = 0.5, 1000
    M = 1000
    assert bai_logdet_lower(lam_min, M, r, 1) / M >= math.log(lam_min) - 1e-2
    with pytest.raises(DomainError):
        bai_logdet_lower(0.5, 8, 4, 4)


def test_complex_normal_moments():
    z = complex_normal(np.random.default_rng(0), (200000,))
    assert np.mean(np.abs(z) ** 2) == pytest.approx(1.0, abs=0.01)
    assert abs(np.mean(z * z)) < 0.01


def test_sample_channel_covariance():
    g = OneRingGeometry.from_degrees(10, 20, 0.5, 6)
    es = eigen_decompose(one_ring_correlation(g))
    h = sample_channel(es, 100000, np.random.default_rng(1))
    emp = h @ h.conj().T / h.shape[1]
    ref = es.covariance()
    assert np.linalg.norm(emp - ref) <= 0.02 * np.linalg.norm(ref)


def test_sample_channel_rank_one_and_determinism():
    es = EigenStructure(np.ones((4, 1)) / 2.0, np.array([4.0]))
    h = sample_channel(es, 10, 5)
    ratio = h / h[0]
    assert np.allclose(ratio, 1.0)
    assert np.array_equal(sample_channel(es, 10, 5), h)


@settings(max_examples=40, deadline=None)
@given(st.floats(-3.0, 3.0), st.floats(0.01, 1.5), st.integers(1, 16))
def test_property_hermitian_psd(theta, delta, m):
    cm = one_ring_correlation(OneRingGeometry(theta, delta, 0.5, m))
    ev = np.linalg.eigvalsh(cm.entries)
    assert ev[0] >= -1e-8 * ev[-1]
    es = eigen_decompose(cm)
    assert np.sum(es.eigenvalues) == pytest.approx(m, abs=1e-10)
