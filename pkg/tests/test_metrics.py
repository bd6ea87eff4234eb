import numpy as np
import pytest

from qdrepeater.cavity import IDEAL, CavityParams, resonant_coeffs
from qdrepeater.metrics import (
    CrosscheckReport,
    crosscheck,
    distribution_metrics,
    pcd_metrics,
)

from conftest import random_coeffs


def at(g, ks, gamma=0.1, delta=0.0):
    return resonant_coeffs(CavityParams(g=g, kappa_s=ks, gamma=gamma), delta)


# --- reference working points --------------------------------------------------

def test_moderate_coupling_with_leakage():
    m = distribution_metrics(at(1.2, 0.2))
    assert m.f_even == pytest.approx(0.991, abs=1e-3)
    assert m.eta_d == pytest.approx(0.770, abs=1e-3)
    assert m.f_odd == 1.0


def test_moderate_coupling_without_leakage():
    m = distribution_metrics(at(1.2, 0.0))
    assert m.f_even == pytest.approx(0.998, abs=1e-3)


def test_strong_coupling_efficiency():
    m = distribution_metrics(at(2.4, 0.0))
    assert m.eta_d == pytest.approx(0.983, abs=1e-3)


def test_even_odd_split_at_reference_point():
    m = distribution_metrics(at(1.2, 0.2))
    assert m.eta_d_even == pytest.approx(0.3866802, abs=5e-7)
    assert m.eta_d_odd == pytest.approx(0.3833780, abs=5e-7)


def test_ideal_coefficients_are_lossless():
    m = distribution_metrics(IDEAL)
    assert m.eta_d == pytest.approx(1.0)
    assert m.f_even == pytest.approx(1.0)
    assert m.eta_d_even == pytest.approx(0.5)
    assert m.eta_d_odd == pytest.approx(0.5)


def test_uncoupled_point():
    m = distribution_metrics(at(0.0, 0.1))
    assert m.eta_d_odd == 0.0
    assert m.f_even == 0.0
    p = pcd_metrics(at(0.0, 0.1))
    assert p.eta_d_odd == 0.0
    assert p.f_even == 0.0


# --- structure ------------------------------------------------------------------

def test_total_is_even_plus_odd(rng):
    for _ in range(50):
        m = distribution_metrics(random_coeffs(rng))
        assert m.eta_d == pytest.approx(m.eta_d_even + m.eta_d_odd, abs=1e-12)
        assert 0.0 <= m.eta_d <= 1.0 + 1e-12
        assert 0.0 <= m.f_even <= 1.0 + 1e-12


def test_pcd_metrics_track_distribution_metrics(rng):
    for _ in range(20):
        sc = random_coeffs(rng)
        d = distribution_metrics(sc)
        p = pcd_metrics(sc)
        assert p.eta_d_even == d.eta_d_even
        assert p.eta_d_odd == d.eta_d_odd
        assert p.eta_d == d.eta_d
        assert p.f_even == d.f_even
        assert p.f_odd == 1.0


def test_input_coupling_adjustments():
    d = distribution_metrics(IDEAL, eta_in=0.9)
    p = pcd_metrics(IDEAL, eta_in=0.9)
    assert d.eta_in_adjusted == pytest.approx(0.81)   # two photon passes
    assert p.eta_in_adjusted == pytest.approx(0.9)    # one photon pass
    assert distribution_metrics(IDEAL).eta_in_adjusted is None


def test_performance_improves_with_coupling_without_leakage():
    previous_f, previous_eta = 0.0, 0.0
    for g in np.linspace(0.6, 3.0, 13):
        m = distribution_metrics(at(float(g), 0.0))
        assert m.f_even >= previous_f - 1e-12
        assert m.eta_d >= previous_eta - 1e-12
        previous_f, previous_eta = m.f_even, m.eta_d
    assert previous_f > 0.99
    assert previous_eta > 0.98


def test_fidelity_floor_on_the_working_region():
    worst = 1.0
    for g in np.linspace(0.6, 3.0, 15):
        for ks in np.linspace(0.0, 0.2, 9):
            worst = min(worst, distribution_metrics(at(float(g), float(ks))).f_even)
    assert worst > 0.948


# --- simulation crosscheck ---------------------------------------------------------

def test_crosscheck_ideal_is_exact():
    report = crosscheck(IDEAL)
    assert report.ok
    assert report.max_deviation < 1e-12


def test_crosscheck_reference_point():
    report = crosscheck(at(1.2, 0.2))
    assert report.ok
    assert report.max_deviation < 1e-10
    assert any(r.quantity.startswith("pcd") for r in report.rows)
    assert any(r.quantity.startswith("distribute") for r in report.rows)


def test_crosscheck_random_points(rng):
    for _ in range(5):
        report = crosscheck(random_coeffs(rng))
        assert report.ok, max(report.rows, key=lambda r: r.deviation)


def test_crosscheck_threshold_is_strict():
    assert CrosscheckReport.THRESHOLD == 1e-10
