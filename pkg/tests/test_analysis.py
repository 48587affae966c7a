import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twocolor import analysis as an
from twocolor import sim
from twocolor.state import (
    BASES,
    DEG,
    basis_probabilities,
    basis_visibility,
    fidelity_direct,
    make_state,
    random_state,
)

seeds = st.integers(0, 2 ** 32 - 1)


def sweep_points(f, n=19):
    th = np.linspace(0, 90, n) * DEG
    return np.column_stack([th, f(th)])


def test_exact_recovery():
    fit = an.fit_sine(sweep_points(lambda t: 100 * np.sin(4 * t) + 200))
    assert (fit.amplitude, fit.phase_const, fit.offset) == pytest.approx((100, 0, 200), abs=1e-9)
    assert fit.weighted


def test_exact_recovery_with_phase():
    fit = an.fit_sine(sweep_points(lambda t: 40 * np.sin(4 * t + 1.1) + 41))
    assert (fit.amplitude, fit.phase_const, fit.offset) == pytest.approx((40, 1.1, 41), abs=1e-9)


@pytest.mark.parametrize("c0", [3.0, 250.0])
def test_constant_data(c0):
    fit = an.fit_sine(sweep_points(lambda t: np.full_like(t, c0)))
    assert fit.amplitude == pytest.approx(0.0, abs=1e-9)
    assert fit.offset == pytest.approx(c0, abs=1e-9)
    assert fit.weighted == (c0 >= 10)


def test_rank_deficient():
    with pytest.raises(an.FitError, match="rank"):
        an.fit_sine([(0.3, 5.0)] * 6)
    with pytest.raises(an.FitError):
        an.fit_sine([(0.0, 1.0), (0.1, 2.0), (0.2, 3.0)])


def test_covariance_calibrated():
    th = np.linspace(0, 90, 19) * DEG
    truth_A, truth_C = 60.0, 100.0
    mean = truth_A * np.sin(4 * th) + truth_C
    rng = np.random.default_rng(1)
    hits_A = hits_C = 0
    for _ in range(1000):
        fit = an.fit_sine(np.column_stack([th, rng.poisson(mean)]))
        hits_A += abs(fit.amplitude - truth_A) <= 3 * math.sqrt(fit.covariance[0, 0])
        hits_C += abs(fit.offset - truth_C) <= 3 * math.sqrt(fit.covariance[2, 2])
    assert hits_A >= 990 and hits_C >= 990


def _fit(a, b, c):
    return an.fit_sine(sweep_points(lambda t: a * np.sin(4 * t) + b * np.cos(4 * t) + c))


def test_visibility_examples():
    full = _fit(80.0, 0.0, 80.0)
    assert an.visibility_from_fit(full, full).value == pytest.approx(1.0, abs=1e-9)
    flat = _fit(0.0, 0.0, 80.0)
    assert an.visibility_from_fit(flat, flat).value == pytest.approx(0.0, abs=1e-9)
    with pytest.raises(an.FitError):
        an.visibility_from_fit(_fit(0.0, 0.0, 0.0), full)


def test_signed_visibility():
    # peak of fixed-i curve at θ_i = 0 (cos term), trough of fixed-j curve at θ_j = 45°
    fi, fj = _fit(0.0, 50.0, 100.0), _fit(0.0, 50.0, 100.0)
    v = an.visibility_from_fit(fi, fj, 0.0, 45 * DEG)
    assert v.v_i == pytest.approx(0.5) and v.v_j == pytest.approx(-0.5)
    assert v.value == pytest.approx(0.0, abs=1e-12)


def test_phi_plus_da_visibility():
    recs = sim.simulate_hwp_sweep(make_state(0.0, 1.0), "DA", sim.sweep_angles(19), sim.SourceConfig(),
                                  noiseless=True)
    _, _, v = an.fit_basis(an.group_records(recs)["DA"])
    assert v.value == pytest.approx(1.0, abs=1e-6)


def test_report_examples():
    r = an.fidelity_report({"HV": (1, 0), "DA": (1, 0), "LR": (-1, 0)})
    assert r.fidelity == 1.0 and r.entangled
    r = an.fidelity_report({"HV": (0, 0), "DA": (0, 0), "LR": (0, 0)})
    assert r.fidelity == 0.25 and not r.entangled


def test_report_sigma_and_verdict():
    r = an.fidelity_report({"HV": (0.9, 0.06), "DA": (0.1, 0.06), "LR": (-0.1, 0.06)})
    assert r.fidelity == pytest.approx(0.525)
    assert r.sigma == pytest.approx(0.25 * math.sqrt(3) * 0.06)
    assert not r.entangled     # F > ½ but not by one σ
    r2 = an.fidelity_report({"HV": (0.9, 0.04), "DA": (0.1, 0.04), "LR": (-0.1, 0.04)})
    assert r2.entangled


def test_missing_basis():
    with pytest.raises(an.IncompleteDataError, match="LR"):
        an.fidelity_report({"HV": (1, 0), "DA": (1, 0)})
    recs = sim.simulate_dataset(make_state(0.0, 1.0), sim.SourceConfig(), 1, bases=("HV", "DA"))
    with pytest.raises(an.IncompleteDataError, match="LR"):
        an.analyze_records(recs)


def test_unphysical_flagged_not_clamped():
    with pytest.warns(an.UnphysicalFidelityWarning):
        r = an.fidelity_report({"HV": (1, 0), "DA": (1, 0), "LR": (-1.4, 0)})
    assert r.fidelity == pytest.approx(1.1) and not r.physical


@given(seed=seeds, arm=st.sampled_from(["signal", "idler"]))
def test_pipeline_identity(seed, arm):
    rho = random_state(np.random.default_rng(seed))
    recs = sim.simulate_dataset(rho, sim.SourceConfig(), bases=("HV", "DA", "LR"), noiseless=True, swept_arm=arm)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", an.UnphysicalFidelityWarning)
        rep = an.analyze_records(recs)
    assert rep.fidelity == pytest.approx(fidelity_direct(rho), abs=1e-6)


@given(seed=seeds)
def test_fit_visibility_equals_count_visibility(seed):
    rho = random_state(np.random.default_rng(seed))
    recs = sim.simulate_dataset(rho, sim.SourceConfig(), points=17, noiseless=True)
    groups = an.group_records(recs)
    for b in BASES:
        _, _, v = an.fit_basis(groups[b])
        assert v.value == pytest.approx(basis_visibility(*basis_probabilities(rho, b)), abs=1e-9)
        # the record at θ_i holds the four basis counts themselves
        quarter_turn = 90 * DEG   # the curves repeat every 90 degrees of HWP rotation
        rec = [r for r in recs if r.basis_label == b
               and abs((r.hwp_angle_signal - groups[b].theta_i) % quarter_turn) < 1e-9]
        assert v.value == pytest.approx(basis_visibility(*rec[0].counts), abs=1e-9)


@given(seed=st.integers(0, 1000), k=st.floats(1.0, 100.0))
def test_rate_independence(seed, k):
    recs = sim.simulate_dataset(make_state(0.0, 0.6), sim.SourceConfig(), seed=seed)
    scaled = [sim.CountRecord(r.basis_label, r.hwp_angle_signal, r.hwp_angle_idler, r.qwp_flags,
                              r.integration_time, tuple(k * n for n in r.counts), r.seed) for r in recs]
    assert an.analyze_records(scaled).fidelity == pytest.approx(an.analyze_records(recs).fidelity, abs=1e-9)


@pytest.fixture(scope="module")
def noiseless_records():
    return sim.simulate_dataset(make_state(0.0, 0.506), sim.SourceConfig(), noiseless=True)


def test_bootstrap_matches_analytic(noiseless_records):
    rep = an.analyze_records(noiseless_records)
    boot = an.bootstrap_uncertainty(noiseless_records, 1000, seed=5)
    assert boot == pytest.approx(rep.sigma, rel=0.2)


def test_bootstrap_deterministic(noiseless_records):
    assert an.bootstrap_uncertainty(noiseless_records, 100, 3) == an.bootstrap_uncertainty(noiseless_records, 100, 3)
    with pytest.raises(ValueError):
        an.bootstrap_uncertainty(noiseless_records, 50, 3)


def test_bootstrap_poisson_scaling(noiseless_records):
    big = sim.simulate_dataset(make_state(0.0, 0.506), sim.SourceConfig(integration_time=100.0), noiseless=True)
    ratio = an.bootstrap_uncertainty(noiseless_records, 400, 1) / an.bootstrap_uncertainty(big, 400, 1)
    assert 8.0 <= ratio <= 12.0


def test_oscillation_fit_exact():
    x = np.linspace(0, 10, 41)
    y = 100 + 50 * np.cos(2 * np.pi * x / 3.3 + 0.4)
    fit = an.fit_oscillation(x, y)
    assert fit.period == pytest.approx(3.3, rel=1e-6)
    assert fit.amplitude == pytest.approx(50, rel=1e-6)
