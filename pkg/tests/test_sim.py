import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twocolor import analysis, phase, sim
from twocolor.state import DEG, make_state

SIGNAL, IDLER = 894.3, 1313.1


@pytest.fixture(scope="module")
def slab():
    return phase.compensator_element(30.0)


def test_source_config_validation():
    with pytest.raises(ValueError):
        sim.SourceConfig(detection_efficiency_product=0.0)
    with pytest.raises(ValueError):
        sim.SourceConfig(integration_time=-1.0)
    c = sim.SourceConfig(pump_power=2.0, detection_efficiency_product=1e-3)
    assert c.coincidence_rate == pytest.approx(5.8e6 * 2.0 * 1e-3)


def test_jitter_limits():
    assert sim.damping_from_jitter(sim.JitterModel(temperature_sigma=0.0, phase_sensitivity=0.06)) == 1.0
    assert sim.damping_from_jitter(sim.JitterModel(temperature_sigma=1e3, phase_sensitivity=0.06)) < 1e-300


def test_jitter_anchor_from_fidelity():
    sig = sim.phase_sigma_for_damping(2 * 0.753 - 1)
    assert sig == pytest.approx(1.1672, abs=5e-4)
    j = sim.jitter_for_fidelity(0.753, phase_sensitivity=0.0624)
    assert (1 + sim.damping_from_jitter(j)) / 2 == pytest.approx(0.753, abs=1e-12)
    assert j.total_length == pytest.approx(153.0)


@given(s1=st.floats(0, 5), s2=st.floats(0, 5), f1=st.floats(0, 200), f2=st.floats(0, 200))
def test_jitter_monotonic(s1, s2, f1, f2):
    g = lambda s, f: sim.damping_from_jitter(sim.JitterModel(30.0, f, s, 0.06))
    if s1 <= s2:
        assert g(s2, f1) <= g(s1, f1)
    if f1 <= f2:
        assert g(s1, f2) <= g(s1, f1)


def test_spectrum_flat_phase():
    assert sim.damping_from_spectrum(0.0, 0.0, SIGNAL, IDLER) == 1.0


@pytest.mark.parametrize("tau_ps", [0.1, 0.5, 1.0, 2.0])
def test_spectrum_linear_phase_matches_closed_form(tau_ps):
    k = 2 * math.pi * tau_ps * 1e-3            # rad/GHz
    slope = -k * sim.C_NM_GHZ / SIGNAL ** 2    # rad/nm at the signal
    quad = sim.damping_from_spectrum(slope, 0.0, SIGNAL, IDLER, 560.0)
    assert quad == pytest.approx(sim.linear_phase_damping(tau_ps * 1e-12, 560e9), abs=1e-8)


def test_compensated_design_keeps_coherence():
    d = phase.design_compensation(SIGNAL, IDLER)
    st_ = phase.first_pass_stack(d.crystal_temperature) + phase.OpticalStack(
        (phase.compensator_element(d.optimal_length),))
    assert sim.damping_from_profile(st_, SIGNAL, d.pump_wavelength) >= 0.99
    ps, pi = phase.photon_phase_slope(st_, SIGNAL), phase.photon_phase_slope(st_, IDLER)
    assert sim.damping_from_spectrum(ps, pi, SIGNAL, IDLER) >= 0.99
    bare = phase.first_pass_stack(d.crystal_temperature)
    assert sim.damping_from_profile(bare, SIGNAL, d.pump_wavelength) < 0.5


def test_noiseless_da_sweep_shape():
    conf = sim.SourceConfig()
    th = sim.sweep_angles(19)
    recs = sim.simulate_hwp_sweep(make_state(0.0, 1.0), "DA", th, conf, noiseless=True)
    n_ii = np.array([r.counts[0] for r in recs])
    expected = conf.coincidence_rate * conf.integration_time * (1 + np.sin(4 * th)) / 4
    assert np.allclose(n_ii, expected, rtol=0, atol=1e-9)
    n_ij = np.array([r.counts[1] for r in recs])   # swept arm 45 degrees further on
    assert np.allclose(n_ij, conf.coincidence_rate * conf.integration_time * (1 - np.sin(4 * th)) / 4, atol=1e-9)


def test_zero_integration_time():
    recs = sim.simulate_dataset(make_state(0.0, 1.0), sim.SourceConfig(integration_time=0.0), seed=3)
    assert all(r.counts == (0, 0, 0, 0) for r in recs)


def test_accidentals_add_flat_background():
    conf = sim.SourceConfig(accidental_rate=50.0)
    recs = sim.simulate_hwp_sweep(make_state(0.0, 1.0), "HV", [0.0], conf, noiseless=True)
    assert recs[0].counts[1] == pytest.approx(50.0 * conf.integration_time)


def test_seeded_determinism():
    st_ = make_state(0.0, 0.5)
    a = sim.simulate_dataset(st_, sim.SourceConfig(), seed=11)
    b = sim.simulate_dataset(st_, sim.SourceConfig(), seed=11)
    c = sim.simulate_dataset(st_, sim.SourceConfig(), seed=12)
    assert [r.counts for r in a] == [r.counts for r in b]
    assert [r.counts for r in a] != [r.counts for r in c]
    assert all(isinstance(n, int) and n >= 0 for r in a for n in r.counts)
    assert all(r.seed == 11 for r in a)


def test_point_streams_independent_of_sweep_length():
    st_ = make_state(0.0, 0.5)
    short = sim.simulate_hwp_sweep(st_, "DA", sim.sweep_angles(5), sim.SourceConfig(), seed=4)
    long_ = sim.simulate_hwp_sweep(st_, "DA", sim.sweep_angles(5).tolist() + [1.0, 2.0], sim.SourceConfig(), seed=4)
    assert [r.counts for r in short] == [r.counts for r in long_[:5]]


def test_record_geometry():
    recs = sim.simulate_dataset(make_state(0.0, 1.0), sim.SourceConfig(), seed=1, swept_arm="idler")
    lr = [r for r in recs if r.basis_label == "LR"]
    assert all(r.qwp_flags == (True, True) for r in lr)
    assert len({r.hwp_angle_signal for r in lr}) == 1
    assert lr[0].hwp_angle_signal == pytest.approx(-22.5 * DEG)
    assert len({r.hwp_angle_idler for r in lr}) == 19


def test_seed_required_for_sampling():
    with pytest.raises(ValueError):
        sim.simulate_hwp_sweep(make_state(0.0, 1.0), "HV", [0.0], sim.SourceConfig(), seed=None)


def test_poisson_statistics():
    conf = sim.SourceConfig()
    recs = sim.simulate_hwp_sweep(make_state(0.0, 1.0), "HV", np.zeros(10_000), conf, seed=99)
    n = np.array([r.counts[0] for r in recs], dtype=float)
    mu = conf.coincidence_rate * conf.integration_time * 0.5
    assert abs(n.mean() - mu) <= 3 * math.sqrt(mu / 1e4)
    assert 0.9 <= n.var(ddof=1) / n.mean() <= 1.1


def test_temperature_scan_period(slab):
    t = phase.pi_shift_temperature(slab, SIGNAL, IDLER)
    T = np.linspace(20.0, 20.0 + 2 * t.pi_shift, 9)
    scan = sim.simulate_temperature_scan(slab, T, noiseless=True)
    assert scan[-1].bell_phase - scan[0].bell_phase == pytest.approx(2 * math.pi, rel=1e-3)
    assert scan[-1].counts == pytest.approx(scan[0].counts, rel=1e-5)
    assert scan[len(T) // 2].counts < 1e-3 * scan[0].counts     # AA dark at φ = π


def test_fitted_scan_period_matches_pi_shift(slab):
    t = phase.pi_shift_temperature(slab, SIGNAL, IDLER)
    T = np.linspace(20.0, 20.0 + 8 * t.pi_shift, 41)
    scan = sim.simulate_temperature_scan(slab, T, seed=7)
    fit = analysis.fit_oscillation(T, [p.counts for p in scan])
    assert fit.period == pytest.approx(2 * t.pi_shift, rel=0.05)


def test_dephased_scan_is_flat(slab):
    scan = sim.simulate_temperature_scan(slab, np.linspace(20, 30, 11), gamma=0.0, noiseless=True)
    assert np.ptp([p.counts for p in scan]) < 1e-9
