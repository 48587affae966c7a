import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from twocolor import state as s

seeds = st.integers(0, 2 ** 32 - 1)
gammas = st.floats(0.0, 1.0)
phases = st.floats(-10.0, 10.0)

H, V, D, A, L, R = (s.setting_for(x) for x in "HVDALR")


def six_probabilities(rho):
    return [s.projection_probability(rho, x, x) for x in (H, V, D, A, L, R)]


def brute_force_fidelity(rho):
    return float(np.real(s.PHI_PLUS.conj() @ rho.rho @ s.PHI_PLUS))


def test_pure_phi_plus():
    rho = s.make_state(0.0, 1.0)
    assert np.allclose(rho.rho, np.outer(s.PHI_PLUS, s.PHI_PLUS.conj()), atol=1e-15)


def test_fully_dephased():
    rho = s.make_state(1.234, 0.0)
    assert np.allclose(rho.rho, np.diag([0.5, 0, 0, 0.5]), atol=1e-15)


def test_phi_minus_orthogonal():
    assert s.fidelity_direct(s.make_state(math.pi, 1.0)) == pytest.approx(0.0, abs=1e-12)


def test_offdiagonal_sign_convention():
    rho = s.make_state(0.3, 0.8)
    assert rho.rho[0, 3] == pytest.approx(0.4 * np.exp(-0.3j), abs=1e-15)


@pytest.mark.parametrize("g", [-0.1, 1.1])
def test_damping_out_of_range(g):
    with pytest.raises(s.StateError):
        s.make_state(0.0, g)


def test_named_analyzer_vectors():
    r2 = 1 / math.sqrt(2)
    expected = {"H": (1, 0), "V": (0, 1), "D": (r2, r2), "A": (r2, -r2), "L": (r2, 1j * r2), "R": (r2, -1j * r2)}
    for label, vec in expected.items():
        m = s.setting_for(label).measured_vector()
        # equal up to a global phase
        assert abs(np.vdot(m, np.array(vec, dtype=complex))) == pytest.approx(1.0, abs=1e-12)


def test_projection_examples():
    phi = s.make_state(0.0, 1.0)
    assert s.projection_probability(phi, H, H) == pytest.approx(0.5, abs=1e-12)
    assert s.projection_probability(phi, D, D) == pytest.approx(0.5, abs=1e-12)
    assert s.projection_probability(phi, L, L) == pytest.approx(0.0, abs=1e-12)


@given(phi=phases, g=gammas)
def test_damped_dd_closed_form(phi, g):
    assert s.projection_probability(s.make_state(phi, g), D, D) == pytest.approx(
        (1 + g * math.cos(phi)) / 4, abs=1e-12)


def test_direct_fidelity_examples():
    assert s.fidelity_direct(s.make_state(0.0, 1.0)) == pytest.approx(1.0, abs=1e-12)
    assert s.fidelity_direct(s.maximally_mixed()) == pytest.approx(0.25, abs=1e-12)


@given(g=gammas)
def test_damped_fidelity(g):
    rho = s.make_state(0.0, g)
    assert s.fidelity_direct(rho) == pytest.approx((1 + g) / 2, abs=1e-12)
    assert brute_force_fidelity(rho) == pytest.approx((1 + g) / 2, abs=1e-12)


def test_probability_route_examples():
    assert s.fidelity_from_probabilities(0.5, 0.5, 0.5, 0.5, 0, 0) == 1.0
    assert s.fidelity_from_probabilities(*[0.25] * 6) == 0.25


def test_visibility_route_examples():
    assert s.fidelity_from_visibilities(1, 1, -1) == 1.0
    assert s.fidelity_from_visibilities(0, 0, 0) == 0.25


@given(g=gammas)
def test_visibility_route_damped(g):
    assert s.fidelity_from_visibilities(1, g, -g) == pytest.approx(s.fidelity_direct(s.make_state(0.0, g)),
                                                                   abs=1e-12)
    v = s.visibilities(s.make_state(0.0, g))
    assert (v["HV"], v["DA"], v["LR"]) == pytest.approx((1, g, -g), abs=1e-12)


def test_basis_visibility_examples():
    assert s.basis_visibility(50, 0, 0, 50) == 1
    assert s.basis_visibility(25, 25, 25, 25) == 0
    assert s.basis_visibility(0, 50, 50, 0) == -1
    with pytest.raises(s.StateError):
        s.basis_visibility(0, 0, 0, 0)


def test_three_routes_agree_on_random_states(rng):
    worst = 0.0
    for _ in range(1000):
        rho = s.random_state(rng)
        f = s.fidelity_direct(rho)
        v = s.visibilities(rho)
        worst = max(worst,
                    abs(f - s.fidelity_from_probabilities(*six_probabilities(rho))),
                    abs(f - s.fidelity_from_visibilities(v["HV"], v["DA"], v["LR"])),
                    abs(f - brute_force_fidelity(rho)))
    assert worst <= 1e-12


@given(seed=seeds)
def test_basis_completeness(seed):
    rho = s.random_state(np.random.default_rng(seed))
    for b in s.BASES:
        assert sum(s.basis_probabilities(rho, b)) == pytest.approx(1.0, abs=1e-12)


# γ below ~1e-16 rounds ½ + γ/2 back to ½; the claim is about resolvable damping
@given(g=st.one_of(st.just(0.0), st.floats(1e-12, 1.0)))
def test_entanglement_witness(g):
    assert (s.fidelity_direct(s.make_state(0.0, g)) > 0.5) == (g > 0)


@given(seed=seeds, alpha=st.floats(-math.pi, math.pi), th1=st.floats(-3, 3), th2=st.floats(-3, 3))
def test_global_phase_invariance(seed, alpha, th1, th2):
    rng = np.random.default_rng(seed)
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    a = s.TwoPhotonState.from_vector(psi)
    b = s.TwoPhotonState.from_vector(psi * np.exp(1j * alpha))
    sa, si = s.AnalyzerSetting(th1, True, 0.3), s.AnalyzerSetting(th2)
    assert s.projection_probability(a, sa, si) == pytest.approx(s.projection_probability(b, sa, si), abs=1e-12)


@given(th=st.floats(-7, 7), q=st.booleans(), qa=st.floats(-7, 7))
def test_analyzer_unitary(th, q, qa):
    c = s.AnalyzerSetting(th, q, qa).chain()
    assert np.allclose(c.conj().T @ c, np.eye(2), atol=1e-12)


@given(seed=seeds, th1=st.floats(-3, 3), th2=st.floats(-3, 3), q=st.booleans())
def test_complete_analyzer_basis_sums_to_one(seed, th1, th2, q):
    rho = s.random_state(np.random.default_rng(seed))
    a1, a2 = s.AnalyzerSetting(th1, q), s.AnalyzerSetting(th2, q)
    total = sum(s.projection_probability(rho, x, y)
                for x in (a1, a1.rotated(math.pi / 4)) for y in (a2, a2.rotated(math.pi / 4)))
    assert total == pytest.approx(1.0, abs=1e-12)


def test_invalid_matrices_rejected():
    with pytest.raises(s.StateError, match="Hermitian"):
        s.TwoPhotonState(np.triu(np.ones((4, 4))) / 4)
    with pytest.raises(s.StateError, match="trace"):
        s.TwoPhotonState(np.eye(4) / 2)
    with pytest.raises(s.StateError, match="negative"):
        s.TwoPhotonState(np.diag([0.6, 0.6, -0.2, 0.0]))
