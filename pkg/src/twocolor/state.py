"""Two-photon polarization states, wave-plate analyzers and Bell-state fidelity.

Conventions (used everywhere in the package):

* basis order (HH, HV, VH, VV), first factor the signal photon;
* |H⟩ = (1, 0), |V⟩ = (0, 1), |D⟩ = (|H⟩ + |V⟩)/√2, |A⟩ = (|H⟩ − |V⟩)/√2,
  |L⟩ = (|H⟩ + i|V⟩)/√2, |R⟩ = (|H⟩ − i|V⟩)/√2;
* wave-plate angles are fast-axis angles from H, in radians. A half-wave plate
  at θ is [[cos2θ, sin2θ], [sin2θ, −cos2θ]]; a quarter-wave plate at α is
  R(−α)·diag(1, i)·R(α). The quarter-wave plate, when present, comes first;
* each arm ends on a polarizer transmitting H, so an arm with chain C
  projects onto C†|H⟩.

With these, HWP at 0, 45°, 22.5°, −22.5° selects H, V, D, A, and with the QWP
at 0 the HWP at −22.5° / +22.5° selects L / R.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEG = np.pi / 180.0

_H = np.array([1.0, 0.0], dtype=complex)


class StateError(ValueError):
    pass


def _rot(a):
    c, s = np.cos(a), np.sin(a)
    return np.array([[c, s], [-s, c]], dtype=complex)


def hwp(theta):
    c, s = np.cos(2 * theta), np.sin(2 * theta)
    return np.array([[c, s], [s, -c]], dtype=complex)


def qwp(alpha):
    return _rot(-alpha) @ np.diag([1.0, 1j]) @ _rot(alpha)


@dataclass(frozen=True)
class AnalyzerSetting:
    hwp_angle: float = 0.0
    qwp_present: bool = False
    qwp_angle: float = 0.0

    def chain(self) -> np.ndarray:
        """Jones matrix from the arm input to the polarizer."""
        m = hwp(self.hwp_angle)
        if self.qwp_present:
            m = m @ qwp(self.qwp_angle)
        return m

    def measured_vector(self) -> np.ndarray:
        """Polarization state transmitted with certainty: C†|H⟩."""
        return self.chain().conj().T @ _H

    def rotated(self, delta: float) -> "AnalyzerSetting":
        return AnalyzerSetting(self.hwp_angle + delta, self.qwp_present, self.qwp_angle)


# HWP angles (deg) and QWP use for each named polarization
NAMED_SETTINGS = {
    "H": (0.0, False),
    "V": (45.0, False),
    "D": (22.5, False),
    "A": (-22.5, False),
    "L": (-22.5, True),
    "R": (22.5, True),
}

BASES = {"HV": ("H", "V"), "DA": ("D", "A"), "LR": ("L", "R")}


def setting_for(label: str) -> AnalyzerSetting:
    try:
        deg, q = NAMED_SETTINGS[label]
    except KeyError:
        raise StateError(f"unknown polarization label {label!r}; expected one of {sorted(NAMED_SETTINGS)}") from None
    return AnalyzerSetting(hwp_angle=deg * DEG, qwp_present=q)


@dataclass(frozen=True, eq=False)
class TwoPhotonState:
    rho: np.ndarray

    def __post_init__(self):
        rho = np.array(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise StateError(f"density matrix must be 4x4, got {rho.shape}")
        if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
            raise StateError("density matrix is not Hermitian")
        tr = np.trace(rho).real
        if abs(tr - 1.0) > 1e-12:
            raise StateError(f"trace is {tr!r}, not 1")
        lam = np.linalg.eigvalsh(rho).min()
        if lam < -1e-10:
            raise StateError(f"density matrix has a negative eigenvalue {lam:.3e}")
        rho.setflags(write=False)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_vector(cls, psi) -> "TwoPhotonState":
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


def make_state(bell_phase: float, offdiag_damping: float = 1.0) -> TwoPhotonState:
    """Dephased Bell state: ρ_HH,HH = ρ_VV,VV = ½, ρ_HH,VV = ½·γ·e^{−iφ}."""
    g = float(offdiag_damping)
    if not 0.0 <= g <= 1.0:
        raise StateError(f"off-diagonal damping must lie in [0, 1], got {g}")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[0, 3] = 0.5 * g * np.exp(-1j * bell_phase)
    rho[3, 0] = np.conj(rho[0, 3])
    return TwoPhotonState(rho)


PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def maximally_mixed() -> TwoPhotonState:
    return TwoPhotonState(np.eye(4, dtype=complex) / 4)


def random_state(rng: np.random.Generator, rank: int | None = None) -> TwoPhotonState:
    """Random density matrix from the Ginibre ensemble (rank 1..4)."""
    k = int(rng.integers(1, 5)) if rank is None else rank
    g = rng.normal(size=(4, k)) + 1j * rng.normal(size=(4, k))
    rho = g @ g.conj().T
    rho = rho / np.trace(rho).real
    rho = 0.5 * (rho + rho.conj().T)
    return TwoPhotonState(rho)


def projection_probability(state: TwoPhotonState, setting_signal: AnalyzerSetting,
                           setting_idler: AnalyzerSetting) -> float:
    """Tr[(Π_s ⊗ Π_i) ρ] for H-polarizers after each arm's wave plates."""
    m = np.kron(setting_signal.measured_vector(), setting_idler.measured_vector())
    return float(np.real(m.conj() @ state.rho @ m))


def fidelity_direct(state: TwoPhotonState) -> float:
    """⟨φ⁺|ρ|φ⁺⟩ = ½(ρ11 + ρ14 + ρ41 + ρ44)."""
    r = state.rho
    return float(0.5 * np.real(r[0, 0] + r[0, 3] + r[3, 0] + r[3, 3]))


def fidelity_from_probabilities(P_H, P_V, P_D, P_A, P_L, P_R) -> float:
    """Fidelity from the six both-arms-equal projection probabilities (P_X = P(XX))."""
    for name, p in zip("HVDALR", (P_H, P_V, P_D, P_A, P_L, P_R)):
        if not -1e-12 <= p <= 1 + 1e-12:
            raise StateError(f"P_{name} = {p} is not a probability")
    return 0.5 * (P_D + P_A - (P_R + P_L) + P_H + P_V)


def fidelity_from_visibilities(V_HV, V_DA, V_LR) -> float:
    return 0.25 * (1.0 + V_HV + V_DA - V_LR)


def basis_visibility(N_ii, N_ij, N_ji, N_jj) -> float:
    """[N_ii + N_jj − (N_ij + N_ji)] / N_tot."""
    tot = N_ii + N_ij + N_ji + N_jj
    if tot <= 0:
        raise StateError("all four counts are zero; visibility undefined")
    return (N_ii + N_jj - (N_ij + N_ji)) / tot


def basis_probabilities(state: TwoPhotonState, basis: str) -> tuple[float, float, float, float]:
    """(P_ii, P_ij, P_ji, P_jj) with the signal label first."""
    i, j = (setting_for(x) for x in BASES[basis])
    return (projection_probability(state, i, i), projection_probability(state, i, j),
            projection_probability(state, j, i), projection_probability(state, j, j))


def visibilities(state: TwoPhotonState) -> dict[str, float]:
    return {b: basis_visibility(*basis_probabilities(state, b)) for b in BASES}
