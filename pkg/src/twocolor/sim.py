"""Monte-Carlo coincidence data: HWP sweeps, compensator temperature scans, dephasing.

Sweep record layout
-------------------
One arm (the *fixed* arm) sits at the basis state i; the other arm's HWP is
swept. A record at sweep angle θ holds four coincidence counts

    N_ii  fixed arm at i,        swept HWP at θ
    N_ij  fixed arm at i,        swept HWP at θ + 45°
    N_ji  fixed arm at j (+45°), swept HWP at θ
    N_jj  fixed arm at j,        swept HWP at θ + 45°

so at θ = θ_i they are exactly the four basis counts of a visibility
measurement, and over a sweep they sample the two sine curves of the fixed-i
and fixed-j settings at twice the angular density.
"""
from __future__ import annotations

import math
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.integrate import quad

from . import config as cfg
from .phase import OpticalElement, OpticalStack, element_phase, pair_phase, partner_wavelength
from .state import (
    BASES,
    DEG,
    AnalyzerSetting,
    TwoPhotonState,
    make_state,
    projection_probability,
    setting_for,
)

C_NM_GHZ = 299792458.0  # speed of light in nm·GHz (c = 2.998e17 nm/s = 2.998e8 nm·GHz)
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))


@dataclass(frozen=True)
class SourceConfig:
    pair_rate: float = cfg.PAIR_RATE_MCPS_PER_MW             # Mcps/mW
    pump_power: float = cfg.PUMP_POWER_MW                    # mW
    signal_linewidth: float = cfg.LINEWIDTH_GHZ              # GHz FWHM
    idler_linewidth: float = cfg.LINEWIDTH_GHZ
    detection_efficiency_product: float = cfg.DETECTION_EFFICIENCY
    integration_time: float = cfg.INTEGRATION_TIME_S         # s per setting
    accidental_rate: float = cfg.ACCIDENTAL_RATE_CPS         # counts/s

    def __post_init__(self):
        for name in ("pair_rate", "pump_power", "signal_linewidth", "idler_linewidth",
                     "integration_time", "accidental_rate"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if not 0 < self.detection_efficiency_product <= 1:
            raise ValueError("detection_efficiency_product must lie in (0, 1]")

    @property
    def coincidence_rate(self) -> float:
        """Detected pair rate (counts/s) for unit projection probability."""
        return self.pair_rate * 1e6 * self.pump_power * self.detection_efficiency_product

    def mean_counts(self, probability):
        return (self.coincidence_rate * np.asarray(probability) + self.accidental_rate) * self.integration_time


@dataclass(frozen=True)
class JitterModel:
    stabilized_length: float = cfg.STABILIZED_SLAB_MM        # mm inside the oven
    free_length: float = cfg.COMPENSATOR_LENGTH_MM - cfg.STABILIZED_SLAB_MM
    temperature_sigma: float = 0.0                           # K
    phase_sensitivity: float = 0.0                           # rad/K per mm

    def __post_init__(self):
        if self.temperature_sigma < 0:
            raise ValueError("temperature_sigma must be nonnegative")
        if self.stabilized_length < 0 or self.free_length < 0:
            raise ValueError("lengths must be nonnegative")

    @property
    def total_length(self) -> float:
        return self.stabilized_length + self.free_length

    @property
    def phase_sigma(self) -> float:
        return abs(self.phase_sensitivity) * self.free_length * self.temperature_sigma


def damping_from_jitter(jitter: JitterModel) -> float:
    """γ = exp(−σφ²/2) for Gaussian quasi-static phase noise on the unstabilized crystals."""
    return math.exp(-0.5 * jitter.phase_sigma ** 2)


def phase_sigma_for_damping(gamma: float) -> float:
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    return math.sqrt(-2.0 * math.log(gamma))


def jitter_for_fidelity(fidelity: float, phase_sensitivity: float,
                        stabilized_length: float = cfg.STABILIZED_SLAB_MM,
                        free_length: float = cfg.COMPENSATOR_LENGTH_MM - cfg.STABILIZED_SLAB_MM) -> JitterModel:
    """Jitter model whose temperature spread alone brings |φ⁺⟩ down to ``fidelity``."""
    gamma = 2.0 * fidelity - 1.0
    sig = phase_sigma_for_damping(gamma)
    return JitterModel(stabilized_length, free_length, sig / (abs(phase_sensitivity) * free_length),
                       phase_sensitivity)


def phase_sensitivity_per_mm(slab: OpticalElement, signal_nm: float, idler_nm: float) -> float:
    from .phase import phase_temperature_slope
    return phase_temperature_slope(slab, signal_nm, idler_nm) / slab.length


# ---------------------------------------------------------------- spectrum


def _gaussian_phase_average(k: float, sigma: float) -> float:
    """|∫ g(x) e^{ikx} dx| for a unit-area Gaussian g of width σ, by quadrature."""
    if sigma == 0.0 or k == 0.0:
        return 1.0
    g = lambda x: math.exp(-0.5 * (x / sigma) ** 2) / (sigma * math.sqrt(2 * math.pi))
    lim = 10.0 * sigma
    # oscillatory integrand: give quad enough subintervals
    re = quad(lambda x: g(x) * math.cos(k * x), -lim, lim, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    im = quad(lambda x: g(x) * math.sin(k * x), -lim, lim, limit=400, epsabs=1e-13, epsrel=1e-12)[0]
    return min(1.0, math.hypot(re, im))


def linear_phase_damping(delay_s: float, fwhm_hz: float) -> float:
    """Closed form for a Gaussian spectrum under a linear phase 2πντ: exp(−(2πσ_ν τ)²/2)."""
    s = fwhm_hz * FWHM_TO_SIGMA
    return math.exp(-0.5 * (2 * math.pi * s * delay_s) ** 2)


def damping_from_spectrum(slope_signal: float, slope_idler: float, signal_nm: float, idler_nm: float,
                          signal_linewidth: float = cfg.LINEWIDTH_GHZ,
                          idler_linewidth: float = cfg.LINEWIDTH_GHZ,
                          correlated: bool = True) -> float:
    """Coherence left after averaging the residual which-crystal phase over the photon spectra.

    Slopes are dφ/dλ in rad/nm at each photon's wavelength, linewidths GHz FWHM.
    ``correlated`` (CW pump) ties the idler detuning to the signal's,
    δν_i = −δν_s, and averages over the signal spectrum; otherwise the two
    photons are averaged independently.
    """
    # dφ/dν in rad/GHz from dφ/dλ via dλ/dν = −λ²/c
    ks = -slope_signal * signal_nm ** 2 / C_NM_GHZ
    ki = -slope_idler * idler_nm ** 2 / C_NM_GHZ
    if correlated:
        return _gaussian_phase_average(ks - ki, signal_linewidth * FWHM_TO_SIGMA)
    return (_gaussian_phase_average(ks, signal_linewidth * FWHM_TO_SIGMA)
            * _gaussian_phase_average(ki, idler_linewidth * FWHM_TO_SIGMA))


def damping_from_profile(stack: OpticalStack, signal_nm: float, pump_nm: float,
                         linewidth: float = cfg.LINEWIDTH_GHZ, nodes: int = 80) -> float:
    """Coherence from the full energy-conserving pair phase, averaged over a Gaussian signal spectrum.

    Uses Gauss-Hermite quadrature in the signal detuning, so curvature of the
    phase profile (not only its slope) is included.
    """
    x, w = np.polynomial.hermite_e.hermegauss(nodes)
    w = w / w.sum()
    sig = linewidth * FWHM_TO_SIGMA
    nu0 = C_NM_GHZ / signal_nm
    ls = C_NM_GHZ / (nu0 + sig * x)
    ph = np.asarray(pair_phase(stack, ls, partner_wavelength(pump_nm, ls)), dtype=float)
    ph = ph - ph[nodes // 2]
    return float(abs(np.sum(w * np.exp(1j * ph))))


# ---------------------------------------------------------------- counting


@dataclass
class CountRecord:
    basis_label: str
    hwp_angle_signal: float        # rad
    hwp_angle_idler: float         # rad
    qwp_flags: tuple[bool, bool]   # (signal, idler)
    integration_time: float        # s
    counts: tuple                  # (N_ii, N_ij, N_ji, N_jj)
    seed: int | None = None
    swept_arm: str = "signal"

    def to_row(self) -> dict:
        return {
            "basis_label": self.basis_label,
            "theta_signal_deg": self.hwp_angle_signal / DEG,
            "theta_idler_deg": self.hwp_angle_idler / DEG,
            "qwp_signal": int(self.qwp_flags[0]),
            "qwp_idler": int(self.qwp_flags[1]),
            "t_s": self.integration_time,
            "N_ii": self.counts[0],
            "N_ij": self.counts[1],
            "N_ji": self.counts[2],
            "N_jj": self.counts[3],
            "seed": self.seed,
        }


def basis_stream(label: str) -> int:
    return zlib.crc32(label.encode())


def point_rng(seed: int, label: str, index: int) -> np.random.Generator:
    """Independent generator per sweep point, derived from (seed, basis, index)."""
    return np.random.default_rng([seed, basis_stream(label), index])


def _sample(mean, rng):
    return tuple(int(v) for v in rng.poisson(mean))


def simulate_hwp_sweep(state: TwoPhotonState, fixed_arm: AnalyzerSetting | str, sweep, config: SourceConfig,
                       seed: int | None = 0, basis_label: str | None = None, swept_arm: str = "signal",
                       noiseless: bool = False) -> list[CountRecord]:
    """Coincidence records for one basis while one arm's half-wave plate is swept.

    ``fixed_arm`` is the setting of state i on the fixed arm, or a basis label
    ("HV", "DA", "LR") meaning the first state of that basis. The swept arm
    copies the fixed arm's quarter-wave plate. ``noiseless`` stores the
    expected counts as floats instead of Poisson draws.
    """
    if isinstance(fixed_arm, str):
        basis_label = basis_label or fixed_arm
        fixed_arm = setting_for(BASES[fixed_arm][0])
    basis_label = basis_label or "custom"
    if swept_arm not in ("signal", "idler"):
        raise ValueError("swept_arm must be 'signal' or 'idler'")
    if not noiseless and seed is None:
        raise ValueError("a seed is required for sampled counts")
    fixed_j = fixed_arm.rotated(45 * DEG)
    records = []
    for k, theta in enumerate(sweep):
        theta = float(theta)
        if not math.isfinite(theta):
            raise ValueError("sweep angles must be finite")
        sw_i = AnalyzerSetting(theta, fixed_arm.qwp_present, fixed_arm.qwp_angle)
        sw_j = sw_i.rotated(45 * DEG)
        probs = []
        for f in (fixed_arm, fixed_j):
            for s in (sw_i, sw_j):
                pair = (s, f) if swept_arm == "signal" else (f, s)
                probs.append(projection_probability(state, *pair))
        mean = config.mean_counts(np.array(probs))
        counts = tuple(float(m) for m in mean) if noiseless else _sample(mean, point_rng(seed, basis_label, k))
        if swept_arm == "signal":
            angles = (theta, fixed_arm.hwp_angle)
        else:
            angles = (fixed_arm.hwp_angle, theta)
        records.append(CountRecord(
            basis_label=basis_label,
            hwp_angle_signal=angles[0],
            hwp_angle_idler=angles[1],
            qwp_flags=(fixed_arm.qwp_present, fixed_arm.qwp_present),
            integration_time=config.integration_time,
            counts=counts,
            seed=seed,
            swept_arm=swept_arm,
        ))
    return records


def sweep_angles(points: int = 19, span_deg: float = 90.0, start_deg: float = 0.0) -> np.ndarray:
    """Evenly spaced HWP angles (rad), endpoints included."""
    return np.linspace(start_deg, start_deg + span_deg, points) * DEG


def simulate_dataset(state: TwoPhotonState, config: SourceConfig, seed: int | None = 0,
                     bases=("HV", "DA", "LR"), points: int = 19, swept_arm: str = "signal",
                     noiseless: bool = False) -> list[CountRecord]:
    out = []
    for b in bases:
        out += simulate_hwp_sweep(state, b, sweep_angles(points), config, seed, swept_arm=swept_arm,
                                  noiseless=noiseless)
    return out


# ---------------------------------------------------------------- temperature scan


@dataclass
class ScanPoint:
    temperature: float
    bell_phase: float
    counts: float


def simulate_temperature_scan(slab: OpticalElement, temperatures, basis: str = "AA",
                              config: SourceConfig = SourceConfig(), seed: int | None = 0,
                              signal_nm: float = cfg.SIGNAL_WAVELENGTH_NM,
                              idler_nm: float = cfg.IDLER_WAVELENGTH_NM,
                              gamma: float = 1.0, phase_offset: float = 0.0,
                              noiseless: bool = False) -> list[ScanPoint]:
    """Coincidences in a two-letter analyzer setting (e.g. "AA") while the slab temperature is scanned.

    The Bell phase is ``phase_offset`` plus the slab's phase change relative to
    its set temperature.
    """
    if len(basis) != 2:
        raise ValueError("basis must name one state per arm, e.g. 'AA'")
    s_set, i_set = setting_for(basis[0]), setting_for(basis[1])
    T0 = slab.temperature if slab.temperature is not None else slab.material_H.reference_temperature
    ref = element_phase(slab, signal_nm, idler_nm, T0)
    out = []
    for k, T in enumerate(temperatures):
        phi = phase_offset + float(element_phase(slab, signal_nm, idler_nm, float(T)) - ref)
        p = projection_probability(make_state(phi, gamma), s_set, i_set)
        mean = float(config.mean_counts(p))
        n = mean if noiseless else int(point_rng(seed, "scan-" + basis, k).poisson(mean))
        out.append(ScanPoint(float(T), phi, n))
    return out


def config_dict(config) -> dict:
    return asdict(config)
