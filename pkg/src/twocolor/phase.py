"""Which-path phase bookkeeping and dispersion-compensator design.

Phase convention: an element of length L (mm) traversed ``transit_count``
times adds

    2π · transit_count · L · [Δn(λs)/λs + Δn(λi)/λi]

to the HH amplitude relative to VV, where Δn = n_H − n_V for the element
(n_V = 0 for elements only the first-pass pair traverses, i.e. the nonlinear
crystal on the return pass and the rhomb). The 2π makes phases radians; every
flat-phase result is homogeneous in it.

Flat-phase modes
----------------
``pair`` (default)
    The pump is fixed, so the idler follows the signal through
    1/λi = 1/λp − 1/λs. dΦ/dλs = −(2π/λs²)·[G(λs) − G(λi)] with
    G(λ) = Σ transit·L·Δn_g(λ) the group-index length. The compensator length
    enters linearly, so the optimum is a single exact root.
``photon``
    Each photon's own phase derivative, −2π·G(λ)/λ², evaluated at λs and λi
    and minimised in the least-squares sense over L̃ in [10, 400] mm.
"""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from . import config as cfg
from .materials import (
    MaterialModel,
    MaterialRegistry,
    default_registry,
    group_index,
    refractive_index,
)

TWO_PI = 2.0 * math.pi
NM_PER_MM = 1e6


class CompensationError(Exception):
    """The flat-phase condition cannot be met; ``diagnostics`` holds the derivative values."""

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class TemperatureTuningError(Exception):
    pass


@dataclass(frozen=True)
class OpticalElement:
    material_H: MaterialModel
    material_V: MaterialModel | None = None
    length: float = 1.0                  # mm at length_reference_temperature
    temperature: float | None = None     # C; None -> each model's reference temperature
    transit_count: int = 1
    thermal_expansion: float = 0.0       # 1/K along the beam
    length_reference_temperature: float = 20.0
    label: str = ""

    def __post_init__(self):
        if not self.length > 0:
            raise ValueError(f"element length must be positive, got {self.length}")
        if self.transit_count < 1:
            raise ValueError(f"transit_count must be >= 1, got {self.transit_count}")

    def effective_length(self, temperature=None) -> float:
        T = self.temperature if temperature is None else temperature
        if T is None or self.thermal_expansion == 0.0:
            return self.length
        return self.length * (1.0 + self.thermal_expansion * (T - self.length_reference_temperature))

    def index_difference(self, wavelength_nm, temperature=None):
        T = self.temperature if temperature is None else temperature
        dn = refractive_index(self.material_H, wavelength_nm, T)
        if self.material_V is not None:
            dn = dn - refractive_index(self.material_V, wavelength_nm, T)
        return dn

    def group_index_difference(self, wavelength_nm, temperature=None):
        T = self.temperature if temperature is None else temperature
        g = group_index(self.material_H, wavelength_nm, T)
        if self.material_V is not None:
            g = g - group_index(self.material_V, wavelength_nm, T)
        return g

    def with_length(self, length: float) -> "OpticalElement":
        return replace(self, length=length)

    def with_temperature(self, temperature: float) -> "OpticalElement":
        return replace(self, temperature=temperature)


@dataclass(frozen=True)
class OpticalStack:
    elements: tuple[OpticalElement, ...] = ()

    def __add__(self, other: "OpticalStack") -> "OpticalStack":
        return OpticalStack(tuple(self.elements) + tuple(other.elements))

    def __len__(self):
        return len(self.elements)

    def scaled(self, index: int, factor: float) -> "OpticalStack":
        els = list(self.elements)
        els[index] = els[index].with_length(els[index].length * factor)
        return OpticalStack(tuple(els))


def element_phase(el: OpticalElement, signal_nm, idler_nm, temperature=None):
    L = el.effective_length(temperature) * NM_PER_MM * el.transit_count
    return TWO_PI * L * (el.index_difference(signal_nm, temperature) / signal_nm
                         + el.index_difference(idler_nm, temperature) / idler_nm)


def pair_phase(stack: OpticalStack, signal_nm, idler_nm):
    """Extra phase (rad) of the HH pair relative to VV after the whole stack."""
    total = 0.0
    for el in stack.elements:
        total = total + element_phase(el, signal_nm, idler_nm)
    return total


def photon_phase(stack: OpticalStack, wavelength_nm):
    """Single-photon share of the phase: 2π Σ transit·L·Δn(λ)/λ."""
    total = 0.0
    for el in stack.elements:
        total = total + TWO_PI * el.effective_length() * NM_PER_MM * el.transit_count * el.index_difference(wavelength_nm) / wavelength_nm
    return total


def group_length(stack: OpticalStack, wavelength_nm):
    """G(λ) = Σ transit·L·Δn_g(λ) in mm."""
    total = 0.0
    for el in stack.elements:
        total = total + el.transit_count * el.effective_length() * el.group_index_difference(wavelength_nm)
    return total


def photon_phase_slope(stack: OpticalStack, wavelength_nm):
    """dφ/dλ of one photon's phase, rad/nm."""
    wl = np.asarray(wavelength_nm, dtype=float)
    return -TWO_PI * NM_PER_MM * group_length(stack, wl) / wl ** 2


def partner_wavelength(pump_nm, wavelength_nm):
    return 1.0 / (1.0 / pump_nm - 1.0 / np.asarray(wavelength_nm, dtype=float))


def pump_wavelength(signal_nm, idler_nm):
    return 1.0 / (1.0 / signal_nm + 1.0 / idler_nm)


def pair_phase_slope(stack: OpticalStack, signal_nm, pump_nm):
    """dΦ/dλs (rad/nm) with the idler tied to the signal by energy conservation."""
    ls = np.asarray(signal_nm, dtype=float)
    li = partner_wavelength(pump_nm, ls)
    return -TWO_PI * NM_PER_MM * (group_length(stack, ls) - group_length(stack, li)) / ls ** 2


PAIRING_ALIASES = {"pair": "pair", "energy-conserving-pair": "pair",
                   "photon": "photon", "single-photon": "photon"}


def phase_profile(stack: OpticalStack, wavelengths, pairing: str = "pair",
                  pump_nm: float = cfg.PUMP_WAVELENGTH_NM):
    """Phase versus wavelength with the minimum subtracted.

    ``pairing="pair"`` (alias ``energy-conserving-pair``) evaluates
    Φ(λ) = φ(λ, partner(λ)); ``"photon"`` (alias ``single-photon``) the
    single-photon phase. Returns an (N, 2) array of (nm, rad).
    """
    wl = np.asarray(wavelengths, dtype=float)
    pairing = PAIRING_ALIASES.get(pairing, pairing)
    if pairing == "pair":
        ph = pair_phase(stack, wl, partner_wavelength(pump_nm, wl))
    elif pairing == "photon":
        ph = photon_phase(stack, wl)
    else:
        raise ValueError(f"pairing must be 'pair' or 'photon', got {pairing!r}")
    ph = np.broadcast_to(np.asarray(ph, dtype=float), wl.shape)
    return np.column_stack([wl, ph - ph.min()])


def phase_to_bell_angle(total_phase):
    """Reduce an accumulated phase to the Bell-state angle in [0, 2π)."""
    return np.mod(total_phase, TWO_PI)


@dataclass
class CompensationResult:
    length: float                     # mm
    mode: str
    signal: float
    idler: float
    pump: float
    residual_signal: float            # rad/nm at λs after compensation
    residual_idler: float             # rad/nm at λi
    at_bound: bool = False


def _compensator(o_model, e_model, length, temperature, expansion=0.0):
    # H sees the ordinary index, V the extraordinary: Δn_eff = ñ_o − ñ_e
    return OpticalElement(o_model, e_model, length=length, temperature=temperature,
                          thermal_expansion=expansion, label="compensator")


def optimal_compensator_length(
    first_pass: OpticalStack,
    compensator: tuple[MaterialModel, MaterialModel],
    signal_nm: float,
    idler_nm: float,
    temperature: float | None = None,
    mode: str = "pair",
    bracket: tuple[float, float] = (10.0, 400.0),
) -> CompensationResult:
    """Compensator length (mm) that flattens the total phase at λs and λi.

    ``compensator`` is the (ordinary, extraordinary) model pair.
    """
    o_model, e_model = compensator
    pump = pump_wavelength(signal_nm, idler_nm)
    unit = OpticalStack((_compensator(o_model, e_model, 1.0, temperature),))

    if mode == "pair":
        first = group_length(first_pass, signal_nm) - group_length(first_pass, idler_nm)
        per_mm = group_length(unit, signal_nm) - group_length(unit, idler_nm)
        diag = {"first_pass_group_mismatch_mm": first, "compensator_group_mismatch_per_mm": per_mm}
        if abs(per_mm) < 1e-9:
            raise CompensationError(
                "compensator birefringence has no group dispersion between the two wavelengths; "
                "it cannot cancel the first-pass mismatch", diag)
        length = -first / per_mm
        if length <= 0:
            raise CompensationError(
                f"flat phase needs a negative compensator length ({length:.2f} mm); "
                "swap the compensator axes", diag)
        at_bound = False
    elif mode == "photon":
        def cost(L):
            st = first_pass + OpticalStack((_compensator(o_model, e_model, L, temperature),))
            return float(photon_phase_slope(st, signal_nm) ** 2 + photon_phase_slope(st, idler_nm) ** 2)

        res = minimize_scalar(cost, bounds=bracket, method="bounded", options={"xatol": 0.01})
        length = float(res.x)
        at_bound = min(abs(length - bracket[0]), abs(length - bracket[1])) < 0.05
    else:
        raise ValueError(f"mode must be 'pair' or 'photon', got {mode!r}")

    full = first_pass + OpticalStack((_compensator(o_model, e_model, length, temperature),))
    return CompensationResult(
        length=float(length),
        mode=mode,
        signal=signal_nm,
        idler=idler_nm,
        pump=pump,
        residual_signal=float(photon_phase_slope(full, signal_nm)) if mode == "photon"
        else float(pair_phase_slope(full, signal_nm, pump)),
        residual_idler=float(photon_phase_slope(full, idler_nm)) if mode == "photon"
        else float(pair_phase_slope(full, idler_nm, pump)),
        at_bound=at_bound,
    )


def signal_window(stack: OpticalStack, pump_nm: float, margin: float = 1.0) -> tuple[float, float]:
    """Signal range (nm) for which both photons stay inside every model's validity range."""
    lo = pump_nm + margin
    for el in stack.elements:
        for m in (el.material_H, el.material_V):
            if m is None:
                continue
            a, b = m.validity_wavelength_range
            lo = max(lo, a + margin, float(partner_wavelength(pump_nm, b - margin)))
    return lo, 2.0 * pump_nm


def find_plateaus(stack: OpticalStack, pump_nm: float, search: tuple[float, float] | None = None,
                  n_scan: int = 400, degeneracy_margin: float = 5.0) -> list[float]:
    """Signal-side stationary points of the pair phase, degeneracy excluded.

    Returns the signal wavelengths (nm) where G(λ) = G(partner(λ)); the matching
    idler plateau is ``partner_wavelength(pump_nm, λ)``.
    """
    window = signal_window(stack, pump_nm)
    lo, hi = window if search is None else (max(search[0], window[0]), min(search[1], window[1]))
    hi = min(hi, 2 * pump_nm - degeneracy_margin)
    f = lambda x: group_length(stack, x) - group_length(stack, partner_wavelength(pump_nm, x))
    xs = np.linspace(lo, hi, n_scan)
    ys = np.array([f(x) for x in xs])
    roots = []
    for a, b, ya, yb in zip(xs[:-1], xs[1:], ys[:-1], ys[1:]):
        if ya == 0.0:
            roots.append(float(a))
        elif ya * yb < 0:
            roots.append(float(brentq(f, a, b, xtol=1e-6)))
    return roots


def plateau_shift(first_pass: OpticalStack, compensator, length: float, signal_nm: float, pump_nm: float,
                  delta: float = 1.0, temperature=None, search=None) -> dict:
    """Signal plateau position for L̃ − δ, L̃, L̃ + δ and the mean shift per mm."""
    o_model, e_model = compensator
    pos = {}
    for d in (-delta, 0.0, delta):
        st = first_pass + OpticalStack((_compensator(o_model, e_model, length + d, temperature),))
        roots = find_plateaus(st, pump_nm, search)
        if not roots:
            pos[d] = None
            continue
        pos[d] = min(roots, key=lambda r: abs(r - signal_nm))
    shifts = [abs(pos[d] - pos[0.0]) for d in (-delta, delta) if pos[d] is not None and pos[0.0] is not None]
    return {
        "positions": {d: p for d, p in pos.items()},
        "shift_minus": None if pos[-delta] is None else pos[-delta] - pos[0.0],
        "shift_plus": None if pos[delta] is None else pos[delta] - pos[0.0],
        "mean_shift_per_mm": float(np.mean(shifts)) / delta if shifts else None,
    }


def phase_temperature_slope(el: OpticalElement, signal_nm: float, idler_nm: float, step: float = 0.5) -> float:
    """∂φ/∂T of one element in rad/K (central difference about its set temperature)."""
    T0 = el.temperature
    if T0 is None:
        T0 = el.material_H.reference_temperature
    up = element_phase(el, signal_nm, idler_nm, T0 + step)
    dn = element_phase(el, signal_nm, idler_nm, T0 - step)
    return float((up - dn) / (2 * step))


def stack_temperature_slope(stack: OpticalStack, signal_nm: float, idler_nm: float) -> float:
    return sum(phase_temperature_slope(el, signal_nm, idler_nm) for el in stack.elements)


@dataclass
class TemperatureTuning:
    slope: float            # rad/K
    pi_shift: float         # K


def pi_shift_temperature(slab: OpticalElement | OpticalStack, signal_nm: float, idler_nm: float) -> TemperatureTuning:
    """Temperature change that moves the Bell phase by π."""
    if isinstance(slab, OpticalStack):
        slope = stack_temperature_slope(slab, signal_nm, idler_nm)
    else:
        slope = phase_temperature_slope(slab, signal_nm, idler_nm)
    if abs(slope) < 1e-9:
        raise TemperatureTuningError("phase is not temperature tunable: no thermo-optic asymmetry between the axes")
    return TemperatureTuning(slope=slope, pi_shift=math.pi / abs(slope))




@dataclass
class SlabChoice:
    slabs: list[float]
    total: float
    ideal: float
    residual_slope: float | None = None


def round_to_slabs(ideal_length: float, stock: dict[float, int] | None = None,
                   first_pass: OpticalStack | None = None, compensator=None,
                   signal_nm: float | None = None, pump_nm: float | None = None,
                   temperature: float | None = None) -> SlabChoice:
    """Closest achievable sum of stock slabs to ``ideal_length`` (ties go to fewer slabs).

    With ``first_pass``, ``compensator`` (o, e models), ``signal_nm`` and
    ``pump_nm`` given, the pair-phase slope left at the signal by the rounded
    length is reported as ``residual_slope`` (rad/nm).
    """
    stock = dict(cfg.SLAB_STOCK if stock is None else stock)
    sizes = sorted(stock)
    best = None
    for counts in itertools.product(*(range(stock[s] + 1) for s in sizes)):
        total = sum(c * s for c, s in zip(counts, sizes))
        if total <= 0:
            continue
        key = (abs(total - ideal_length), sum(counts))
        if best is None or key < best[0]:
            best = (key, counts, total)
    if best is None:
        raise ValueError("slab stock is empty")
    _, counts, total = best
    slabs = [s for s, c in sorted(zip(sizes, counts), reverse=True) for _ in range(c)]
    residual = None
    if first_pass is not None and compensator is not None and signal_nm is not None and pump_nm is not None:
        o, e = compensator
        st = first_pass + OpticalStack((_compensator(o, e, float(total), temperature),))
        residual = float(pair_phase_slope(st, signal_nm, pump_nm))
    return SlabChoice(slabs=slabs, total=float(total), ideal=ideal_length, residual_slope=residual)


# --------------------------------------------------------------------------
# the source itself


@dataclass(frozen=True)
class SourceGeometry:
    crystal_length: float = cfg.CRYSTAL_LENGTH_MM
    rhomb_length: float = cfg.RHOMB_LENGTH_MM
    compensator_temperature: float = cfg.COMPENSATOR_TEMPERATURE_C
    compensator_expansion: float = cfg.YVO4_EXPANSION_PER_K
    crystal_source: str = "gayer"
    rhomb_source: str = "schott"


def first_pass_stack(crystal_temperature: float, geometry: SourceGeometry = SourceGeometry(),
                     registry: MaterialRegistry | None = None) -> OpticalStack:
    reg = registry or default_registry()
    crystal = reg.get("MgO:LN", "ordinary", geometry.crystal_source)
    glass = reg.get("BK7", "isotropic", geometry.rhomb_source)
    return OpticalStack((
        OpticalElement(crystal, None, geometry.crystal_length, crystal_temperature, label="crystal"),
        OpticalElement(glass, None, geometry.rhomb_length, None, transit_count=2, label="rhomb"),
    ))


def compensator_models(source: str, registry: MaterialRegistry | None = None):
    reg = registry or default_registry()
    src = reg.source_set("YVO4", source)
    if not src.length_prediction:
        raise CompensationError(
            f"YVO4 source {source!r} holds birefringence point values only; it cannot predict a length")
    return reg.get("YVO4", "ordinary", source), reg.get("YVO4", "extraordinary", source)


def compensator_element(length: float, source: str = cfg.COMPENSATOR_SOURCE, temperature: float | None = None,
                        geometry: SourceGeometry = SourceGeometry(), registry=None) -> OpticalElement:
    o, e = compensator_models(source, registry)
    T = geometry.compensator_temperature if temperature is None else temperature
    return _compensator(o, e, length, T, geometry.compensator_expansion)


@dataclass
class CompensationDesign:
    signal_wavelength: float
    idler_wavelength: float
    pump_wavelength: float
    optimal_length: float
    source_label: str
    plateau_signal: float | None
    plateau_idler: float | None
    crystal_temperature: float
    mode: str = "pair"
    residual_signal: float = 0.0
    residual_idler: float = 0.0
    birefringence_signal: float = float("nan")
    birefringence_idler: float = float("nan")
    extras: dict = field(default_factory=dict)

    def row(self) -> dict:
        return {
            "source": self.source_label,
            "signal_nm": round(self.signal_wavelength, 4),
            "idler_nm": round(self.idler_wavelength, 4),
            "dn_signal": round(self.birefringence_signal, 6),
            "dn_idler": round(self.birefringence_idler, 6),
            "length_mm": round(self.optimal_length, 2),
            "crystal_temperature_c": round(self.crystal_temperature, 2),
        }


def design_compensation(signal_nm: float, idler_nm: float, source: str = cfg.COMPENSATOR_SOURCE,
                        crystal_temperature: float | None = None, mode: str = "pair",
                        geometry: SourceGeometry = SourceGeometry(), registry=None) -> CompensationDesign:
    """Optimal compensator for a target pair (one row of the length comparison).

    The crystal temperature defaults to the QPM operating temperature for the
    signal wavelength.
    """
    from . import qpm
    from .materials import birefringence

    reg = registry or default_registry()
    pump = pump_wavelength(signal_nm, idler_nm)
    if crystal_temperature is None:
        cfg = qpm.default_config(pump_wavelength=pump)
        crystal_temperature = qpm.temperature_for_signal(cfg, min(signal_nm, idler_nm))
    first = first_pass_stack(crystal_temperature, geometry, reg)
    o, e = compensator_models(source, reg)
    res = optimal_compensator_length(first, (o, e), signal_nm, idler_nm,
                                     geometry.compensator_temperature, mode=mode)
    full = first + OpticalStack((_compensator(o, e, res.length, geometry.compensator_temperature),))
    roots = find_plateaus(full, pump)
    ps = min(roots, key=lambda r: abs(r - min(signal_nm, idler_nm))) if roots else None
    return CompensationDesign(
        signal_wavelength=signal_nm,
        idler_wavelength=idler_nm,
        pump_wavelength=pump,
        optimal_length=res.length,
        source_label=source,
        plateau_signal=ps,
        plateau_idler=None if ps is None else float(partner_wavelength(pump, ps)),
        crystal_temperature=crystal_temperature,
        mode=mode,
        residual_signal=res.residual_signal,
        residual_idler=res.residual_idler,
        birefringence_signal=birefringence(reg, "YVO4", source, signal_nm, geometry.compensator_temperature),
        birefringence_idler=birefringence(reg, "YVO4", source, idler_nm, geometry.compensator_temperature),
        extras={"at_bound": res.at_bound},
    )
