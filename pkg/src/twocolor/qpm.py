"""Type-0 quasi-phase-matching tuning curves for a periodically poled crystal.

All three fields share one crystal axis (``QpmConfig.crystal_model``). The
momentum mismatch, in 1/µm, is

    Δk/2π = n(λp)/λp − n(λs)/λs − n(λi)/λi − m/Λ

with the idler fixed by energy conservation, 1/λi = 1/λp − 1/λs. For fixed
temperature Δk(λs) is symmetric about degeneracy (λs = 2λp) and peaks there, so
the nondegenerate signal root sits in (λ_lo, 2λp] and disappears below the
degeneracy temperature.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .materials import MaterialModel, default_registry, refractive_index


class QpmError(Exception):
    pass


class NoPhaseMatchError(QpmError):
    pass


class TuningRangeError(QpmError, ValueError):
    pass


@dataclass(frozen=True)
class QpmConfig:
    crystal_model: MaterialModel
    pump_wavelength: float = 532.0      # nm
    poling_period: float = 7.0          # µm
    qpm_order: int = 1
    temperature_range: tuple[float, float] = (20.0, 160.0)

    def __post_init__(self):
        if self.poling_period <= 0:
            raise ValueError("poling period must be positive")
        if self.qpm_order < 1 or self.qpm_order % 2 == 0:
            raise ValueError("QPM order must be a positive odd integer")
        lo, hi = self.temperature_range
        if not lo < hi:
            raise ValueError(f"bad temperature range {self.temperature_range}")
        if hi > 200.0:
            raise ValueError("temperature range exceeds the oven limit (200 C)")

    @property
    def degenerate_wavelength(self) -> float:
        return 2.0 * self.pump_wavelength


def default_config(axis: str = "extraordinary", **kw) -> QpmConfig:
    model = default_registry().get("MgO:LN", axis, "gayer")
    return QpmConfig(crystal_model=model, **kw)


def idler_wavelength(pump_nm, signal_nm):
    return 1.0 / (1.0 / pump_nm - 1.0 / signal_nm)


def mismatch(config: QpmConfig, signal_nm, temperature_c):
    """Δk/2π in 1/µm for the energy-conserving pair with the given signal."""
    lp = config.pump_wavelength
    ls = np.asarray(signal_nm, dtype=float)
    li = idler_wavelength(lp, ls)
    m = config.crystal_model
    n = lambda wl: refractive_index(m, wl, temperature_c)
    per_nm = n(lp) / lp - n(ls) / ls - n(li) / li
    return per_nm * 1e3 - config.qpm_order / config.poling_period


def _branch_floor(config: QpmConfig) -> float:
    lo, hi = config.crystal_model.validity_wavelength_range
    lp = config.pump_wavelength
    # smallest signal whose idler partner is still inside the validity range
    return max(lo, 1.0 / (1.0 / lp - 1.0 / hi)) + 1e-6


def signal_wavelength_at_temperature(config: QpmConfig, temperature_c: float) -> tuple[float, float]:
    """(λs, λi) in nm that phase-match at ``temperature_c``; λs ≤ λi."""
    deg = config.degenerate_wavelength
    top = mismatch(config, deg, temperature_c)
    # |Δk| below 1e-12/µm puts the double root within ~2 pm of degeneracy
    if abs(top) <= 1e-12:
        return deg, deg
    if top < 0:
        raise NoPhaseMatchError(
            f"no phase matching at {temperature_c:.2f} C: mismatch at degeneracy is {top:.3e} /um "
            "(below the degeneracy temperature)"
        )
    floor = _branch_floor(config)
    bottom = mismatch(config, floor, temperature_c)
    if bottom > 0:
        raise NoPhaseMatchError(
            f"no phase matching at {temperature_c:.2f} C: mismatch stays positive "
            f"({bottom:.3e} /um at {floor:.1f} nm, {top:.3e} /um at {deg:.1f} nm)"
        )
    ls = brentq(lambda x: mismatch(config, x, temperature_c), floor, deg, xtol=1e-10, rtol=1e-15)
    return ls, idler_wavelength(config.pump_wavelength, ls)


def degeneracy_temperature(config: QpmConfig, bracket: tuple[float, float] = (-50.0, 200.0)) -> float:
    """Temperature at which the pair becomes degenerate (λs = λi = 2λp)."""
    f = lambda T: mismatch(config, config.degenerate_wavelength, T)
    a, b = bracket
    if f(a) * f(b) > 0:
        raise NoPhaseMatchError(f"degeneracy not reached between {a} and {b} C")
    return brentq(f, a, b, xtol=1e-12)


def temperature_for_signal(config: QpmConfig, signal_nm: float) -> float:
    """Crystal temperature that phase-matches ``signal_nm`` (signal branch)."""
    deg = config.degenerate_wavelength
    if signal_nm > deg + 1e-9:
        raise TuningRangeError(f"{signal_nm} nm is beyond degeneracy ({deg} nm); pass the shorter wavelength")
    lo, hi = config.temperature_range
    f = lambda T: mismatch(config, signal_nm, T)
    f_lo, f_hi = f(lo), f(hi)
    # a root sitting on a range endpoint comes back with rounding-level mismatch
    for T, v in ((lo, f_lo), (hi, f_hi)):
        if abs(v) <= 1e-12:
            return T
    if f_lo * f_hi > 0:
        span = achievable_span(config)
        raise TuningRangeError(
            f"{signal_nm} nm not reachable between {lo} and {hi} C; "
            f"achievable signal span {span[0]:.1f}-{span[1]:.1f} nm"
        )
    return brentq(f, lo, hi, xtol=1e-9)


def achievable_span(config: QpmConfig) -> tuple[float, float]:
    """(shortest, longest) signal wavelength reachable inside the temperature range."""
    lo, hi = config.temperature_range
    vals = []
    for T in (lo, hi):
        try:
            vals.append(signal_wavelength_at_temperature(config, T)[0])
        except NoPhaseMatchError:
            vals.append(config.degenerate_wavelength)
    return min(vals), max(vals)


@dataclass
class TuningPoint:
    temperature: float
    signal: float
    idler: float


def tuning_curve(config: QpmConfig, temperatures=None, n_points: int = 29) -> list[TuningPoint]:
    """Signal/idler wavelengths over a temperature grid; temperatures without a solution are skipped."""
    if temperatures is None:
        temperatures = np.linspace(*config.temperature_range, n_points)
    out = []
    for T in temperatures:
        try:
            ls, li = signal_wavelength_at_temperature(config, float(T))
        except NoPhaseMatchError:
            continue
        out.append(TuningPoint(float(T), ls, li))
    return out
