"""Visibility and Bell-state fidelity recovery from coincidence sweeps.

Each basis sweep (see ``sim`` for the record layout) yields two sine curves in
the swept HWP angle: fixed arm at i and fixed arm at j. Both are fitted with
a·sin4θ + b·cos4θ + C. The signed amplitude of the fixed-i curve at the swept
angle θ_i, A_i = a sin4θ_i + b cos4θ_i, together with C_i gives the basis
visibility V_ij = (A_i + A_j)/(C_i + C_j); the three visibilities give F.
"""
from __future__ import annotations

import math
import warnings
from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .sim import CountRecord
from .state import DEG, fidelity_from_visibilities


class FitError(ValueError):
    pass


class IncompleteDataError(ValueError):
    pass


class UnphysicalFidelityWarning(UserWarning):
    pass


WEIGHT_THRESHOLD = 10.0     # mean count below which the fit is unweighted
WEIGHT_FLOOR = 0.01         # fraction of the mean count used as the smallest variance


@dataclass
class SineFit:
    amplitude: float                 # A ≥ 0
    offset: float                    # C
    phase_const: float               # c, model A sin(4θ + c) + C
    residual_rms: float
    covariance: np.ndarray           # of (A, c, C)
    linear_params: np.ndarray        # (a, b, C)
    linear_covariance: np.ndarray
    weighted: bool = True
    n_points: int = 0

    @property
    def physical(self) -> bool:
        return self.offset >= self.amplitude

    def signed_amplitude(self, theta: float) -> tuple[float, float]:
        """Sine-part value a·sin4θ + b·cos4θ at ``theta`` and its standard deviation."""
        g = np.array([math.sin(4 * theta), math.cos(4 * theta), 0.0])
        return float(g @ self.linear_params), float(math.sqrt(max(g @ self.linear_covariance @ g, 0.0)))

    def evaluate(self, theta):
        th = np.asarray(theta, dtype=float)
        a, b, c = self.linear_params
        return a * np.sin(4 * th) + b * np.cos(4 * th) + c

    def to_dict(self) -> dict:
        return {
            "amplitude": self.amplitude,
            "offset": self.offset,
            "phase_const": self.phase_const,
            "residual_rms": self.residual_rms,
            "sigma_amplitude": math.sqrt(max(self.covariance[0, 0], 0.0)),
            "sigma_offset": math.sqrt(max(self.covariance[2, 2], 0.0)),
            "weighted": self.weighted,
            "n_points": self.n_points,
        }


def _design(theta):
    return np.column_stack([np.sin(4 * theta), np.cos(4 * theta), np.ones_like(theta)])


def fit_sine(points) -> SineFit:
    """Fit A·sin(4θ + c) + C to (θ rad, counts) pairs.

    Linear least squares in (a, b, C) with Poisson weights 1/μ from one
    reweighting step (μ floored at 1% of the mean count, which keeps the
    estimate invariant under rescaling of the counts); plain least squares with a
    residual-scaled covariance when the mean count is below 10, where the
    Poisson weights are unreliable.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise FitError("points must be (theta, counts) pairs")
    th, y = pts[:, 0], pts[:, 1]
    if len(th) < 4:
        raise FitError(f"need at least 4 points, got {len(th)}")
    X = _design(th)
    if np.linalg.matrix_rank(X) < 3:
        raise FitError("design matrix is rank deficient (angles do not span the sine)")
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    weighted = bool(np.mean(y) >= WEIGHT_THRESHOLD)
    if weighted:
        mu = np.maximum(X @ beta, WEIGHT_FLOOR * np.mean(y))
        w = 1.0 / mu
        XtW = X.T * w
        cov = np.linalg.inv(XtW @ X)
        beta = cov @ (XtW @ y)
    else:
        dof = max(len(y) - 3, 1)
        s2 = float(np.sum((y - X @ beta) ** 2)) / dof
        cov = s2 * np.linalg.inv(X.T @ X)
    a, b, C = beta
    A = math.hypot(a, b)
    c = math.atan2(b, a)
    # Jacobian of (A, c, C) with respect to (a, b, C)
    if A > 0:
        J = np.array([[a / A, b / A, 0.0], [-b / A ** 2, a / A ** 2, 0.0], [0.0, 0.0, 1.0]])
    else:
        J = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
    rms = float(np.sqrt(np.mean((y - X @ beta) ** 2)))
    return SineFit(A, float(C), c, rms, J @ cov @ J.T, np.array(beta, dtype=float), cov, weighted, len(y))


@dataclass
class Visibility:
    v_i: float
    v_j: float
    value: float
    sigma: float


def visibility_from_fit(fit_i: SineFit, fit_j: SineFit, theta_i: float | None = None,
                        theta_j: float | None = None) -> Visibility:
    """Per-setting visibilities A/C and the combined V_ij = (A_i + A_j)/(C_i + C_j).

    With ``theta_i``/``theta_j`` (swept-arm angles of states i and j) the
    amplitudes are the signed curve values there; otherwise the fitted
    magnitudes A are used.
    """
    if fit_i.offset <= 0 or fit_j.offset <= 0:
        raise FitError("fit offsets must be positive")
    if theta_i is None:
        Ai, Aj = fit_i.amplitude, fit_j.amplitude
        cov_i, cov_j = fit_i.covariance, fit_j.covariance
        di = dj = np.array([1.0, 0.0, 0.0])
    else:
        Ai, _ = fit_i.signed_amplitude(theta_i)
        Aj, _ = fit_j.signed_amplitude(theta_j)
        di = np.array([math.sin(4 * theta_i), math.cos(4 * theta_i), 0.0])
        dj = np.array([math.sin(4 * theta_j), math.cos(4 * theta_j), 0.0])
        cov_i, cov_j = fit_i.linear_covariance, fit_j.linear_covariance
    Ci, Cj = fit_i.offset, fit_j.offset
    S = Ci + Cj
    V = (Ai + Aj) / S
    # gradient with respect to each fit's parameters (amplitude part, offset part)
    e3 = np.array([0.0, 0.0, 1.0])
    grad_i = di / S - V / S * e3
    grad_j = dj / S - V / S * e3
    var = grad_i @ cov_i @ grad_i + grad_j @ cov_j @ grad_j
    return Visibility(Ai / Ci, Aj / Cj, V, math.sqrt(max(var, 0.0)))


@dataclass
class FidelityReport:
    V_HV: float
    V_DA: float
    V_LR: float
    sigma_HV: float
    sigma_DA: float
    sigma_LR: float
    fidelity: float
    sigma: float
    entangled: bool
    physical: bool = True
    bootstrap_sigma: float | None = None
    fits: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "visibilities": {
                "HV": {"value": self.V_HV, "sigma": self.sigma_HV},
                "DA": {"value": self.V_DA, "sigma": self.sigma_DA},
                "LR": {"value": self.V_LR, "sigma": self.sigma_LR},
            },
            "fidelity": self.fidelity,
            "sigma_fidelity": self.sigma,
            "sigma_fidelity_bootstrap": self.bootstrap_sigma,
            "entangled": self.entangled,
            "physical": self.physical,
            "fits": self.fits,
        }


REQUIRED_BASES = ("HV", "DA", "LR")


def fidelity_report(visibilities: dict) -> FidelityReport:
    """F = ¼(1 + V_HV + V_DA − V_LR) from {basis: Visibility or (value, sigma)}."""
    missing = [b for b in REQUIRED_BASES if b not in visibilities]
    if missing:
        raise IncompleteDataError(f"missing bases: {', '.join(missing)}")
    vals, sig = {}, {}
    for b in REQUIRED_BASES:
        v = visibilities[b]
        if isinstance(v, Visibility):
            vals[b], sig[b] = v.value, v.sigma
        else:
            vals[b], sig[b] = float(v[0]), float(v[1])
    F = fidelity_from_visibilities(vals["HV"], vals["DA"], vals["LR"])
    s = 0.25 * math.sqrt(sig["HV"] ** 2 + sig["DA"] ** 2 + sig["LR"] ** 2)
    physical = -1e-9 <= F <= 1.0 + 1e-9
    if not physical:
        warnings.warn(f"fidelity {F:.4f} lies outside [0, 1]; counting noise or a bad record set",
                      UnphysicalFidelityWarning, stacklevel=2)
    return FidelityReport(vals["HV"], vals["DA"], vals["LR"], sig["HV"], sig["DA"], sig["LR"],
                          F, s, bool(F - s > 0.5), physical)


# ------------------------------------------------------------ record pipeline


@dataclass
class BasisSweep:
    """Arrays extracted from one basis's records."""
    label: str
    swept_angles: np.ndarray      # θ of the swept arm (rad)
    theta_i: float                # fixed arm angle for state i (rad)
    counts: np.ndarray            # (n, 4)


def _swept_arm(recs: list[CountRecord]) -> str:
    sig = {round(r.hwp_angle_signal, 12) for r in recs}
    idl = {round(r.hwp_angle_idler, 12) for r in recs}
    if len(sig) > 1 and len(idl) == 1:
        return "signal"
    if len(idl) > 1 and len(sig) == 1:
        return "idler"
    raise FitError(f"basis {recs[0].basis_label}: cannot tell which arm was swept "
                   f"({len(sig)} signal angles, {len(idl)} idler angles)")


def group_records(records: list[CountRecord]) -> "OrderedDict[str, BasisSweep]":
    groups: "OrderedDict[str, list]" = OrderedDict()
    for r in records:
        groups.setdefault(r.basis_label, []).append(r)
    out = OrderedDict()
    for label, recs in groups.items():
        arm = _swept_arm(recs)
        if arm == "signal":
            th = np.array([r.hwp_angle_signal for r in recs])
            fixed = recs[0].hwp_angle_idler
        else:
            th = np.array([r.hwp_angle_idler for r in recs])
            fixed = recs[0].hwp_angle_signal
        out[label] = BasisSweep(label, th, fixed, np.array([r.counts for r in recs], dtype=float))
    return out


def fit_basis(sweep: BasisSweep) -> tuple[SineFit, SineFit, Visibility]:
    th, n = sweep.swept_angles, sweep.counts
    quarter = 45 * DEG
    ang = np.concatenate([th, th + quarter])
    fit_i = fit_sine(np.column_stack([ang, np.concatenate([n[:, 0], n[:, 1]])]))
    fit_j = fit_sine(np.column_stack([ang, np.concatenate([n[:, 2], n[:, 3]])]))
    vis = visibility_from_fit(fit_i, fit_j, sweep.theta_i, sweep.theta_i + quarter)
    return fit_i, fit_j, vis


def _fidelity_from_groups(groups) -> tuple[FidelityReport, dict]:
    vis, fits = {}, {}
    for label, sw in groups.items():
        fi, fj, v = fit_basis(sw)
        vis[label] = v
        fits[label] = {"fit_i": fi.to_dict(), "fit_j": fj.to_dict(),
                       "v_i": v.v_i, "v_j": v.v_j, "V": v.value, "sigma_V": v.sigma}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnphysicalFidelityWarning)
        rep = fidelity_report(vis)
    return rep, fits


def analyze_records(records: list[CountRecord], bootstrap: int = 0, seed: int = 0) -> FidelityReport:
    """Full pipeline: fits per basis, visibilities, fidelity, optional bootstrap σ."""
    groups = group_records(records)
    missing = [b for b in REQUIRED_BASES if b not in groups]
    if missing:
        raise IncompleteDataError(f"records lack bases: {', '.join(missing)}")
    rep, fits = _fidelity_from_groups(groups)
    if not rep.physical:
        warnings.warn(f"fidelity {rep.fidelity:.4f} lies outside [0, 1]", UnphysicalFidelityWarning, stacklevel=2)
    rep.fits = fits
    if bootstrap:
        rep.bootstrap_sigma = bootstrap_uncertainty(records, bootstrap, seed)
    return rep


def bootstrap_uncertainty(records: list[CountRecord], resamples: int = 1000, seed: int = 0) -> float:
    """Poisson-parametric bootstrap of σ_F: each count redrawn from Poisson(N)."""
    if resamples < 100:
        raise ValueError("resamples must be at least 100")
    groups = group_records(records)
    rng = np.random.default_rng(seed)
    Fs = np.empty(resamples)
    for k in range(resamples):
        redrawn = OrderedDict(
            (label, BasisSweep(sw.label, sw.swept_angles, sw.theta_i, rng.poisson(sw.counts).astype(float)))
            for label, sw in groups.items()
        )
        Fs[k] = _fidelity_from_groups(redrawn)[0].fidelity
    return float(np.std(Fs, ddof=1))


# ------------------------------------------------------------ temperature scans


@dataclass
class OscillationFit:
    period: float
    amplitude: float
    offset: float
    phase: float
    residual_rms: float


def fit_oscillation(x, y, period_bounds: tuple[float, float] | None = None) -> OscillationFit:
    """Fit C + a·cos(2πx/P) + b·sin(2πx/P), scanning P and refining it (variable projection)."""
    from scipy.optimize import minimize_scalar

    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    span = x.max() - x.min()
    if period_bounds is None:
        period_bounds = (2 * span / (len(x) - 1) * 2, 4 * span)

    def solve(P):
        X = np.column_stack([np.ones_like(x), np.cos(2 * np.pi * x / P), np.sin(2 * np.pi * x / P)])
        beta, *_ = np.linalg.lstsq(X, y, rcond=None)
        return float(np.sum((y - X @ beta) ** 2)), beta

    grid = np.geomspace(*period_bounds, 400)
    costs = [solve(P)[0] for P in grid]
    k = int(np.argmin(costs))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, len(grid) - 1)]
    res = minimize_scalar(lambda P: solve(P)[0], bounds=(lo, hi), method="bounded", options={"xatol": 1e-9})
    P = float(res.x)
    cost, (C, a, b) = solve(P)
    return OscillationFit(P, math.hypot(a, b), float(C), math.atan2(-b, a), math.sqrt(cost / len(x)))
