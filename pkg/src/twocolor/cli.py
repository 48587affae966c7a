"""Command-line entry point: ``twocolor <subcommand> ...``.

Curves go out as CSV, reports as JSON; both start with provenance (config
echo, material-file hashes, seed). Column orders are listed in docs/formats.md.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import analysis, config as cfg, phase, qpm, sim
from .materials import (
    MaterialError,
    MaterialRegistry,
    default_registry,
    set_default_registry,
)
from .provenance import (
    dump_json,
    provenance_lines,
    read_records,
    records_csv,
    render_csv,
    write_text,
)
from .state import BASES, make_state


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    params: dict = field(default_factory=dict)
    source: str = cfg.COMPENSATOR_SOURCE
    seed: int | None = None
    outputs: dict = field(default_factory=dict)

    def echo(self) -> dict:
        return {"command": self.command, "source": self.source, **self.params}


def _header(rc: RunConfig) -> list[str]:
    return provenance_lines(rc.command, rc.echo(), rc.seed)


def _report(rc: RunConfig, body: dict) -> dict:
    return {"provenance": {"command": rc.command, "config": rc.echo(), "seed": rc.seed,
                           "data_files": default_registry().file_hashes()}, **body}


def _out(text: str, path):
    write_text(text, path)


# ---------------------------------------------------------------- materials


def cmd_materials(a) -> int:
    reg = default_registry()
    checks = reg.check_anchors()
    rows = []
    ok = True
    for c in checks:
        status = "n/a" if c.passed is None else ("pass" if c.passed else "FAIL")
        ok &= c.passed is not False
        rows.append({"material": c.material, "source": c.source_label, "wavelength_nm": c.wavelength_nm,
                     "expected": c.expected, "computed": c.computed, "status": status})
    if a.json:
        print(dump_json({"anchors": rows, "all_pass": ok}), end="")
    else:
        print(f"{'material':8} {'source':10} {'nm':>8} {'table':>9} {'computed':>9}  status")
        for r in rows:
            comp = "-" if r["computed"] is None else f"{r['computed']:.6f}"
            print(f"{r['material']:8} {r['source']:10} {r['wavelength_nm']:8.1f} {r['expected']:9.6f} {comp:>9}  {r['status']}")
        print("all checkable anchors pass" if ok else "anchor check FAILED")
    return 0 if ok else 1


# ---------------------------------------------------------------- design


def _idler_for(a):
    if a.idler is not None:
        return a.idler
    return float(phase.partner_wavelength(a.pump, a.signal))


def cmd_design(a) -> int:
    idler = _idler_for(a)
    d = phase.design_compensation(a.signal, idler, source=a.source, mode=a.mode,
                                  crystal_temperature=a.crystal_temperature)
    row = d.row()
    row["plateau_signal_nm"] = None if d.plateau_signal is None else round(d.plateau_signal, 3)
    row["plateau_idler_nm"] = None if d.plateau_idler is None else round(d.plateau_idler, 3)
    row["mode"] = d.mode
    slabs = phase.round_to_slabs(d.optimal_length, first_pass=phase.first_pass_stack(d.crystal_temperature),
                                 compensator=phase.compensator_models(a.source), signal_nm=d.signal_wavelength,
                                 pump_nm=d.pump_wavelength, temperature=cfg.COMPENSATOR_TEMPERATURE_C)
    row["slab_total_mm"] = slabs.total
    row["slab_residual_slope_rad_per_nm"] = slabs.residual_slope
    if a.json:
        print(dump_json(row), end="")
    else:
        print(f"source {row['source']}: signal {row['signal_nm']} nm, idler {row['idler_nm']} nm, "
              f"dn {row['dn_signal']:.6f} / {row['dn_idler']:.6f}, L = {row['length_mm']:.2f} mm "
              f"(crystal {row['crystal_temperature_c']:.2f} C, slabs {slabs.total:g} mm)")
    return 0


def _full_stack(length, source, signal, idler, crystal_temperature=None):
    pump = phase.pump_wavelength(signal, idler)
    if crystal_temperature is None:
        crystal_temperature = qpm.temperature_for_signal(qpm.default_config(pump_wavelength=pump), min(signal, idler))
    stack = phase.first_pass_stack(crystal_temperature) + phase.OpticalStack(
        (phase.compensator_element(length, source),))
    return stack, pump


def _profile_rows(lengths, source, signal, idler, pairing, step):
    rows = []
    for L in lengths:
        stack, pump = _full_stack(L, source, signal, idler)
        lo, hi = phase.signal_window(stack, pump)
        hi = float(phase.partner_wavelength(pump, lo))
        grid = np.arange(math.ceil(lo), math.floor(hi) + 1e-9, step)
        prof = phase.phase_profile(stack, grid, pairing=pairing, pump_nm=pump)
        rows += [{"length_mm": float(L), "wavelength_nm": float(w), "phase_rad": float(p)} for w, p in prof]
    return rows


def cmd_phase_profile(a) -> int:
    rc = RunConfig("phase-profile", {"lengths_mm": a.length, "signal_nm": a.signal, "idler_nm": a.idler,
                                     "pairing": a.pairing, "step_nm": a.step}, a.source)
    rows = _profile_rows(a.length, a.source, a.signal, a.idler, a.pairing, a.step)
    _out(render_csv(["length_mm", "wavelength_nm", "phase_rad"], rows, _header(rc)), a.out)
    return 0


# ---------------------------------------------------------------- qpm


def _tuning_rows(a):
    conf = qpm.QpmConfig(crystal_model=default_registry().get("MgO:LN", a.axis, "gayer"),
                         pump_wavelength=a.pump, poling_period=a.period, temperature_range=(a.tmin, a.tmax))
    pts = qpm.tuning_curve(conf, np.linspace(a.tmin, a.tmax, a.points))
    return conf, [{"temperature_c": p.temperature, "signal_nm": p.signal, "idler_nm": p.idler} for p in pts]


def cmd_tuning_curve(a) -> int:
    rc = RunConfig("tuning-curve", {"period_um": a.period, "pump_nm": a.pump, "tmin_c": a.tmin,
                                    "tmax_c": a.tmax, "points": a.points, "axis": a.axis})
    _, rows = _tuning_rows(a)
    _out(render_csv(["temperature_c", "signal_nm", "idler_nm"], rows, _header(rc)), a.out)
    return 0


def cmd_temp_tune(a) -> int:
    slab = phase.compensator_element(a.slab, a.source)
    t = phase.pi_shift_temperature(slab, a.signal, a.idler)
    out = {"slab_mm": a.slab, "source": a.source, "rad_per_K": t.slope, "pi_shift_K": t.pi_shift}
    if a.json:
        print(dump_json(out), end="")
    else:
        print(f"{a.slab:g} mm YVO4 ({a.source}): dphi/dT = {t.slope:.4f} rad/K, pi shift every {t.pi_shift:.3f} K")
    return 0


# ---------------------------------------------------------------- simulate / analyze


def _source_config(a) -> sim.SourceConfig:
    return sim.SourceConfig(pump_power=a.pump_power, detection_efficiency_product=a.efficiency,
                            integration_time=a.integration_time, accidental_rate=a.accidental_rate)


def _gamma(a) -> float:
    if a.gamma is not None:
        return a.gamma
    return 2.0 * a.fidelity_target - 1.0


def cmd_simulate(a) -> int:
    bases = [b.strip() for b in a.bases.split(",") if b.strip()]
    bad = [b for b in bases if b not in BASES]
    if bad:
        raise UsageError(f"unknown bases {bad}; choose from {sorted(BASES)}")
    gamma = _gamma(a)
    conf = _source_config(a)
    rc = RunConfig("simulate", {"gamma": gamma, "bell_phase": a.bell_phase, "bases": bases, "points": a.points,
                                "noiseless": a.noiseless, "swept_arm": a.swept_arm, **asdict(conf)}, seed=a.seed)
    recs = sim.simulate_dataset(make_state(a.bell_phase, gamma), conf, a.seed, bases, a.points,
                                swept_arm=a.swept_arm, noiseless=a.noiseless)
    _out(records_csv(recs, _header(rc)), a.out)
    return 0


def cmd_analyze(a) -> int:
    recs = read_records(a.infile)
    rc = RunConfig("analyze", {"input": a.infile, "bootstrap": a.bootstrap}, seed=a.seed)
    rep = analysis.analyze_records(recs, bootstrap=a.bootstrap, seed=a.seed)
    text = dump_json(_report(rc, rep.to_dict()))
    if a.report:
        write_text(text, a.report)
    verdict = "entangled" if rep.entangled else "not shown entangled"
    print(f"F = {rep.fidelity:.3f} +/- {rep.sigma:.3f} ({verdict})")
    return 0


# ---------------------------------------------------------------- reproduce


TABLE1_ROWS = (("zelmon", 154.0), ("sato", 172.0), ("handbook", 178.8), ("foctek", 138.7))


def cmd_reproduce(a) -> int:
    return {"table1": _repro_table1, "fig4": _repro_fig4, "fig5": _repro_fig5,
            "fig6": _repro_fig6, "fig7": _repro_fig7}[a.target](a)


def _repro_table1(a) -> int:
    reg = default_registry()
    sources = [a.source] if a.source else [s for s, _ in TABLE1_ROWS]
    listed = dict(TABLE1_ROWS)
    rows = []
    for src in sources:
        reg.source_set("YVO4", src)
        row = {"source": src, "table_length_mm": listed.get(src)}
        try:
            d = phase.design_compensation(cfg.SIGNAL_WAVELENGTH_NM, cfg.IDLER_WAVELENGTH_NM, source=src)
            row.update(length_mm=round(d.optimal_length, 2), dn_signal=round(d.birefringence_signal, 6),
                       dn_idler=round(d.birefringence_idler, 6), note="")
        except phase.CompensationError as e:
            anchors = dict(reg.source_set("YVO4", src).anchors)
            row.update(length_mm=None, dn_signal=anchors.get(cfg.SIGNAL_WAVELENGTH_NM),
                       dn_idler=anchors.get(cfg.IDLER_WAVELENGTH_NM), note=str(e))
        rows.append(row)
    if a.json:
        print(dump_json(rows), end="")
    else:
        print(f"{'source':10} {'dn(894.3)':>10} {'dn(1313.1)':>10} {'L pred':>8} {'L table':>8}")
        for r in rows:
            L = "n/a" if r["length_mm"] is None else f"{r['length_mm']:.1f}"
            dn = lambda v: "-" if v is None else f"{v:.6f}"
            tab = "-" if r["table_length_mm"] is None else f"{r['table_length_mm']:.1f}"
            print(f"{r['source']:10} {dn(r['dn_signal']):>10} {dn(r['dn_idler']):>10} {L:>8} {tab:>8}"
                  + (f"  ({r['note']})" if r["note"] else ""))
    return 0


def _out_path(a, name):
    import os
    os.makedirs(a.out_dir, exist_ok=True)
    return os.path.join(a.out_dir, name)


def _repro_fig4(a) -> int:
    src = a.source or cfg.COMPENSATOR_SOURCE
    d = phase.design_compensation(cfg.SIGNAL_WAVELENGTH_NM, cfg.IDLER_WAVELENGTH_NM, source=src)
    L = round(d.optimal_length, 2)
    lengths = [L - 1.0, L, L + 1.0]
    rc = RunConfig("reproduce fig4", {"lengths_mm": lengths, "pairing": "pair", "step_nm": a.step}, src)
    rows = _profile_rows(lengths, src, cfg.SIGNAL_WAVELENGTH_NM, cfg.IDLER_WAVELENGTH_NM, "pair", a.step)
    path = _out_path(a, "fig4_phase_profile.csv")
    _out(render_csv(["length_mm", "wavelength_nm", "phase_rad"], rows, _header(rc)), path)
    print(path)
    return 0


def _repro_fig5(a) -> int:
    ns = argparse.Namespace(period=cfg.POLING_PERIOD_UM, pump=cfg.PUMP_WAVELENGTH_NM, tmin=cfg.OVEN_RANGE_C[0],
                            tmax=cfg.OVEN_RANGE_C[1], points=29, axis=cfg.QPM_AXIS)
    rc = RunConfig("reproduce fig5", vars(ns))
    conf, rows = _tuning_rows(ns)
    path = _out_path(a, "fig5_tuning_curve.csv")
    _out(render_csv(["temperature_c", "signal_nm", "idler_nm"], rows, _header(rc)), path)
    deg = qpm.degeneracy_temperature(conf)
    print(path)
    print(f"degeneracy at {deg:.2f} C; signal span {rows[-1]['signal_nm']:.1f}-{rows[0]['signal_nm']:.1f} nm")
    return 0


def _repro_fig6(a) -> int:
    src = a.source or cfg.COMPENSATOR_SOURCE
    slab = phase.compensator_element(cfg.STABILIZED_SLAB_MM, src)
    t = phase.pi_shift_temperature(slab, cfg.SIGNAL_WAVELENGTH_NM, cfg.IDLER_WAVELENGTH_NM)
    T = np.linspace(slab.temperature, slab.temperature + 8 * t.pi_shift, 41)
    conf = sim.SourceConfig()
    rc = RunConfig("reproduce fig6", {"slab_mm": slab.length, "basis": "AA", "points": len(T),
                                      **asdict(conf)}, src, a.seed)
    scan = sim.simulate_temperature_scan(slab, T, "AA", conf, a.seed)
    fit = analysis.fit_oscillation([p.temperature for p in scan], [p.counts for p in scan])
    rows = [{"temperature_c": p.temperature, "bell_phase_rad": p.bell_phase, "counts_AA": p.counts} for p in scan]
    path = _out_path(a, "fig6_temperature_scan.csv")
    _out(render_csv(["temperature_c", "bell_phase_rad", "counts_AA"], rows, _header(rc)), path)
    print(path)
    print(f"pi shift {t.pi_shift:.3f} K; fitted oscillation period {fit.period:.3f} K "
          f"(expected {2 * t.pi_shift:.3f} K)")
    return 0


def _repro_fig7(a) -> int:
    conf = sim.SourceConfig()
    gamma = 2.0 * cfg.TARGET_FIDELITY - 1.0
    rc = RunConfig("reproduce fig7", {"gamma": gamma, "points": 19, **asdict(conf)}, seed=a.seed)
    recs = sim.simulate_dataset(make_state(0.0, gamma), conf, a.seed)
    path = _out_path(a, "fig7_hwp_sweeps.csv")
    _out(records_csv(recs, _header(rc)), path)
    rep = analysis.analyze_records(recs, bootstrap=1000, seed=a.seed)
    rpath = _out_path(a, "fig7_report.json")
    write_text(dump_json(_report(rc, rep.to_dict())), rpath)
    print(path)
    print(rpath)
    print(f"F = {rep.fidelity:.3f} +/- {rep.sigma:.3f} (bootstrap {rep.bootstrap_sigma:.3f})")
    return 0


# ---------------------------------------------------------------- parser


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="twocolor", description="Dispersion compensation, QPM tuning and fidelity analysis "
                                            "for a two-color folded-sandwich photon-pair source.")
    p.add_argument("--materials-dir", help="directory of material JSON files "
                                           "(default: $TWOCOLOR_MATERIALS_DIR or the bundled set)")
    p.add_argument("--error-json", action="store_true", help="print failures as JSON on stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("materials", help="material registry checks")
    m.add_argument("action", choices=["validate"])
    m.add_argument("--json", action="store_true")
    m.set_defaults(func=cmd_materials)

    def wavelengths(sp, idler_default=cfg.IDLER_WAVELENGTH_NM):
        sp.add_argument("--signal", type=float, default=cfg.SIGNAL_WAVELENGTH_NM, help="nm")
        sp.add_argument("--idler", type=float, default=idler_default, help="nm")

    d = sub.add_parser("design", help="optimal compensator length for a wavelength pair")
    d.add_argument("--signal", type=float, default=cfg.SIGNAL_WAVELENGTH_NM, help="nm")
    d.add_argument("--idler", type=float, default=None,
                   help="nm (default: energy-conserving partner of --signal for --pump)")
    d.add_argument("--pump", type=float, default=cfg.PUMP_WAVELENGTH_NM, help="nm")
    d.add_argument("--source", default=cfg.COMPENSATOR_SOURCE)
    d.add_argument("--mode", choices=["pair", "photon"], default="pair")
    d.add_argument("--crystal-temperature", type=float, default=None, help="C (default: QPM temperature)")
    d.add_argument("--json", action="store_true")
    d.set_defaults(func=cmd_design)

    pp = sub.add_parser("phase-profile", help="phase versus wavelength (CSV)")
    pp.add_argument("--length", type=float, nargs="+", default=[cfg.COMPENSATOR_LENGTH_MM], help="mm")
    wavelengths(pp)
    pp.add_argument("--source", default=cfg.COMPENSATOR_SOURCE)
    pp.add_argument("--pairing", choices=sorted(phase.PAIRING_ALIASES), default="pair")
    pp.add_argument("--step", type=float, default=1.0, help="grid step, nm")
    pp.add_argument("--out", default=None)
    pp.set_defaults(func=cmd_phase_profile)

    t = sub.add_parser("tuning-curve", help="QPM signal/idler versus crystal temperature (CSV)")
    t.add_argument("--period", type=float, default=cfg.POLING_PERIOD_UM, help="um")
    t.add_argument("--pump", type=float, default=cfg.PUMP_WAVELENGTH_NM, help="nm")
    t.add_argument("--tmin", type=float, default=cfg.OVEN_RANGE_C[0])
    t.add_argument("--tmax", type=float, default=cfg.OVEN_RANGE_C[1])
    t.add_argument("--points", type=int, default=29)
    t.add_argument("--axis", choices=["extraordinary", "ordinary"], default=cfg.QPM_AXIS)
    t.add_argument("--out", default=None)
    t.set_defaults(func=cmd_tuning_curve)

    tt = sub.add_parser("temp-tune", help="temperature tuning of the Bell phase by one slab")
    tt.add_argument("--slab", type=float, default=cfg.STABILIZED_SLAB_MM, help="mm")
    wavelengths(tt)
    tt.add_argument("--source", default=cfg.COMPENSATOR_SOURCE)
    tt.add_argument("--json", action="store_true")
    tt.set_defaults(func=cmd_temp_tune)

    s = sub.add_parser("simulate", help="Monte-Carlo HWP sweeps (CSV)")
    g = s.add_mutually_exclusive_group()
    g.add_argument("--fidelity-target", type=float, default=cfg.TARGET_FIDELITY)
    g.add_argument("--gamma", type=float, default=None)
    s.add_argument("--bell-phase", type=float, default=0.0, help="rad")
    s.add_argument("--bases", default="HV,DA,LR")
    s.add_argument("--points", type=int, default=19)
    s.add_argument("--seed", type=int, default=42)
    s.add_argument("--noiseless", action="store_true", help="store expected counts instead of Poisson draws")
    s.add_argument("--swept-arm", choices=["signal", "idler"], default="signal")
    s.add_argument("--pump-power", type=float, default=cfg.PUMP_POWER_MW, help="mW")
    s.add_argument("--efficiency", type=float, default=cfg.DETECTION_EFFICIENCY)
    s.add_argument("--integration-time", type=float, default=cfg.INTEGRATION_TIME_S, help="s")
    s.add_argument("--accidental-rate", type=float, default=cfg.ACCIDENTAL_RATE_CPS, help="counts/s")
    s.add_argument("--out", default=None)
    s.set_defaults(func=cmd_simulate)

    an = sub.add_parser("analyze", help="fidelity from sweep records")
    an.add_argument("--in", dest="infile", required=True)
    an.add_argument("--report", default=None, help="JSON report path")
    an.add_argument("--bootstrap", type=int, default=0, help="resamples (0 = off, otherwise >= 100)")
    an.add_argument("--seed", type=int, default=0)
    an.set_defaults(func=cmd_analyze)

    r = sub.add_parser("reproduce", help="table and figure recipes")
    r.add_argument("target", choices=["table1", "fig4", "fig5", "fig6", "fig7"])
    r.add_argument("--source", default=None)
    r.add_argument("--out-dir", default="out")
    r.add_argument("--seed", type=int, default=42)
    r.add_argument("--step", type=float, default=1.0, help="fig4 grid step, nm")
    r.add_argument("--json", action="store_true")
    r.set_defaults(func=cmd_reproduce)
    return p


def _fail(a_error_json: bool, kind: str, message: str, code: int) -> int:
    if a_error_json:
        sys.stderr.write(json.dumps({"error": kind, "message": message}) + "\n")
    else:
        sys.stderr.write(f"twocolor: {kind}: {message}\n")
    return code


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    error_json = "--error-json" in argv
    try:
        a = build_parser().parse_args(argv)
    except UsageError as e:
        return _fail(error_json, "usage", str(e), 2)
    try:
        if a.materials_dir:
            set_default_registry(MaterialRegistry.from_directory(a.materials_dir))
        return a.func(a)
    except UsageError as e:
        return _fail(error_json, "usage", str(e), 2)
    except (MaterialError, phase.CompensationError, phase.TemperatureTuningError, qpm.QpmError,
            analysis.FitError, analysis.IncompleteDataError, ValueError, OSError) as e:
        return _fail(error_json, type(e).__name__, str(e), 1)
    finally:
        if getattr(locals().get("a"), "materials_dir", None):
            set_default_registry(None)


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
