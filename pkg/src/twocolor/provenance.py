"""CSV/JSON writers with a provenance header, and the count-record reader."""
from __future__ import annotations

import csv
import io
import json

from .materials import default_registry
from .sim import CountRecord
from .state import DEG

RECORD_COLUMNS = ["basis_label", "theta_signal_deg", "theta_idler_deg", "qwp_signal", "qwp_idler",
                  "t_s", "N_ii", "N_ij", "N_ji", "N_jj", "seed"]


def _fmt(v):
    if isinstance(v, float):
        # 12 significant digits: stable text, far below any tolerance downstream
        return format(v, ".12g")
    return "" if v is None else str(v)


def provenance_lines(command: str, config: dict, seed=None, registry=None) -> list[str]:
    reg = registry or default_registry()
    lines = [f"# twocolor {command}",
             "# config: " + json.dumps(config, sort_keys=True, default=str)]
    for name, digest in sorted(reg.file_hashes().items()):
        lines.append(f"# data: {name} sha256={digest}")
    lines.append(f"# seed: {seed if seed is not None else 'none'}")
    return lines


def render_csv(columns: list[str], rows: list[dict], header: list[str]) -> str:
    buf = io.StringIO()
    for line in header:
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def write_text(text: str, path: str | None, stream=None):
    if path in (None, "-"):
        (stream or __import__("sys").stdout).write(text)
    else:
        with open(path, "w", newline="") as fh:
            fh.write(text)


def read_csv_rows(path: str) -> tuple[list[str], list[dict]]:
    """(provenance lines, rows) from a CSV with '#' header lines."""
    with open(path, newline="") as fh:
        lines = fh.read().splitlines()
    header = [l for l in lines if l.startswith("#")]
    body = [l for l in lines if l and not l.startswith("#")]
    return header, list(csv.DictReader(body))


def _count(v: str):
    x = float(v)
    return int(x) if x.is_integer() and "." not in v and "e" not in v.lower() else x


def read_records(path: str) -> list[CountRecord]:
    _, rows = read_csv_rows(path)
    if not rows:
        raise ValueError(f"{path}: no records")
    missing = [c for c in RECORD_COLUMNS if c not in rows[0] and c not in ("qwp_signal", "qwp_idler", "seed")]
    if missing:
        raise ValueError(f"{path}: missing columns {missing}")
    out = []
    for r in rows:
        out.append(CountRecord(
            basis_label=r["basis_label"],
            hwp_angle_signal=float(r["theta_signal_deg"]) * DEG,
            hwp_angle_idler=float(r["theta_idler_deg"]) * DEG,
            qwp_flags=(bool(int(r.get("qwp_signal") or 0)), bool(int(r.get("qwp_idler") or 0))),
            integration_time=float(r["t_s"]),
            counts=tuple(_count(r[c]) for c in ("N_ii", "N_ij", "N_ji", "N_jj")),
            seed=int(r["seed"]) if r.get("seed") not in (None, "", "none") else None,
        ))
    return out


def records_csv(records: list[CountRecord], header: list[str]) -> str:
    return render_csv(RECORD_COLUMNS, [r.to_row() for r in records], header)


def dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    import numpy as np
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    return str(o)
