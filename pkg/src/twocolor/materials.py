"""Refractive-index models for the crystals and glasses in the source.

Coefficient sets live in JSON files under ``data/materials`` (one file per
material and literature source, both crystal axes in the same file). The
directory can be overridden with the ``TWOCOLOR_MATERIALS_DIR`` environment
variable. Wavelengths are in nm at the API and converted to µm internally,
since every coefficient set in the literature is written for µm.

Supported dispersion forms
--------------------------
``sellmeier``
    n² = 1 + Σ Bk λ² / (λ² − Ck)
``quasi_sellmeier``
    n² = A + B / (λ² − C) − D λ²
``gayer``
    temperature-dependent MgO:LiNbO3 form with f = (T − 24.5)(T + 570.82)::

        n² = a1 + b1 f + (a2 + b2 f) / (λ² − (a3 + b3 f)²)
             + (a4 + b4 f) / (λ² − a5²) − a6 λ²

For the first two forms the thermo-optic coefficients ``c1, c2, ...`` add
Σ ck (T − T_ref)^k to n.
"""
from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

AXES = ("ordinary", "extraordinary", "isotropic")
FORMS = ("sellmeier", "quasi_sellmeier", "gayer")

DATA_DIR_ENV = "TWOCOLOR_MATERIALS_DIR"
DEFAULT_DATA_DIR = Path(__file__).parent / "data" / "materials"


class MaterialError(Exception):
    """Base class for material lookup and data problems."""


class WavelengthRangeError(MaterialError, ValueError):
    pass


class MaterialLookupError(MaterialError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else ""


class MaterialDataError(MaterialError, ValueError):
    pass


@dataclass(frozen=True)
class MaterialModel:
    name: str
    axis: str
    form: str
    dispersion_coefficients: dict[str, float]
    thermo_optic_coefficients: dict[str, float] = field(default_factory=dict)
    validity_wavelength_range: tuple[float, float] = (400.0, 2500.0)
    reference_temperature: float = 20.0
    source_label: str = ""

    def __post_init__(self):
        if self.axis not in AXES:
            raise MaterialDataError(f"unknown axis {self.axis!r} for {self.name}")
        if self.form not in FORMS:
            raise MaterialDataError(f"unknown dispersion form {self.form!r} for {self.name}")
        lo, hi = self.validity_wavelength_range
        if not 0 < lo < hi:
            raise MaterialDataError(f"bad validity range {self.validity_wavelength_range} for {self.name}")

    @property
    def label(self) -> str:
        return f"{self.name}/{self.axis}/{self.source_label}"

    @property
    def temperature_dependent(self) -> bool:
        # gayer-form models carry their temperature terms in thermo_optic_coefficients too
        return bool(self.thermo_optic_coefficients)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "axis": self.axis,
            "form": self.form,
            "dispersion_coefficients": dict(self.dispersion_coefficients),
            "thermo_optic_coefficients": dict(self.thermo_optic_coefficients),
            "validity_wavelength_range": list(self.validity_wavelength_range),
            "reference_temperature": self.reference_temperature,
            "source_label": self.source_label,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MaterialModel":
        return cls(
            name=d["name"],
            axis=d["axis"],
            form=d["form"],
            dispersion_coefficients={k: float(v) for k, v in d["dispersion_coefficients"].items()},
            thermo_optic_coefficients={k: float(v) for k, v in d.get("thermo_optic_coefficients", {}).items()},
            validity_wavelength_range=tuple(float(x) for x in d["validity_wavelength_range"]),
            reference_temperature=float(d.get("reference_temperature", 20.0)),
            source_label=d.get("source_label", ""),
        )


def constant_index_model(n: float, name: str = "const", axis: str = "isotropic") -> MaterialModel:
    """A dispersion-free model with index ``n`` everywhere (useful for tests and what-ifs)."""
    # quasi_sellmeier with B = D = 0 reduces to n² = A
    return MaterialModel(
        name=name,
        axis=axis,
        form="quasi_sellmeier",
        dispersion_coefficients={"A": n * n, "B": 0.0, "C": 0.0, "D": 0.0},
        validity_wavelength_range=(1.0, 1e6),
        source_label="constant",
    )


def _check_range(model: MaterialModel, wl_nm):
    lo, hi = model.validity_wavelength_range
    wl = np.asarray(wl_nm, dtype=float)
    if not np.all(np.isfinite(wl)) or np.any(wl < lo) or np.any(wl > hi):
        bad = wl[~((wl >= lo) & (wl <= hi))] if wl.ndim else wl
        raise WavelengthRangeError(
            f"{model.label}: wavelength {np.round(bad, 3).tolist()} nm outside "
            f"validity range [{lo:g}, {hi:g}] nm"
        )
    return wl


def _n_squared(model: MaterialModel, L2, T):
    c = model.dispersion_coefficients
    if model.form == "sellmeier":
        n2 = np.ones_like(L2)
        k = 1
        while f"B{k}" in c:
            n2 = n2 + c[f"B{k}"] * L2 / (L2 - c[f"C{k}"])
            k += 1
        return n2
    if model.form == "quasi_sellmeier":
        return c["A"] + c["B"] / (L2 - c["C"]) - c["D"] * L2
    # gayer
    b = model.thermo_optic_coefficients
    f = (T - 24.5) * (T + 570.82)
    b1, b2, b3, b4 = (b.get(k, 0.0) for k in ("b1", "b2", "b3", "b4"))
    return (
        c["a1"] + b1 * f
        + (c["a2"] + b2 * f) / (L2 - (c["a3"] + b3 * f) ** 2)
        + (c["a4"] + b4 * f) / (L2 - c["a5"] ** 2)
        - c["a6"] * L2
    )


def _thermo_shift(model: MaterialModel, T):
    if model.form == "gayer" or not model.thermo_optic_coefficients:
        return 0.0
    dT = T - model.reference_temperature
    shift = 0.0
    for key, ck in model.thermo_optic_coefficients.items():
        shift = shift + ck * dT ** int(key[1:])
    return shift


def refractive_index(model: MaterialModel, wavelength_nm, temperature_c=None):
    """Refractive index n(λ, T).

    ``temperature_c`` defaults to the model's reference temperature. Scalars in,
    scalar out; arrays broadcast.
    """
    wl = _check_range(model, wavelength_nm)
    T = model.reference_temperature if temperature_c is None else np.asarray(temperature_c, dtype=float)
    L2 = (wl * 1e-3) ** 2
    n = np.sqrt(_n_squared(model, L2, T)) + _thermo_shift(model, T)
    return float(n) if np.ndim(n) == 0 else n


def index_derivative(model: MaterialModel, wavelength_nm, temperature_c=None, step_nm: float = 0.1):
    """dn/dλ in 1/nm by central differences with one Richardson step."""
    wl = np.asarray(wavelength_nm, dtype=float)
    _check_range(model, wl)

    def central(h):
        lo, hi = model.validity_wavelength_range
        # stay inside the validity range at the edges
        a = np.clip(wl - h, lo, hi)
        b = np.clip(wl + h, lo, hi)
        return (refractive_index(model, b, temperature_c) - refractive_index(model, a, temperature_c)) / (b - a)

    d = (4.0 * central(step_nm / 2) - central(step_nm)) / 3.0
    return float(d) if np.ndim(d) == 0 else d


def group_index(model: MaterialModel, wavelength_nm, temperature_c=None):
    """n_g = n − λ dn/dλ."""
    wl = np.asarray(wavelength_nm, dtype=float)
    return refractive_index(model, wl, temperature_c) - wl * index_derivative(model, wl, temperature_c)


def thermo_optic_derivative(model: MaterialModel, wavelength_nm, temperature_c=None, step_c: float = 0.5):
    """dn/dT in 1/K (central difference)."""
    T = model.reference_temperature if temperature_c is None else float(temperature_c)
    up = refractive_index(model, wavelength_nm, T + step_c)
    dn = refractive_index(model, wavelength_nm, T - step_c)
    return (up - dn) / (2 * step_c)


@dataclass
class SourceSet:
    """All axes of one material from one literature source, plus validation anchors."""

    material: str
    source_label: str
    reference: str
    models: dict[str, MaterialModel]
    anchors: list[tuple[float, float]] = field(default_factory=list)
    anchor_tolerance: float = 5e-4
    length_prediction: bool = True
    path: Path | None = None
    sha256: str = ""


def load_source_file(path) -> SourceSet:
    path = Path(path)
    raw = path.read_bytes()
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise MaterialDataError(f"{path}: {exc}") from exc
    for key in ("material", "source_label", "form", "validity_nm", "axes"):
        if key not in doc:
            raise MaterialDataError(f"{path}: missing field {key!r}")
    models = {}
    if doc["form"] == "points" and doc["axes"]:
        raise MaterialDataError(f"{path}: point-value files carry no axis coefficients")
    for axis, entry in doc["axes"].items():
        models[axis] = MaterialModel(
            name=doc["material"],
            axis=axis,
            form=doc["form"],
            dispersion_coefficients={k: float(v) for k, v in entry["dispersion"].items()},
            thermo_optic_coefficients={k: float(v) for k, v in entry.get("thermo_optic", {}).items()},
            validity_wavelength_range=tuple(float(x) for x in doc["validity_nm"]),
            reference_temperature=float(doc.get("reference_temperature_c", 20.0)),
            source_label=doc["source_label"],
        )
    anchors = [(float(a["wavelength_nm"]), float(a["birefringence"])) for a in doc.get("anchors", [])]
    return SourceSet(
        material=doc["material"],
        source_label=doc["source_label"],
        reference=doc.get("reference", ""),
        models=models,
        anchors=anchors,
        anchor_tolerance=float(doc.get("anchor_tolerance", 5e-4)),
        length_prediction=bool(doc.get("length_prediction", True)) and bool(models),
        path=path,
        sha256=hashlib.sha256(raw).hexdigest(),
    )


@dataclass
class AnchorCheck:
    material: str
    source_label: str
    wavelength_nm: float
    expected: float
    computed: float | None
    tolerance: float

    @property
    def deviation(self) -> float | None:
        return None if self.computed is None else self.computed - self.expected

    @property
    def passed(self) -> bool | None:
        """None when the source holds point values only and nothing can be recomputed."""
        if self.computed is None:
            return None
        return abs(self.deviation) <= self.tolerance


class MaterialRegistry:
    """Lookup of material models keyed by (material, axis, source label)."""

    def __init__(self, sources: list[SourceSet] | None = None):
        self.sources: dict[tuple[str, str], SourceSet] = {}
        self.models: dict[tuple[str, str, str], MaterialModel] = {}
        for s in sources or []:
            self.add(s)

    def add(self, source: SourceSet):
        self.sources[(source.material, source.source_label)] = source
        for axis, model in source.models.items():
            self.models[(source.material, axis, source.source_label)] = model

    @classmethod
    def from_directory(cls, directory=None, validate: bool = True) -> "MaterialRegistry":
        directory = Path(directory or os.environ.get(DATA_DIR_ENV) or DEFAULT_DATA_DIR)
        files = sorted(directory.glob("*.json"))
        if not files:
            raise MaterialDataError(f"no material files in {directory}")
        reg = cls([load_source_file(p) for p in files])
        if validate:
            failed = [c for c in reg.check_anchors() if c.passed is False]
            if failed:
                lines = ", ".join(
                    f"{c.material}/{c.source_label} at {c.wavelength_nm} nm: {c.computed:.6f} vs {c.expected:.6f}"
                    for c in failed
                )
                raise MaterialDataError(f"birefringence anchors violated: {lines}")
        return reg

    def get(self, material: str, axis: str, source: str | None = None) -> MaterialModel:
        if source is None:
            hits = [m for (mat, ax, _), m in self.models.items() if mat == material and ax == axis]
            if len(hits) == 1:
                return hits[0]
            if not hits:
                raise MaterialLookupError(f"no {axis} axis registered for {material}")
            raise MaterialLookupError(f"{material}/{axis} has several sources; pass one of {self.source_labels(material)}")
        try:
            return self.models[(material, axis, source)]
        except KeyError:
            raise MaterialLookupError(f"no {axis} axis registered for {material} from source {source!r}") from None

    def source_labels(self, material: str) -> list[str]:
        return sorted(src for (mat, src) in self.sources if mat == material)

    def source_set(self, material: str, source: str) -> SourceSet:
        try:
            return self.sources[(material, source)]
        except KeyError:
            raise MaterialLookupError(f"no source {source!r} for {material}") from None

    def check_anchors(self) -> list[AnchorCheck]:
        out = []
        for (mat, src), s in sorted(self.sources.items()):
            for wl, expected in s.anchors:
                computed = birefringence(self, mat, src, wl) if s.models else None
                out.append(AnchorCheck(mat, src, wl, expected, computed, s.anchor_tolerance))
        return out

    def file_hashes(self) -> dict[str, str]:
        return {f"{m}/{s}": src.sha256 for (m, s), src in sorted(self.sources.items())}


def birefringence(registry: MaterialRegistry, material: str, source: str, wavelength_nm, temperature_c=None):
    """n_e − n_o for a uniaxial material."""
    ne = registry.get(material, "extraordinary", source)
    no = registry.get(material, "ordinary", source)
    return refractive_index(ne, wavelength_nm, temperature_c) - refractive_index(no, wavelength_nm, temperature_c)


_default_registry: MaterialRegistry | None = None


def default_registry() -> MaterialRegistry:
    global _default_registry
    if _default_registry is None:
        _default_registry = MaterialRegistry.from_directory()
    return _default_registry


def set_default_registry(registry: MaterialRegistry | None):
    """Replace (or with None, reset) the registry used when none is passed explicitly."""
    global _default_registry
    _default_registry = registry
