"""Refractive and group indices from a data-file-driven Sellmeier registry.

Wavelengths are vacuum wavelengths in micrometres, temperatures in degrees
Celsius. Every model carries a functional-form tag selecting how its flat
``coefficients`` list is interpreted:

``constant``   ``[n0]``: dispersion-free test model.
``sellmeier``  ``[A, D, B1, C1, B2, C2, ...]``:
               n^2 = A + sum_k B_k l^2 / (l^2 - C_k) - D l^2
``pole``       ``[A, D, B1, C1, ...]``:
               n^2 = A + sum_k B_k / (l^2 - C_k) - D l^2
``cauchy``     ``[c0, c1, c2, ...]``: n^2 = sum_j c_j l^(-2j)
``gayer``      ``[a1..a6, b1..b4]``, temperature enters through
               f = (T - 24.5)(T + 570.82):
               n^2 = a1 + b1 f + (a2 + b2 f) / (l^2 - (a3 + b3 f)^2)
                     + (a4 + b4 f) / (l^2 - a5^2) - a6 l^2

Optional ``thermal_coefficients`` add a correction on top of any form,
laid out as ``[T_ref, c10, c11, c12, c13, c20, ...]``:

    delta_n = sum_k (sum_m c_km l^(-m)) (T - T_ref)^k ,  k = 1, 2, ...
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from types import MappingProxyType
from typing import Mapping

import jsonschema
import numpy as np
import yaml

from .errors import DataFileError, DuplicateKeyError, RangeError, RegistryError

AXES = ("X", "Y", "Z", "ordinary", "extraordinary")
AXIS_ALIASES = {"o": "ordinary", "e": "extraordinary", "x": "X", "y": "Y", "z": "Z"}
FORMS = ("constant", "sellmeier", "pole", "cauchy", "gayer")

DEFAULT_MATERIALS_FILE = "materials.yaml"


def normalize_axis(axis: str) -> str:
    if axis in AXES:
        return axis
    try:
        return AXIS_ALIASES[axis.lower()]
    except (KeyError, AttributeError):
        raise RegistryError(f"unknown axis {axis!r}; expected one of {AXES}") from None


@dataclass(frozen=True)
class SellmeierModel:
    name: str
    axis: str
    form: str
    coefficients: tuple
    valid_wavelength_range: tuple = (0.2, 5.0)
    valid_temperature_range: tuple = (-273.15, 1000.0)
    thermal_coefficients: tuple | None = None
    source: str = ""

    def __post_init__(self):
        object.__setattr__(self, "axis", normalize_axis(self.axis))
        object.__setattr__(self, "coefficients", tuple(float(c) for c in self.coefficients))
        if self.thermal_coefficients is not None:
            object.__setattr__(
                self, "thermal_coefficients", tuple(float(c) for c in self.thermal_coefficients)
            )
        object.__setattr__(self, "valid_wavelength_range", tuple(map(float, self.valid_wavelength_range)))
        object.__setattr__(self, "valid_temperature_range", tuple(map(float, self.valid_temperature_range)))
        _check_layout(self)

    @property
    def key(self):
        return (self.name, self.axis)


def _check_layout(model: SellmeierModel):
    form, c = model.form, model.coefficients
    where = f"{model.name}/{model.axis}"
    if form not in FORMS:
        raise DataFileError(f"{where}: unknown form {form!r}; expected one of {FORMS}")
    if form == "constant" and len(c) != 1:
        raise DataFileError(f"{where}: 'constant' takes exactly one coefficient")
    if form in ("sellmeier", "pole") and (len(c) < 4 or len(c) % 2):
        raise DataFileError(f"{where}: '{form}' takes [A, D, B1, C1, ...] (even length >= 4)")
    if form == "cauchy" and len(c) < 1:
        raise DataFileError(f"{where}: 'cauchy' needs at least one coefficient")
    if form == "gayer" and len(c) != 10:
        raise DataFileError(f"{where}: 'gayer' takes [a1..a6, b1..b4] (10 values)")
    t = model.thermal_coefficients
    if t is not None and (len(t) < 5 or (len(t) - 1) % 4):
        raise DataFileError(f"{where}: thermal_coefficients must be [T_ref, 4 values per order ...]")
    lo, hi = model.valid_wavelength_range
    if not 0 < lo < hi:
        raise DataFileError(f"{where}: bad valid_wavelength_range {model.valid_wavelength_range}")
    tlo, thi = model.valid_temperature_range
    if not tlo <= thi:
        raise DataFileError(f"{where}: bad valid_temperature_range {model.valid_temperature_range}")


def _check_ranges(model: SellmeierModel, wl, T):
    wl = np.asarray(wl, dtype=float)
    lo, hi = model.valid_wavelength_range
    name = f"{model.name}/{model.axis}"
    if np.any(~np.isfinite(wl)) or np.any(wl < lo):
        bad = float(np.min(wl)) if np.all(np.isfinite(wl)) else float("nan")
        raise RangeError(
            f"{name}: wavelength {bad:g} um below lower bound {lo:g} um", bound=lo, value=bad
        )
    if np.any(wl > hi):
        bad = float(np.max(wl))
        raise RangeError(
            f"{name}: wavelength {bad:g} um above upper bound {hi:g} um", bound=hi, value=bad
        )
    tlo, thi = model.valid_temperature_range
    if not (math.isfinite(T) and tlo <= T <= thi):
        bound = tlo if not T > tlo else thi
        side = "below lower" if T < tlo else "above upper"
        raise RangeError(f"{name}: temperature {T:g} C {side} bound {bound:g} C", bound=bound, value=T)


def _n2_and_derivative(model: SellmeierModel, wl, T):
    """Return (n^2, d(n^2)/dl) of the base form, without thermal correction."""
    c = model.coefficients
    l2 = wl * wl
    form = model.form
    if form == "constant":
        return np.full_like(wl, c[0] ** 2), np.zeros_like(wl)
    if form in ("sellmeier", "pole"):
        A, D = c[0], c[1]
        n2 = A - D * l2
        dn2 = -2.0 * D * wl
        for B, C in zip(c[2::2], c[3::2]):
            den = l2 - C
            if form == "sellmeier":
                n2 = n2 + B * l2 / den
                dn2 = dn2 - 2.0 * B * C * wl / den**2
            else:
                n2 = n2 + B / den
                dn2 = dn2 - 2.0 * B * wl / den**2
        return n2, dn2
    if form == "cauchy":
        n2 = np.zeros_like(wl)
        dn2 = np.zeros_like(wl)
        for j, cj in enumerate(c):
            n2 = n2 + cj * wl ** (-2 * j)
            if j:
                dn2 = dn2 - 2 * j * cj * wl ** (-2 * j - 1)
        return n2, dn2
    # gayer
    a1, a2, a3, a4, a5, a6, b1, b2, b3, b4 = c
    f = (T - 24.5) * (T + 570.82)
    p1 = a2 + b2 * f
    q1 = (a3 + b3 * f) ** 2
    p2 = a4 + b4 * f
    q2 = a5**2
    n2 = a1 + b1 * f + p1 / (l2 - q1) + p2 / (l2 - q2) - a6 * l2
    dn2 = -2.0 * wl * p1 / (l2 - q1) ** 2 - 2.0 * wl * p2 / (l2 - q2) ** 2 - 2.0 * a6 * wl
    return n2, dn2


def _thermal(model: SellmeierModel, wl, T):
    """Return (delta_n, d(delta_n)/dl) of the thermal correction."""
    t = model.thermal_coefficients
    if t is None:
        return 0.0, 0.0
    dT = T - t[0]
    dn = np.zeros_like(wl)
    ddn = np.zeros_like(wl)
    for k, start in enumerate(range(1, len(t), 4), start=1):
        for m, cm in enumerate(t[start : start + 4]):
            dn = dn + cm * wl ** (-m) * dT**k
            if m:
                ddn = ddn - m * cm * wl ** (-m - 1) * dT**k
    return dn, ddn


def _evaluate(model, wl, T):
    scalar = np.ndim(wl) == 0
    wl = np.asarray(wl, dtype=float)
    _check_ranges(model, wl, T)
    n2, dn2 = _n2_and_derivative(model, wl, T)
    if np.any(n2 <= 0):
        raise RangeError(f"{model.name}/{model.axis}: n^2 <= 0 inside the declared range")
    n0 = np.sqrt(n2)
    dn_t, ddn_t = _thermal(model, wl, T)
    n = n0 + dn_t
    dn_dl = dn2 / (2.0 * n0) + ddn_t
    if scalar:
        return float(n), float(dn_dl)
    return n, dn_dl


def refractive_index(model: SellmeierModel, wavelength_um, temperature_c=25.0):
    """Phase index at a vacuum wavelength (um) and temperature (C).

    Accepts a scalar or an array of wavelengths. Raises ``RangeError`` when
    any input leaves the model's declared validity range.
    """
    return _evaluate(model, wavelength_um, temperature_c)[0]


def group_index(model: SellmeierModel, wavelength_um, temperature_c=25.0):
    """Group index n_g = n - l dn/dl from the analytic derivative of the form."""
    n, dn_dl = _evaluate(model, wavelength_um, temperature_c)
    if np.ndim(n):
        return n - np.asarray(wavelength_um, dtype=float) * dn_dl
    return n - float(wavelength_um) * dn_dl


def index_derivative(model: SellmeierModel, wavelength_um, temperature_c=25.0):
    """dn/dl in 1/um."""
    return _evaluate(model, wavelength_um, temperature_c)[1]


@dataclass(frozen=True)
class MaterialRegistry:
    """Immutable map from (material name, axis) to ``SellmeierModel``."""

    models: Mapping = field(default_factory=dict)
    path: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "models", MappingProxyType(dict(self.models)))

    def get(self, name: str, axis: str) -> SellmeierModel:
        key = (name, normalize_axis(axis))
        try:
            return self.models[key]
        except KeyError:
            known = ", ".join(f"{n}/{a}" for n, a in sorted(self.models)) or "none"
            raise RegistryError(f"no model for material {name!r} axis {key[1]!r} (known: {known})") from None

    def __contains__(self, key):
        name, axis = key
        try:
            return (name, normalize_axis(axis)) in self.models
        except RegistryError:
            return False

    def __len__(self):
        return len(self.models)

    def __iter__(self):
        return iter(self.models.values())

    def materials(self):
        return sorted({name for name, _ in self.models})


@lru_cache(maxsize=1)
def _schema():
    text = resources.files("twocrystal.data").joinpath("materials.schema.json").read_text()
    return json.loads(text)


def parse_registry(text: str, origin: str = "<string>") -> MaterialRegistry:
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" line {mark.line + 1}" if mark is not None else ""
        raise DataFileError(f"{origin}:{where} YAML parse error: {exc}") from exc
    if doc is None:
        return MaterialRegistry({}, path=origin)
    try:
        jsonschema.validate(doc, _schema())
    except jsonschema.ValidationError as exc:
        loc = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise DataFileError(f"{origin}: schema error at {loc}: {exc.message}") from exc
    models = {}
    for i, entry in enumerate(doc.get("models", [])):
        try:
            model = SellmeierModel(
                name=entry["name"],
                axis=entry["axis"],
                form=entry["form"],
                coefficients=entry["coefficients"],
                thermal_coefficients=entry.get("thermal_coefficients"),
                valid_wavelength_range=entry["valid_wavelength_range"],
                valid_temperature_range=entry["valid_temperature_range"],
                source=entry.get("source", ""),
            )
        except (DataFileError, RegistryError) as exc:
            raise DataFileError(f"{origin}: entry {i} ({entry.get('name')}/{entry.get('axis')}): {exc}") from exc
        if model.key in models:
            raise DuplicateKeyError(f"{origin}: entry {i}: duplicate key {model.name}/{model.axis}")
        models[model.key] = model
    return MaterialRegistry(models, path=origin)


def load_registry(path) -> MaterialRegistry:
    """Load and schema-check a material data file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFileError(f"cannot read material file {path}: {exc.strerror}") from exc
    return parse_registry(text, origin=str(path))


@lru_cache(maxsize=1)
def default_registry() -> MaterialRegistry:
    """The bundled coefficient sets."""
    ref = resources.files("twocrystal.data").joinpath(DEFAULT_MATERIALS_FILE)
    return parse_registry(ref.read_text(), origin=f"twocrystal/data/{DEFAULT_MATERIALS_FILE}")
