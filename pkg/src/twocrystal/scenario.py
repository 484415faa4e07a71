"""Scenario files: INI text describing a source configuration and its scan grids.

Example::

    [scenario]
    schema_version = 1
    description = KTP length scan

    [crystal]
    material = KTP
    pump_nm = 532
    signal_nm = 810
    temperature_c = 111
    poling_period_um = solve      ; or a number
    length_mm = 4.5

    [signal_filter]               ; optional, omitted = no filter
    fwhm_nm = inf

    [idler_filter]
    fwhm_nm = 10                  ; center_nm defaults to the idler wavelength

    [plate]                       ; optional
    material = calcite
    arm = idler
    thickness_mm = solve          ; or a number
    temperature_c = 20

    [grid]
    lengths_mm = 0.5, 1, 2        ; comma list, or start:stop:step (stop inclusive)
    thicknesses_mm = 0:1.5:0.01

    [integration]
    half_width_sigmas = 8
    rtol = 1e-6

    [spectrum]                    ; phase-matching spectrum grid (signal nm)
    signal_nm = 800:820:0.1
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .coherence import FilterSpec, Integration, Plate, SourceConfig, solve_plate_thickness
from .errors import DataFileError
from .materials import MaterialRegistry, default_registry
from .phasematch import QpmConfig, idler_wavelength, solve_poling_period

SCHEMA_VERSION = 1

_SECTIONS = {
    "scenario": {"schema_version", "description"},
    "crystal": {"material", "pump_nm", "signal_nm", "temperature_c", "poling_period_um", "length_mm"},
    "signal_filter": {"center_nm", "fwhm_nm"},
    "idler_filter": {"center_nm", "fwhm_nm"},
    "plate": {"material", "arm", "thickness_mm", "temperature_c"},
    "grid": {"lengths_mm", "thicknesses_mm"},
    "integration": {"half_width_sigmas", "rtol", "max_refinements"},
    "spectrum": {"signal_nm"},
}


@dataclass(frozen=True)
class Scenario:
    source: SourceConfig
    lengths_mm: tuple
    thicknesses_mm: tuple | None
    spectrum_nm: tuple | None
    description: str = ""
    origin: str = ""


def parse_grid(text, origin="", key=""):
    """``a, b, c`` or ``start:stop:step`` with the stop included."""
    text = text.strip()
    where = f"{origin}: {key}" if key else origin
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0 or stop < start:
                raise ValueError("need step > 0 and stop >= start")
            n = int(math.floor((stop - start) / step + 1e-9)) + 1
            return tuple(float(v) for v in np.round(start + step * np.arange(n), 12))
        if not text:
            return ()
        return tuple(float(x) for x in text.split(","))
    except ValueError as exc:
        raise DataFileError(f"{where}: bad grid {text!r}: {exc}") from exc


def bundled_scenarios():
    folder = resources.files("twocrystal.data").joinpath("scenarios")
    return sorted(p.name for p in folder.iterdir() if p.name.endswith(".cfg"))


def resolve_scenario_path(name):
    """A filesystem path, or the file name of a bundled scenario."""
    path = Path(name)
    if path.exists() or path.parent != Path("."):
        return path
    if name in bundled_scenarios():
        return resources.files("twocrystal.data").joinpath("scenarios", name)
    return path


def load_scenario(name, registry: MaterialRegistry | None = None) -> Scenario:
    path = resolve_scenario_path(name)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFileError(f"cannot read scenario file {name}: {exc.strerror or exc}") from exc
    return parse_scenario(text, str(name), registry)


def parse_scenario(text, origin="<string>", registry: MaterialRegistry | None = None) -> Scenario:
    registry = registry or default_registry()
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        cp.read_string(text, source=origin)
    except configparser.Error as exc:
        raise DataFileError(f"{origin}: {exc}".replace("\n", " ")) from exc

    for sec in cp.sections():
        if sec not in _SECTIONS:
            raise DataFileError(f"{origin}: unknown section [{sec}]")
        extra = set(cp[sec]) - _SECTIONS[sec]
        if extra:
            raise DataFileError(f"{origin}: [{sec}] unknown keys {sorted(extra)}")
    for sec in ("scenario", "crystal"):
        if not cp.has_section(sec):
            raise DataFileError(f"{origin}: missing section [{sec}]")

    def num(sec, key, default=None):
        if not cp.has_option(sec, key):
            if default is None:
                raise DataFileError(f"{origin}: [{sec}] missing key {key!r}")
            return default
        raw = cp.get(sec, key)
        try:
            return float(raw)
        except ValueError:
            raise DataFileError(f"{origin}: [{sec}] {key} = {raw!r} is not a number") from None

    version = cp.get("scenario", "schema_version", fallback=None)
    if version is None or version.strip() != str(SCHEMA_VERSION):
        raise DataFileError(f"{origin}: [scenario] schema_version must be {SCHEMA_VERSION}, got {version!r}")

    try:
        material = cp.get("crystal", "material", fallback="KTP")
        pump = num("crystal", "pump_nm", 532.0)
        signal = num("crystal", "signal_nm", 810.0)
        T = num("crystal", "temperature_c", 111.0)
        length = num("crystal", "length_mm", 4.5)
        idler = idler_wavelength(pump, signal)
        period_raw = cp.get("crystal", "poling_period_um", fallback="solve").strip()
        if period_raw == "solve":
            period = solve_poling_period(registry, signal, pump, T, material)
        else:
            period = num("crystal", "poling_period_um")
        crystal = QpmConfig(pump, signal, idler, period, length, T, material)

        def filt(sec, center):
            if not cp.has_section(sec):
                return FilterSpec(center, math.inf)
            return FilterSpec(num(sec, "center_nm", center), num(sec, "fwhm_nm", math.inf))

        integ = Integration()
        if cp.has_section("integration"):
            integ = Integration(
                num("integration", "half_width_sigmas", integ.half_width_sigmas),
                num("integration", "rtol", integ.rtol),
                int(num("integration", "max_refinements", integ.max_refinements)),
            )
        source = SourceConfig(crystal, filt("signal_filter", signal), filt("idler_filter", idler),
                              None, integ, registry=registry)

        if cp.has_section("plate"):
            plate = Plate(cp.get("plate", "material", fallback="calcite"),
                          0.0,
                          cp.get("plate", "arm", fallback="idler"),
                          num("plate", "temperature_c", 20.0))
            source = SourceConfig(crystal, source.signal_filter, source.idler_filter, plate,
                                  integ, registry=registry)
            d_raw = cp.get("plate", "thickness_mm", fallback="0").strip()
            d = solve_plate_thickness(source) if d_raw == "solve" else num("plate", "thickness_mm", 0.0)
            source = source.with_thickness(d)
    except (configparser.Error, KeyError) as exc:
        raise DataFileError(f"{origin}: {exc}") from exc

    lengths = (length,)
    thicknesses = None
    if cp.has_section("grid"):
        if cp.has_option("grid", "lengths_mm"):
            lengths = parse_grid(cp.get("grid", "lengths_mm"), origin, "lengths_mm")
        if cp.has_option("grid", "thicknesses_mm"):
            thicknesses = parse_grid(cp.get("grid", "thicknesses_mm"), origin, "thicknesses_mm")
    spectrum = None
    if cp.has_option("spectrum", "signal_nm"):
        spectrum = parse_grid(cp.get("spectrum", "signal_nm"), origin, "signal_nm")
    return Scenario(source, lengths, thicknesses, spectrum,
                    cp.get("scenario", "description", fallback=""), origin)
