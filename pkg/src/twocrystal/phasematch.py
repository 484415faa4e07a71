"""Quasi-phase-matching arithmetic for collinear type-0 downconversion.

Wavelengths in nm, poling period in um, crystal length in mm, temperature
in C. Wave numbers and mismatches are in 1/m. The mismatch convention is

    dk = k_s + k_i - k_p + K,   K = 2 pi / period,

so a grating compensates the usual positive k_p - k_s - k_i.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import optimize

from .errors import DomainError, SolverError
from .materials import MaterialRegistry, default_registry, refractive_index

#: half-maximum point of sinc^2: sinc(x)^2 = 1/2 at x = SINC2_HALF
SINC2_HALF = 1.3915573782515103

ENERGY_RTOL = 1e-9


def idler_wavelength(pump_nm, signal_nm):
    """Idler wavelength from energy conservation 1/l_p = 1/l_s + 1/l_i."""
    if not 0 < pump_nm < signal_nm:
        raise DomainError(
            f"no downconversion for pump {pump_nm} nm and signal {signal_nm} nm "
            "(need 0 < pump < signal)"
        )
    return 1.0 / (1.0 / pump_nm - 1.0 / signal_nm)


@dataclass(frozen=True)
class QpmConfig:
    pump_nm: float
    signal_nm: float
    idler_nm: float
    poling_period_um: float
    length_mm: float
    temperature_c: float
    material: str = "KTP"
    axes: tuple = ("Z", "Z", "Z")  # pump, signal, idler

    def __post_init__(self):
        lhs = 1.0 / self.pump_nm
        rhs = 1.0 / self.signal_nm + 1.0 / self.idler_nm
        if abs(lhs - rhs) > ENERGY_RTOL * lhs:
            raise DomainError(
                f"energy not conserved: 1/{self.pump_nm} != 1/{self.signal_nm} + 1/{self.idler_nm}"
            )
        if not self.poling_period_um > 0:
            raise DomainError(f"poling period must be positive, got {self.poling_period_um}")
        if not self.length_mm >= 0:
            raise DomainError(f"crystal length must be non-negative, got {self.length_mm}")

    @classmethod
    def from_pump_signal(cls, pump_nm, signal_nm, poling_period_um, length_mm, temperature_c,
                         material="KTP", axes=("Z", "Z", "Z")):
        return cls(pump_nm, signal_nm, idler_wavelength(pump_nm, signal_nm),
                   poling_period_um, length_mm, temperature_c, material, tuple(axes))

    @property
    def grating_k(self):
        """Grating vector K = 2 pi / period in 1/m (0 for an infinite period)."""
        return 2 * math.pi / (self.poling_period_um * 1e-6)

    def with_signal(self, signal_nm):
        return replace(self, signal_nm=signal_nm, idler_nm=idler_wavelength(self.pump_nm, signal_nm))


def wavenumber(registry, material, axis, wavelength_nm, temperature_c):
    """k = 2 pi n / l in 1/m."""
    model = registry.get(material, axis)
    wl_um = np.asarray(wavelength_nm, dtype=float) * 1e-3
    n = refractive_index(model, wl_um if wl_um.ndim else float(wl_um), temperature_c)
    return 2 * np.pi * n / (wl_um * 1e-6)


def _bulk_mismatch(registry, material, axes, pump_nm, signal_nm, idler_nm, T):
    """k_s + k_i - k_p without grating, 1/m."""
    ap, as_, ai = axes
    kp = wavenumber(registry, material, ap, pump_nm, T)
    ks = wavenumber(registry, material, as_, signal_nm, T)
    ki = wavenumber(registry, material, ai, idler_nm, T)
    return ks + ki - kp


def qpm_mismatch(registry: MaterialRegistry | None, config: QpmConfig):
    """Longitudinal mismatch dk = k_s + k_i - k_p + K in 1/m."""
    registry = registry or default_registry()
    bulk = _bulk_mismatch(registry, config.material, config.axes, config.pump_nm,
                          config.signal_nm, config.idler_nm, config.temperature_c)
    return float(bulk + config.grating_k)


def solve_poling_period(registry, signal_nm, pump_nm, temperature_c, material="KTP",
                        axes=("Z", "Z", "Z"), bulk_tol=1e-3):
    """Poling period (um) that zeroes the mismatch.

    The mismatch is affine in K, so the root is K = k_p - k_s - k_i. Returns
    ``math.inf`` when the interaction is already bulk phase matched
    (|k_p - k_s - k_i| < ``bulk_tol`` 1/m) and raises ``SolverError`` when
    the required grating vector is negative.
    """
    registry = registry or default_registry()
    idler_nm = idler_wavelength(pump_nm, signal_nm)
    bulk = float(_bulk_mismatch(registry, material, axes, pump_nm, signal_nm, idler_nm, temperature_c))
    if abs(bulk) < bulk_tol:
        return math.inf
    K = -bulk
    if K <= 0:
        raise SolverError(
            f"no positive poling period: k_s + k_i - k_p = {bulk:.6g} 1/m is already positive"
        )
    return 2 * math.pi / K * 1e6


def solve_temperature(registry, config: QpmConfig, bracket=None):
    """Temperature (C) at which the configured period phase matches.

    Brent's method inside ``bracket`` (defaults to the pump-axis model's
    validity range). Raises ``SolverError`` if the mismatch keeps its sign.
    """
    registry = registry or default_registry()
    if bracket is None:
        bracket = registry.get(config.material, config.axes[0]).valid_temperature_range

    def f(T):
        return qpm_mismatch(registry, replace(config, temperature_c=T))

    lo, hi = bracket
    flo, fhi = f(lo), f(hi)
    if flo * fhi > 0:
        raise SolverError(
            f"mismatch does not change sign between {lo} C and {hi} C ({flo:.4g}, {fhi:.4g} 1/m)"
        )
    return optimize.brentq(f, lo, hi, xtol=1e-10)


def mismatch_spectrum(registry, config: QpmConfig, signal_nm):
    """dk (1/m) over an array of signal wavelengths with the idler slaved to energy conservation."""
    registry = registry or default_registry()
    signal_nm = np.asarray(signal_nm, dtype=float)
    if np.any(signal_nm <= config.pump_nm):
        raise DomainError("signal grid must lie above the pump wavelength")
    idler_nm = 1.0 / (1.0 / config.pump_nm - 1.0 / signal_nm)
    bulk = _bulk_mismatch(registry, config.material, config.axes, config.pump_nm,
                          signal_nm, idler_nm, config.temperature_c)
    return bulk + config.grating_k


def pm_spectrum(registry, config: QpmConfig, signal_nm):
    """Plane-wave phase-matching intensity sinc^2(L dk / 2) on a signal grid.

    Returns an ``(n, 2)`` array of ``(signal_nm, relative_intensity)`` rows.
    The envelope equals 1 where dk = 0.
    """
    signal_nm = np.atleast_1d(np.asarray(signal_nm, dtype=float))
    dk = mismatch_spectrum(registry, config, signal_nm)
    x = dk * config.length_mm * 1e-3 / 2
    intensity = np.sinc(x / np.pi) ** 2
    return np.column_stack([signal_nm, intensity])


def phase_matched_signal(registry, config: QpmConfig, window_nm=30.0):
    """Signal wavelength (nm) where dk = 0 for the configured period and temperature."""
    registry = registry or default_registry()

    def f(ls):
        return float(mismatch_spectrum(registry, config, ls)[()])

    lo, hi = config.signal_nm - window_nm, config.signal_nm + window_nm
    if f(lo) * f(hi) > 0:
        raise SolverError(f"no phase-matched signal within {lo:g}..{hi:g} nm")
    return optimize.brentq(f, lo, hi, xtol=1e-12)


def spectrum_fwhm(registry, config: QpmConfig, window_nm=30.0):
    """Full width at half maximum (nm) of the signal phase-matching peak.

    Solves L dk / 2 = +-1.39156 on either side of the phase-matched signal.
    """
    registry = registry or default_registry()
    if config.length_mm <= 0:
        raise DomainError("FWHM undefined for zero crystal length")
    center = phase_matched_signal(registry, config, window_nm)
    half_L = config.length_mm * 1e-3 / 2

    def g(ls):
        return abs(float(mismatch_spectrum(registry, config, ls)[()]) * half_L) - SINC2_HALF

    edges = []
    for direction in (-1, 1):
        step = 0.01
        far = center + direction * step
        while g(far) < 0:
            step *= 2
            far = center + direction * step
            if step > window_nm:
                raise SolverError("half-maximum point not found inside the search window")
        edges.append(optimize.brentq(g, *sorted((center, far)), xtol=1e-12))
    return edges[1] - edges[0]
