"""Two-crystal coherence term rho_1122 and its compensation by a birefringent plate.

The frequency detuning eps (rad/s) shifts the signal to w_0s + eps and the
idler to w_0i - eps. With the filter weight g(eps) = |A_s|^2 |A_i|^2 the
normalized off-diagonal element is

    rho_1122 = 1/2 * N / D,
    N = int g(eps) exp(i (tau_X - kappa) eps) sinc^2(tau_Z eps / 2) d eps,
    D = int g(eps) sinc^2(tau_Z eps / 2) d eps,

where tau_X and tau_Z are the signal-idler group delays accumulated over the
crystal length along the X and Z axes and kappa is the plate's
ordinary/extraordinary group delay. The unobservable global phase factors are
not carried. The coupling constants of g cancel in N / D.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import constants, special

from .errors import DomainError, QuadratureError, SolverError, ValidationError
from .materials import MaterialRegistry, default_registry, group_index
from .phasematch import QpmConfig, solve_poling_period, idler_wavelength

C = constants.c
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))

_GL_FINE = np.polynomial.legendre.leggauss(20)
_GL_COARSE = np.polynomial.legendre.leggauss(10)


@dataclass(frozen=True)
class FilterSpec:
    """Gaussian detector filter; ``fwhm_nm = inf`` means no filter."""

    center_nm: float
    fwhm_nm: float

    def __post_init__(self):
        if not self.center_nm > 0:
            raise ValidationError(f"filter center must be positive, got {self.center_nm}")
        if not self.fwhm_nm > 0:
            raise ValidationError(f"filter bandwidth must be positive, got {self.fwhm_nm}")

    @property
    def flat(self):
        return math.isinf(self.fwhm_nm)

    def amplitude_at(self, wavelength_nm):
        """exp(-2 ln2 (l - l_c)^2 / dl^2); |A|^2 is 1/2 at l_c +- dl/2."""
        if self.flat:
            return np.ones_like(np.asarray(wavelength_nm, dtype=float))
        return np.exp(-2 * math.log(2) * (np.asarray(wavelength_nm) - self.center_nm) ** 2 / self.fwhm_nm**2)

    def sigma_omega(self):
        """Standard deviation of |A|^2 in angular frequency (rad/s)."""
        lam = self.center_nm * 1e-9
        return 2 * math.pi * C * self.fwhm_nm * 1e-9 * FWHM_TO_SIGMA / lam**2


@dataclass(frozen=True)
class Plate:
    material: str = "calcite"
    thickness_mm: float = 0.0
    arm: str = "idler"
    temperature_c: float = 20.0

    def __post_init__(self):
        if not self.thickness_mm >= 0:
            raise ValidationError(f"plate thickness must be >= 0, got {self.thickness_mm}")
        if self.arm not in ("signal", "idler"):
            raise ValidationError(f"plate arm must be 'signal' or 'idler', got {self.arm!r}")


@dataclass(frozen=True)
class Integration:
    half_width_sigmas: float = 8.0
    rtol: float = 1e-6
    max_refinements: int = 6

    def __post_init__(self):
        if self.half_width_sigmas < 5:
            raise ValidationError("integration half-width must be at least 5 filter sigmas")
        if not self.rtol > 0:
            raise ValidationError("integration tolerance must be positive")


@dataclass(frozen=True)
class InteractionConstants:
    """Coupling constants of the filter weight. They cancel in the normalized element."""

    chi2: float = 1.0
    f1: float = 1.0
    field_amplitude: float = 1.0
    hbar_scale: float = 1.0

    def __post_init__(self):
        if min(self.chi2, self.f1, self.field_amplitude, self.hbar_scale) <= 0:
            raise ValidationError("interaction constants must be strictly positive")


@dataclass(frozen=True)
class SourceConfig:
    crystal: QpmConfig
    signal_filter: FilterSpec | None = None
    idler_filter: FilterSpec | None = None
    plate: Plate | None = None
    integration: Integration = field(default_factory=Integration)
    constants: InteractionConstants = field(default_factory=InteractionConstants)
    registry: MaterialRegistry | None = None

    def __post_init__(self):
        if self.signal_filter is None:
            object.__setattr__(self, "signal_filter", FilterSpec(self.crystal.signal_nm, math.inf))
        if self.idler_filter is None:
            object.__setattr__(self, "idler_filter", FilterSpec(self.crystal.idler_nm, math.inf))
        if self.registry is None:
            object.__setattr__(self, "registry", default_registry())

    def with_length(self, length_mm):
        return replace(self, crystal=replace(self.crystal, length_mm=length_mm))

    def with_thickness(self, thickness_mm):
        plate = self.plate or Plate()
        return replace(self, plate=replace(plate, thickness_mm=thickness_mm))


def ktp_source(length_mm=4.5, idler_fwhm_nm=10.0, signal_fwhm_nm=math.inf, plate_mm=None,
               material="KTP", temperature_c=111.0, pump_nm=532.0, signal_nm=810.0,
               registry=None, **kwargs):
    """Convenience constructor for the 532 -> 810 + 1550 nm configuration."""
    registry = registry or default_registry()
    idler_nm = idler_wavelength(pump_nm, signal_nm)
    period = solve_poling_period(registry, signal_nm, pump_nm, temperature_c, material)
    crystal = QpmConfig(pump_nm, signal_nm, idler_nm, period, length_mm, temperature_c, material)
    plate = None if plate_mm is None else Plate(thickness_mm=plate_mm)
    return SourceConfig(
        crystal,
        FilterSpec(signal_nm, signal_fwhm_nm),
        FilterSpec(idler_nm, idler_fwhm_nm),
        plate,
        registry=registry,
        **kwargs,
    )


@dataclass(frozen=True)
class CoherenceResult:
    rho1122: complex
    visibility: float
    tau_x: float
    tau_z: float
    kappa: float
    error_estimate: float = 0.0
    nodes: int = 0

    @property
    def rho1111(self):
        return 0.5

    @property
    def rho2222(self):
        return 0.5

    def density_matrix(self):
        """4x4 matrix in the (VV, VH, HV, HH) basis."""
        rho = np.zeros((4, 4), dtype=complex)
        rho[0, 0] = rho[3, 3] = 0.5
        rho[0, 3] = self.rho1122
        rho[3, 0] = np.conj(self.rho1122)
        return rho


def _omega(wavelength_nm):
    return 2 * math.pi * C / (wavelength_nm * 1e-9)


def filter_amplitude(filt: FilterSpec, arm: str, eps, center_nm=None):
    """Field amplitude A of a Gaussian filter at detuning ``eps`` (rad/s).

    The photon frequency is w_0 + eps for the signal and w_0 - eps for the
    idler, with w_0 from ``center_nm`` (defaults to the filter center), and
    the wavelength is the exact 2 pi c / w. Frequencies <= 0 carry no amplitude.
    """
    if arm not in ("signal", "idler"):
        raise DomainError(f"arm must be 'signal' or 'idler', got {arm!r}")
    eps = np.asarray(eps, dtype=float)
    if filt.flat:
        out = np.ones_like(eps)
        return float(out) if out.ndim == 0 else out
    w0 = _omega(center_nm if center_nm is not None else filt.center_nm)
    w = w0 + eps if arm == "signal" else w0 - eps
    with np.errstate(divide="ignore", invalid="ignore"):
        lam_nm = np.where(w > 0, 2 * math.pi * C / np.where(w > 0, w, 1.0) * 1e9, np.inf)
        out = filt.amplitude_at(lam_nm)
    out = np.where(w > 0, out, 0.0)
    return float(out) if out.ndim == 0 else out


def group_delay_taus(config: SourceConfig):
    """Signal-idler group delays (tau_X, tau_Z) in seconds over the crystal length."""
    reg, cr = config.registry, config.crystal
    T = cr.temperature_c
    ls, li = cr.signal_nm * 1e-3, cr.idler_nm * 1e-3
    L = cr.length_mm * 1e-3
    mx = reg.get(cr.material, "X")
    mz = reg.get(cr.material, "Z")
    tau_x = (group_index(mx, ls, T) - group_index(mx, li, T)) * L / C
    tau_z = (group_index(mz, ls, T) - group_index(mz, li, T)) * L / C
    return float(tau_x), float(tau_z)


def plate_group_birefringence(registry, material, wavelength_nm, temperature_c=20.0):
    """n_g^o - n_g^e of a uniaxial plate."""
    registry = registry or default_registry()
    wl = wavelength_nm * 1e-3
    ng_o = group_index(registry.get(material, "ordinary"), wl, temperature_c)
    ng_e = group_index(registry.get(material, "extraordinary"), wl, temperature_c)
    return float(ng_o - ng_e)


def plate_kappa(registry, material, thickness_mm, wavelength_nm, temperature_c=20.0):
    """Plate delay kappa = (n_g^o - n_g^e) d / c in seconds."""
    if thickness_mm < 0:
        raise DomainError(f"plate thickness must be >= 0, got {thickness_mm}")
    dng = plate_group_birefringence(registry, material, wavelength_nm, temperature_c)
    return dng * thickness_mm * 1e-3 / C


def _arm_sign_and_wavelength(config: SourceConfig):
    # The idler detunes as w_0i - eps, the signal as w_0s + eps, so a plate
    # with the same o/e assignment enters with opposite sign in the signal arm.
    if config.plate.arm == "idler":
        return 1.0, config.crystal.idler_nm
    return -1.0, config.crystal.signal_nm


def config_kappa(config: SourceConfig):
    """Effective plate delay entering the phase as exp(i (tau_X - kappa) eps)."""
    if config.plate is None or config.plate.thickness_mm == 0:
        return 0.0
    sign, wl = _arm_sign_and_wavelength(config)
    return sign * plate_kappa(config.registry, config.plate.material, config.plate.thickness_mm,
                              wl, config.plate.temperature_c)


def solve_plate_thickness(config: SourceConfig):
    """Plate thickness (mm) with kappa = tau_X, i.e. full cancellation."""
    tau_x, _ = group_delay_taus(config)
    if tau_x == 0:
        return 0.0
    plate = config.plate or Plate()
    sign, wl = (1.0, config.crystal.idler_nm) if plate.arm == "idler" else (-1.0, config.crystal.signal_nm)
    dng = sign * plate_group_birefringence(config.registry, plate.material, wl, plate.temperature_c)
    if dng == 0:
        raise SolverError(f"{plate.material} has no group birefringence at {wl:g} nm")
    d_mm = tau_x * C / dng * 1e3
    if d_mm < 0:
        raise SolverError(
            f"plate in the {plate.arm} arm would need negative thickness ({d_mm:.4g} mm); "
            "rotate the plate by 90 degrees or move it to the other arm"
        )
    return d_mm


def asymptotic_rho(config: SourceConfig):
    """Infinite-length limit 1/2 max(0, 1 - |tau_X - kappa| / |tau_Z|)."""
    tau_x, tau_z = group_delay_taus(config)
    if tau_z == 0:
        raise DomainError("tau_Z = 0: the long-crystal limit is undefined")
    delta = tau_x - config_kappa(config)
    return 0.5 * max(0.0, 1.0 - abs(delta) / abs(tau_z))


# --- quadrature -------------------------------------------------------------


def _filter_weight(config: SourceConfig, eps):
    cr = config.crystal
    a_s = filter_amplitude(config.signal_filter, "signal", eps, cr.signal_nm)
    a_i = filter_amplitude(config.idler_filter, "idler", eps, cr.idler_nm)
    return (a_s * a_i) ** 2


def _sinc2(b, eps):
    x = b * eps
    return np.sinc(x / np.pi) ** 2


def _flat_tail(deltas, b, W):
    """2 int_W^inf cos(a eps) sinc^2(b eps) d eps for each a in ``deltas``."""

    def c_int(k):
        # int_W^inf cos(k e) / e^2 de
        k = np.abs(k)
        si, _ = special.sici(k * W)
        return np.cos(k * W) / W - k * (np.pi / 2 - si)

    deltas = np.asarray(deltas, dtype=float)
    return (c_int(deltas) - 0.5 * c_int(deltas + 2 * b) - 0.5 * c_int(deltas - 2 * b)) / b**2


def _window(config: SourceConfig, tau_z):
    """Integration interval (lo, hi), narrowest filter sigma and whether any filter is finite.

    With a finite filter the product g vanishes beyond ``half_width_sigmas``
    of the tightest filter; without one the interval spans 20 sinc^2 lobes
    and the remainder is added analytically.
    """
    cr = config.crystal
    n_sig = config.integration.half_width_sigmas
    arms = ((config.signal_filter, _omega(cr.signal_nm)), (config.idler_filter, _omega(cr.idler_nm)))
    finite = [(f.sigma_omega(), abs(_omega(f.center_nm) - w0)) for f, w0 in arms if not f.flat]
    if finite:
        W = min(n_sig * s + off for s, off in finite)
        sigma_min = min(s for s, _ in finite)
        # physical photons only: w_0s + eps > 0 and w_0i - eps > 0
        return max(-W, -arms[0][1]), min(W, arms[1][1]), sigma_min, True
    if tau_z == 0:
        raise DomainError("no filter and tau_Z = 0: the coherence integral diverges")
    W = 40 * math.pi / abs(tau_z)
    return -W, W, math.inf, False


def _integrate(config, tau_z, deltas):
    """Return (N array, D, error estimate, node count) for the detunings ``deltas``."""
    deltas = np.atleast_1d(np.asarray(deltas, dtype=float))
    b = tau_z / 2
    lo, hi, sigma_min, finite = _window(config, tau_z)
    freq = float(np.max(np.abs(deltas))) + 2 * abs(b)
    h = math.pi / freq if freq > 0 else (hi - lo)
    if finite:
        h = min(h, sigma_min / 2)
    panels = max(16, int(math.ceil((hi - lo) / h)))
    rtol = config.integration.rtol

    def rule(n_panels, gl):
        x, w = gl
        edges = np.linspace(lo, hi, n_panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[1:] + edges[:-1])
        eps = (mid[:, None] + half[:, None] * x[None, :]).ravel()
        wts = (half[:, None] * w[None, :]).ravel()
        base = wts * _filter_weight(config, eps) * _sinc2(b, eps)
        D = base.sum()
        phase = np.exp(1j * np.outer(deltas, eps))
        N = phase @ base
        return N, D, eps.size

    for _ in range(config.integration.max_refinements + 1):
        N, D, n_nodes = rule(panels, _GL_FINE)
        N2, D2, n2 = rule(panels, _GL_COARSE)
        err = max(float(np.max(np.abs(N - N2))), abs(D - D2)) / abs(D)
        if err <= rtol:
            break
        panels *= 2
    else:
        raise QuadratureError(
            f"coherence quadrature did not converge (relative error {err:.3g} > {rtol:.3g})",
            estimate=err,
        )
    if not finite:
        N = N + _flat_tail(deltas, b, hi)
        D = D + float(_flat_tail(0.0, b, hi))
    return N, D, err, n_nodes + n2


def _result(N, D, tau_x, tau_z, kappa, err, nodes):
    rho = complex(0.5 * N / D)
    return CoherenceResult(rho, 2 * abs(rho), tau_x, tau_z, kappa, err, nodes)


def rho1122(config: SourceConfig) -> CoherenceResult:
    """Normalized off-diagonal element for one configuration."""
    tau_x, tau_z = group_delay_taus(config)
    return rho_from_delays(config, tau_x, tau_z, config_kappa(config))


def rho_from_delays(config: SourceConfig, tau_x, tau_z, kappa=0.0) -> CoherenceResult:
    """Same integral with the delays given directly; filters and tolerances come from ``config``."""
    delta = tau_x - kappa
    if tau_z == 0 and delta == 0:
        return CoherenceResult(0.5 + 0j, 1.0, tau_x, tau_z, kappa, 0.0, 0)
    N, D, err, nodes = _integrate(config, tau_z, [delta])
    return _result(N[0], D, tau_x, tau_z, kappa, err, nodes)


@dataclass(frozen=True)
class ScanRow:
    length_mm: float
    thickness_mm: float
    result: CoherenceResult


def coherence_scan(config: SourceConfig, lengths_mm, thicknesses_mm=None):
    """Evaluate rho_1122 on a length grid, optionally crossed with plate thicknesses.

    Rows come back in input order, thickness varying fastest. The first
    failing point aborts the scan with its coordinates in the message.
    """
    lengths_mm = list(lengths_mm)
    if not lengths_mm:
        raise DomainError("empty length grid")
    if thicknesses_mm is not None:
        thicknesses_mm = list(thicknesses_mm)
        if not thicknesses_mm:
            raise DomainError("empty thickness grid")
    rows = []
    for L in lengths_mm:
        try:
            cfg = config.with_length(L)
            if thicknesses_mm is None:
                d = cfg.plate.thickness_mm if cfg.plate else 0.0
                rows.append(ScanRow(L, d, rho1122(cfg)))
                continue
            rows.extend(_thickness_sweep(cfg, L, thicknesses_mm))
        except (ArithmeticError, ValueError) as exc:
            exc.args = (f"at L = {L} mm: {exc}",) + exc.args[1:]
            raise
    return rows


def _thickness_sweep(cfg, L, thicknesses_mm):
    tau_x, tau_z = group_delay_taus(cfg)
    kappas = [config_kappa(cfg.with_thickness(d)) for d in thicknesses_mm]
    deltas = np.array([tau_x - k for k in kappas])
    if tau_z == 0:
        return [ScanRow(L, d, rho1122(cfg.with_thickness(d))) for d in thicknesses_mm]
    N, D, err, nodes = _integrate(cfg, tau_z, deltas)
    return [ScanRow(L, d, _result(n, D, tau_x, tau_z, k, err, nodes))
            for d, k, n in zip(thicknesses_mm, kappas, N)]


def ridge(rows):
    """Per-length row with maximal visibility from a (length, thickness) scan."""
    best = {}
    for row in rows:
        cur = best.get(row.length_mm)
        if cur is None or row.result.visibility > cur.result.visibility:
            best[row.length_mm] = row
    return list(best.values())
