"""Coincidence statistics, CHSH bookkeeping, and source efficiency figures.

Analyzer angles are half-wave-plate angles (see :mod:`twocrystal.quantum`),
which is why correlations go as cos(4 phi_s + 4 phi_i).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, fields
from importlib import resources

from scipy import constants, special

from .errors import DataFileError, DomainError, ValidationError

H_PLANCK = constants.h
C = constants.c

#: signal filter used for the production-rate normalization
NORMALIZATION_BANDWIDTH_NM = 2.0
NORMALIZATION_CENTER_NM = 810.0
#: transmission of the 810 nm filter folded into the correlation efficiency
SIGNAL_FILTER_TRANSMISSION = 0.35


def _unit(name, x):
    if not 0 <= x <= 1:
        raise DomainError(f"{name} must lie in [0, 1], got {x}")


def _positive(name, x):
    if not x > 0:
        raise DomainError(f"{name} must be positive, got {x}")


def _nonneg(name, x):
    if not x >= 0:
        raise DomainError(f"{name} must be nonnegative, got {x}")


def _sign(name, x):
    if x not in (1, -1):
        raise DomainError(f"{name} must be +1 or -1, got {x}")


def rate_function(i, j, V, phi_s, phi_i):
    """Relative coincidence rate R_ij = (1 + i j V cos(4 phi_s + 4 phi_i)) / 2."""
    _sign("i", i)
    _sign("j", j)
    _unit("visibility", V)
    return 0.5 * (1 + i * j * V * math.cos(4 * phi_s + 4 * phi_i))


def correlation(V, phi_s, phi_i):
    """E = V cos(4 phi_s + 4 phi_i)."""
    _unit("visibility", V)
    return V * math.cos(4 * phi_s + 4 * phi_i)


def correlation_from_rates(r_pp, r_pm, r_mp, r_mm):
    """(R++ + R-- - R+- - R-+) / (sum of all four)."""
    total = r_pp + r_pm + r_mp + r_mm
    if total <= 0:
        raise DomainError("coincidence rates sum to zero")
    return (r_pp + r_mm - r_pm - r_mp) / total


def chsh_S(e11, e12, e21, e22):
    """S = E11 + E12 + |E21 - E22|."""
    for n, e in (("E11", e11), ("E12", e12), ("E21", e21), ("E22", e22)):
        if not -1 <= e <= 1:
            raise DomainError(f"{n} must lie in [-1, 1], got {e}")
    return e11 + e12 + abs(e21 - e22)


@dataclass(frozen=True)
class ChshSettings:
    phi_s1: float = -math.pi / 16
    phi_i1: float = 0.0
    phi_s2: float = math.pi / 16
    phi_i2: float = math.pi / 8

    def __post_init__(self):
        if not all(math.isfinite(getattr(self, f.name)) for f in fields(self)):
            raise ValidationError("CHSH angles must be finite")

    def pairs(self):
        """Angle pairs in E11, E12, E21, E22 order."""
        return ((self.phi_s1, self.phi_i1), (self.phi_s1, self.phi_i2),
                (self.phi_s2, self.phi_i1), (self.phi_s2, self.phi_i2))

    def as_tuple(self):
        return (self.phi_s1, self.phi_i1, self.phi_s2, self.phi_i2)


def chsh_from_visibility(V, settings=ChshSettings()):
    return chsh_S(*(correlation(V, a, b) for a, b in settings.pairs()))


def s_from_visibilities(v_hv, v_da):
    """S = sqrt(2) (V_HV + V_DA)."""
    _unit("V_HV", v_hv)
    _unit("V_DA", v_da)
    return math.sqrt(2) * (v_hv + v_da)


def sigma_S(r_max, t_r):
    """Standard deviation of S for peak coincidence rate ``r_max`` over ``t_r`` seconds."""
    _positive("R_max", r_max)
    _positive("T_R", t_r)
    return 2 / math.sqrt(2 * r_max * t_r)


def violation_speed(s_m, r_max):
    """x = (S_m - 2) sqrt(2 R_max) / 2, standard deviations per sqrt(second)."""
    _positive("R_max", r_max)
    return (s_m - 2) * math.sqrt(2 * r_max) / 2


def rate_from_speed(s_m, x):
    """Peak coincidence rate implied by a violation speed, inverse of :func:`violation_speed`."""
    if s_m == 2:
        raise DomainError("S_m = 2 carries no rate information")
    return 2 * x**2 / (s_m - 2) ** 2


def violation_sigmas(s_m, r_max, t_r):
    """Number of standard deviations (S_m - 2) / sigma_S."""
    return (s_m - 2) / sigma_S(r_max, t_r)


def mean_photon_number(gate_s, beta, pump_w, pump_m):
    """Mean pair number per gate m = gate * beta * P * lambda / (h c)."""
    _nonneg("gate time", gate_s)
    _nonneg("conversion efficiency", beta)
    _nonneg("pump power", pump_w)
    _positive("pump wavelength", pump_m)
    return gate_s * beta * pump_w * pump_m / (H_PLANCK * C)


def multi_pair_probability(gate_s, beta, pump_w, pump_m):
    """Return ``(m, P(n >= 2))`` for Poissonian pair statistics in one gate."""
    m = mean_photon_number(gate_s, beta, pump_w, pump_m)
    # 1 - (1 + m) e^{-m} is the regularized lower incomplete gamma P(2, m),
    # which stays accurate where the difference would cancel
    return m, float(special.gammainc(2, m))


def poisson_tail_series(m, n_min=2, tol=1e-18):
    """sum_{n >= n_min} e^{-m} m^n / n! by direct summation."""
    term = math.exp(-m) * m**n_min / math.factorial(n_min)
    total, n = 0.0, n_min
    while term > tol * max(total, 1e-300) or n < n_min + 3:
        total += term
        n += 1
        term *= m / n
    return total


def pair_coupling(gamma_s, mu_is):
    """gamma_c = mu_{i|s} gamma_s."""
    _unit("gamma_s", gamma_s)
    _unit("mu_i|s", mu_is)
    return mu_is * gamma_s


def bandwidth_thz(bandwidth_nm, center_nm):
    """Frequency width c dl / l^2 in THz."""
    _positive("bandwidth", bandwidth_nm)
    _positive("center wavelength", center_nm)
    return C * bandwidth_nm * 1e-9 / (center_nm * 1e-9) ** 2 / 1e12


def production_rate(r_c, bandwidth_nm=NORMALIZATION_BANDWIDTH_NM,
                    center_nm=NORMALIZATION_CENTER_NM, pump_mw=1.0):
    """Pair rate per THz and per mW, R_c / (dnu * P_p)."""
    _nonneg("pair rate", r_c)
    _positive("pump power", pump_mw)
    return r_c / (bandwidth_thz(bandwidth_nm, center_nm) * pump_mw)


def accidental_rate(r_s, r_i, gate_s):
    """R_s (1 - exp(-R_i gate)): signal triggers whose gate catches an unrelated idler."""
    for n, v in (("R_s", r_s), ("R_i", r_i), ("gate time", gate_s)):
        _nonneg(n, v)
    return -r_s * math.expm1(-r_i * gate_s)


def spectral_resolution(wavelength_nm, gate_s):
    """lambda^2 / (c gate), in nm."""
    _positive("wavelength", wavelength_nm)
    _positive("gate time", gate_s)
    return (wavelength_nm * 1e-9) ** 2 / (C * gate_s) * 1e9


def correlation_efficiency(mu_is, transmission=SIGNAL_FILTER_TRANSMISSION):
    """mu_{i|s} corrected for the filter transmission."""
    _unit("mu_i|s", mu_is)
    if not 0 < transmission <= 1:
        raise DomainError(f"transmission must lie in (0, 1], got {transmission}")
    return mu_is / transmission


@dataclass(frozen=True)
class CountRecord:
    """One source run: pump, singles and pair rates, gating, and the printed efficiencies.

    Efficiency fields and ``production_rate`` hold printed values; the
    functions above recompute them where a formula exists.
    """

    pump_mw: float
    rate_signal: float
    rate_idler: float
    rate_pairs: float
    rate_coincidence: float
    gate_s: float = 5e-9
    gate_rate_hz: float = 0.0
    transmission_signal: float = 1.0
    transmission_idler: float = 1.0
    bandwidth_nm: float = NORMALIZATION_BANDWIDTH_NM
    center_nm: float = NORMALIZATION_CENTER_NM
    beta: float = 0.0
    gamma_s: float = 0.0
    gamma_i: float = 0.0
    gamma_c: float = 0.0
    mu_is: float = 0.0
    sigma: float = 0.0
    production_rate: float = 0.0
    label: str = ""

    def __post_init__(self):
        for name in ("rate_signal", "rate_idler", "rate_pairs", "rate_coincidence",
                     "gate_s", "gate_rate_hz", "beta"):
            if not getattr(self, name) >= 0:
                raise ValidationError(f"{name} must be nonnegative, got {getattr(self, name)}")
        for name in ("transmission_signal", "transmission_idler"):
            if not 0 < getattr(self, name) <= 1:
                raise ValidationError(f"{name} must lie in (0, 1], got {getattr(self, name)}")
        if not self.pump_mw > 0:
            raise ValidationError(f"pump power must be positive, got {self.pump_mw}")

    def derived(self, pump_nm=532.0):
        """Recomputed figures: m, P(n >= 2), production rate, formula gamma_c, accidentals."""
        m, p2 = multi_pair_probability(self.gate_s, self.beta, self.pump_mw * 1e-3, pump_nm * 1e-9)
        gamma_c = pair_coupling(self.gamma_s, self.mu_is) if self.gamma_s or self.mu_is else 0.0
        return {
            "m": m,
            "p_multi": p2,
            "production_rate": production_rate(self.rate_coincidence, self.bandwidth_nm,
                                               self.center_nm, self.pump_mw),
            "gamma_c_formula": gamma_c,
            "accidental_rate": accidental_rate(self.rate_signal, self.rate_idler, self.gate_s),
        }


_FLOAT_FIELDS = {f.name for f in fields(CountRecord)} - {"label"}


def load_count_records(path=None):
    """Read run records from CSV. Column names are the :class:`CountRecord` fields."""
    if path is None:
        src = resources.files("twocrystal.data").joinpath("source_runs.csv")
        text, origin = src.read_text(), "source_runs.csv"
    else:
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise DataFileError(f"{path}: {exc.strerror or exc}") from exc
        origin = str(path)
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    reader = csv.DictReader(lines)
    unknown = set(reader.fieldnames or ()) - _FLOAT_FIELDS - {"label"}
    if unknown:
        raise DataFileError(f"{origin}: unknown columns {sorted(unknown)}")
    records = []
    for n, row in enumerate(reader, start=2):
        try:
            kwargs = {k: (v.strip() if k == "label" else float(v)) for k, v in row.items() if v not in (None, "")}
            records.append(CountRecord(**kwargs))
        except (TypeError, ValueError) as exc:
            raise DataFileError(f"{origin}: record {n - 1}: {exc}") from exc
    return records
