"""Two-qubit polarization states.

Basis order is (VV, VH, HV, HH): index 0 is V, index 1 is H, the signal
photon is the first tensor factor.

Angle convention for analyzers: the arguments are half-wave-plate angles.
The signal analyzer projects on polarization angle 2*phi_s and the idler
analyzer on -2*phi_i (the idler arm sees a mirrored plate), so that the
Bell state (|VV> + |HH>)/sqrt(2) has correlation cos(4 phi_s + 4 phi_i).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DataFileError, DegeneracyError, DomainError, ValidationError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
#: eigenvalue tolerance for raw linear-inversion fixtures
LENIENT_PSD_TOL = 0.15

DEFAULT_CHSH_ANGLES = (-math.pi / 16, 0.0, math.pi / 16, math.pi / 8)

_s2 = 1 / math.sqrt(2)
#: single-photon polarization states as (V, H) amplitudes
POLARIZATIONS = {
    "V": np.array([1, 0], dtype=complex),
    "H": np.array([0, 1], dtype=complex),
    "D": np.array([_s2, _s2], dtype=complex),
    "A": np.array([-_s2, _s2], dtype=complex),
    "R": np.array([-1j * _s2, _s2], dtype=complex),
    "L": np.array([1j * _s2, _s2], dtype=complex),
}

_PAULI = [
    np.eye(2, dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]
#: Hermitian operator basis for two qubits, tr(G_a G_b) = 4 delta_ab
_GAMMA = np.array([np.kron(a, b) for a in _PAULI for b in _PAULI])


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Validated 4x4 two-qubit state.

    ``psd_tol`` is the most negative eigenvalue accepted; raw tomography
    output may need :data:`LENIENT_PSD_TOL`.
    """

    data: np.ndarray
    psd_tol: float = PSD_TOL

    def __post_init__(self):
        arr = np.array(self.data, dtype=complex)
        if arr.shape != (4, 4):
            raise ValidationError(f"density matrix must be 4x4, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValidationError("density matrix has non-finite entries")
        herm = np.max(np.abs(arr - arr.conj().T))
        if herm > HERMITIAN_TOL:
            raise ValidationError(f"density matrix not Hermitian (max deviation {herm:.3g})")
        tr = np.trace(arr).real
        if abs(tr - 1) > TRACE_TOL:
            raise ValidationError(f"density matrix trace is {tr:.12g}, expected 1")
        lo = np.linalg.eigvalsh(arr).min()
        if lo < -self.psd_tol:
            raise ValidationError(
                f"density matrix not positive semidefinite (eigenvalue {lo:.4g} < -{self.psd_tol:g})"
            )
        arr.setflags(write=False)
        object.__setattr__(self, "data", arr)

    def __array__(self, dtype=None, copy=None):
        return self.data if dtype is None else self.data.astype(dtype)

    def __getitem__(self, idx):
        return self.data[idx]

    def eigenvalues(self):
        return np.linalg.eigvalsh(self.data)

    def purity(self):
        return float(np.trace(self.data @ self.data).real)


def as_density(rho, psd_tol=PSD_TOL) -> DensityMatrix:
    if isinstance(rho, DensityMatrix):
        return rho
    return DensityMatrix(np.asarray(rho), psd_tol)


def phi_state(phi):
    """(|VV> + e^{i phi}|HH>)/sqrt(2) as a state vector."""
    return np.array([1, 0, 0, np.exp(1j * phi)], dtype=complex) * _s2


def bell_state(phi=0.0) -> DensityMatrix:
    psi = phi_state(phi)
    rho = np.outer(psi, psi.conj())
    return DensityMatrix(0.5 * (rho + rho.conj().T))


def visibility_mixed_state(V, phi=0.0) -> DensityMatrix:
    """V |Phi^phi><Phi^phi| + (1 - V) (|VV><VV| + |HH><HH|)/2."""
    if not 0 <= V <= 1:
        raise DomainError(f"visibility must lie in [0, 1], got {V}")
    rho = np.zeros((4, 4), dtype=complex)
    rho[0, 0] = rho[3, 3] = 0.5
    rho[0, 3] = 0.5 * V * np.exp(-1j * phi)
    rho[3, 0] = np.conj(rho[0, 3])
    return DensityMatrix(rho)


def maximally_mixed() -> DensityMatrix:
    return DensityMatrix(np.eye(4) / 4)


def fidelity(rho, phi=0.0):
    """<Phi^phi| rho |Phi^phi>."""
    rho = as_density(rho)
    psi = phi_state(phi)
    return float(np.real(psi.conj() @ rho.data @ psi))


def best_fidelity(rho):
    """Maximum of :func:`fidelity` over phi, returned as ``(F, phi)``.

    F(phi) = (rho_00 + rho_33)/2 + Re(rho_03 e^{i phi}) peaks at
    phi = -arg(rho_03).
    """
    rho = as_density(rho)
    r = rho.data
    phi = -np.angle(r[0, 3])
    return float(0.5 * (r[0, 0] + r[3, 3]).real + abs(r[0, 3])), float(phi)


def concurrence(rho):
    """Wootters concurrence max(0, l1 - l2 - l3 - l4).

    The l are the decreasing square roots of the eigenvalues of
    rho (sy x sy) rho* (sy x sy). For a positive semidefinite rho they are the
    singular values of sqrt(rho) (sy x sy) sqrt(rho)*, which avoids square
    roots of round-off-sized eigenvalues. Raw fixtures with clearly negative
    eigenvalues fall back to the magnitudes of the eigenvalues of that product.
    """
    rho = as_density(rho)
    yy = np.kron(_PAULI[2], _PAULI[2])
    w, U = np.linalg.eigh(rho.data)
    if w.min() >= -PSD_TOL:
        sq = (U * np.sqrt(np.clip(w, 0, None))) @ U.conj().T
        lam = np.linalg.svd(sq @ yy @ sq.conj(), compute_uv=False)
    else:
        ev = np.linalg.eigvals(rho.data @ yy @ rho.data.conj() @ yy)
        lam = np.sort(np.sqrt(np.abs(ev.real)))[::-1]
    return float(max(0.0, lam[0] - lam[1] - lam[2] - lam[3]))


def _binary_entropy(p):
    if p <= 0 or p >= 1:
        return 0.0
    return float(-p * math.log2(p) - (1 - p) * math.log2(1 - p))


def eof_from_concurrence(c):
    c = min(max(c, 0.0), 1.0)
    return _binary_entropy((1 + math.sqrt(1 - c * c)) / 2)


def eof(rho):
    """Entanglement of formation."""
    return eof_from_concurrence(concurrence(rho))


# --- CHSH -------------------------------------------------------------------


def _analyzer(angle):
    """Observable with +1 eigenvector cos(a)|H> + sin(a)|V>."""
    c, s = math.cos(2 * angle), math.sin(2 * angle)
    # in (V, H) coordinates: +1 state (sin a, cos a)
    return np.array([[-c, s], [s, c]], dtype=complex)


def correlation_from_density(rho, phi_s, phi_i):
    """Expectation <A_s A_i> at half-wave-plate angles (phi_s, phi_i)."""
    rho = as_density(rho)
    op = np.kron(_analyzer(2 * phi_s), _analyzer(-2 * phi_i))
    return float(np.real(np.trace(rho.data @ op)))


def chsh_from_density(rho, angles=DEFAULT_CHSH_ANGLES):
    """S = E11 + E12 + |E21 - E22| at half-wave-plate angles (phi_s1, phi_i1, phi_s2, phi_i2)."""
    rho = as_density(rho)
    s1, i1, s2, i2 = angles
    E = [correlation_from_density(rho, a, b) for a, b in ((s1, i1), (s1, i2), (s2, i1), (s2, i2))]
    return E[0] + E[1] + abs(E[2] - E[3])


# --- tomography -------------------------------------------------------------

#: sixteen product projections of the standard pairwise set, signal first
DEFAULT_SETTINGS = (
    ("H", "H"), ("H", "V"), ("V", "V"), ("V", "H"),
    ("R", "H"), ("R", "V"), ("D", "V"), ("D", "H"),
    ("D", "R"), ("D", "D"), ("R", "D"), ("H", "D"),
    ("V", "D"), ("V", "L"), ("H", "L"), ("R", "L"),
)


@dataclass(frozen=True)
class TomographyEntry:
    signal: str
    idler: str
    counts: int
    time_s: float = 1.0

    def __post_init__(self):
        for s in (self.signal, self.idler):
            if s not in POLARIZATIONS:
                raise ValidationError(f"unknown projector setting {s!r}; use one of {''.join(POLARIZATIONS)}")
        if not (self.counts >= 0 and math.isfinite(self.counts)):
            raise ValidationError(f"counts must be finite and nonnegative, got {self.counts}")
        if not self.time_s > 0:
            raise ValidationError(f"acquisition time must be positive, got {self.time_s}")


@dataclass(frozen=True)
class TomographyRecord:
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        if len(self.entries) < 16:
            raise DegeneracyError(f"need at least 16 settings, got {len(self.entries)}")

    @property
    def settings(self):
        return [(e.signal, e.idler) for e in self.entries]


def projector_state(signal, idler):
    return np.kron(POLARIZATIONS[signal], POLARIZATIONS[idler])


def design_matrix(settings):
    """Rows map the 16 real coordinates of a Hermitian operator to <psi|M|psi>."""
    rows = []
    for s, i in settings:
        psi = projector_state(s, i)
        rows.append(np.real(np.einsum("i,kij,j->k", psi.conj(), _GAMMA, psi)))
    return np.array(rows)


def expected_counts(rho, settings=DEFAULT_SETTINGS, rate=1.0, time_s=1.0):
    """Noiseless counts rate * time * <psi|rho|psi> per setting."""
    rho = as_density(rho, LENIENT_PSD_TOL)
    return np.array([rate * time_s * np.real(projector_state(s, i).conj() @ rho.data @ projector_state(s, i))
                     for s, i in settings])


def synthetic_record(rho, settings=DEFAULT_SETTINGS, rate=1e4, time_s=1.0, seed=None, noiseless=False):
    """Tomography record from the forward model, Poisson-sampled unless ``noiseless``."""
    mean = expected_counts(rho, settings, rate, time_s)
    if noiseless:
        counts = mean
    else:
        counts = np.random.default_rng(seed).poisson(np.clip(mean, 0, None))
    return TomographyRecord(
        tuple(TomographyEntry(s, i, c if noiseless else int(c), time_s) for (s, i), c in zip(settings, counts))
    )


def tomography_reconstruct(record: TomographyRecord, method="linear"):
    """Density matrix from projection counts.

    ``linear`` solves the linear system exactly (least squares for more than
    16 settings) and validates leniently, since noisy data can give small
    negative eigenvalues. ``projected`` then clips negative eigenvalues and
    renormalizes the trace.
    """
    if method not in ("linear", "projected"):
        raise DomainError(f"unknown reconstruction method {method!r}")
    B = design_matrix(record.settings)
    if np.linalg.matrix_rank(B) < 16:
        raise DegeneracyError("tomography settings are not informationally complete")
    rates = np.array([e.counts / e.time_s for e in record.entries], dtype=float)
    if rates.sum() <= 0:
        raise ValidationError("tomography record has zero total counts")
    coords, *_ = np.linalg.lstsq(B, rates, rcond=None)
    M = np.einsum("k,kij->ij", coords, _GAMMA)
    M = 0.5 * (M + M.conj().T)
    tr = np.trace(M).real
    if tr <= 0:
        raise ValidationError("reconstructed operator has non-positive trace")
    rho = M / tr
    if method == "linear":
        return DensityMatrix(rho, psd_tol=math.inf)
    w, U = np.linalg.eigh(rho)
    w = np.clip(w, 0, None)
    rho = (U * w) @ U.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


def load_settings(path):
    """Read a settings table with ``signal`` and ``idler`` columns."""
    with open(path, newline="") as fh:
        return _parse_settings(fh, str(path))


def default_settings_file():
    return resources.files("twocrystal.data").joinpath("tomography_settings.csv")


def _parse_settings(fh, origin):
    rows = []
    reader = csv.DictReader(row for row in fh if not row.startswith("#"))
    for n, row in enumerate(reader, start=2):
        try:
            rows.append((row["signal"].strip(), row["idler"].strip()))
        except (KeyError, AttributeError) as exc:
            raise DataFileError(f"{origin}: row {n}: missing signal/idler column") from exc
        if any(s not in POLARIZATIONS for s in rows[-1]):
            raise DataFileError(f"{origin}: row {n}: unknown setting {rows[-1]}")
    return tuple(rows)


def read_record(path):
    """Read counts from delimited text with header ``signal,idler,counts,time_s``."""
    entries = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(row for row in fh if not row.startswith("#"))
        for n, row in enumerate(reader, start=2):
            try:
                entries.append(TomographyEntry(row["signal"].strip(), row["idler"].strip(),
                                               float(row["counts"]), float(row.get("time_s") or 1.0)))
            except (KeyError, TypeError, ValueError) as exc:
                raise DataFileError(f"{path}: row {n}: {exc}") from exc
    return TomographyRecord(tuple(entries))


def write_record(record: TomographyRecord, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["signal", "idler", "counts", "time_s"])
        for e in record.entries:
            w.writerow([e.signal, e.idler, repr(e.counts), repr(e.time_s)])


# --- density-matrix fixtures --------------------------------------------------


def parse_density(text, origin="<string>", psd_tol=PSD_TOL) -> DensityMatrix:
    """Parse a real 4x4 block followed by an imaginary 4x4 block.

    Blank lines and ``#`` comments are ignored; entries are whitespace separated.
    """
    rows = []
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            vals = [float(x) for x in line.split()]
        except ValueError as exc:
            raise DataFileError(f"{origin}: line {n}: {exc}") from exc
        if len(vals) != 4:
            raise DataFileError(f"{origin}: line {n}: expected 4 numbers, got {len(vals)}")
        rows.append(vals)
    if len(rows) != 8:
        raise DataFileError(f"{origin}: expected 8 rows (real block then imaginary block), got {len(rows)}")
    arr = np.array(rows[:4]) + 1j * np.array(rows[4:])
    try:
        return DensityMatrix(arr, psd_tol)
    except ValidationError as exc:
        raise DataFileError(f"{origin}: {exc}") from exc


def read_density(path, psd_tol=PSD_TOL) -> DensityMatrix:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DataFileError(f"{path}: {exc.strerror or exc}") from exc
    return parse_density(text, str(path), psd_tol)


def format_density(rho) -> str:
    r = np.asarray(rho)
    out = io.StringIO()
    out.write("# real part\n")
    for row in r.real:
        out.write(" ".join(f"{x: .17g}" for x in row) + "\n")
    out.write("# imaginary part\n")
    for row in r.imag:
        out.write(" ".join(f"{x: .17g}" for x in row) + "\n")
    return out.getvalue()


def bundled_density(name="rho_exp") -> DensityMatrix:
    """Bundled fixture: ``rho_exp`` (lenient validation) or ``bell_phi0``."""
    text = resources.files("twocrystal.data").joinpath(f"{name}.txt").read_text()
    tol = LENIENT_PSD_TOL if name == "rho_exp" else PSD_TOL
    return parse_density(text, name, tol)
