import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twocrystal.errors import DataFileError, DegeneracyError, DomainError, ValidationError
from twocrystal.experiment import s_from_visibilities
from twocrystal.quantum import (
    DEFAULT_SETTINGS, DensityMatrix, TomographyEntry, TomographyRecord, bell_state, best_fidelity,
    bundled_density, chsh_from_density, concurrence, default_settings_file, eof, expected_counts,
    fidelity, format_density, load_settings, maximally_mixed, parse_density, read_density, read_record,
    synthetic_record, tomography_reconstruct, visibility_mixed_state, write_record,
)

ANGLES = (-math.pi / 16, 0.0, math.pi / 16, math.pi / 8)


def random_state(rng, rank=None):
    rank = rank or rng.integers(1, 5)
    G = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
    rho = G @ G.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


def test_bell_state_entries():
    rho = bell_state(0.0).data
    expected = np.zeros((4, 4))
    expected[np.ix_([0, 3], [0, 3])] = 0.5
    assert np.allclose(rho, expected, atol=1e-15)
    flip = bell_state(math.pi).data
    assert flip[0, 3].real == pytest.approx(-0.5) and flip[3, 0].real == pytest.approx(-0.5)
    for phi in (0.0, 0.4, 2.0):
        assert bell_state(phi).purity() == pytest.approx(1.0, abs=1e-14)


def test_visibility_mixed_state():
    assert np.allclose(visibility_mixed_state(1.0, 0.7).data, bell_state(0.7).data)
    assert np.allclose(visibility_mixed_state(0.0).data, np.diag([0.5, 0, 0, 0.5]))
    assert abs(visibility_mixed_state(0.915).data[0, 3]) == pytest.approx(0.4575, abs=1e-12)
    with pytest.raises(DomainError):
        visibility_mixed_state(1.2)


def test_density_validation():
    with pytest.raises(ValidationError):
        DensityMatrix(np.eye(3) / 3)
    with pytest.raises(ValidationError):
        DensityMatrix(np.eye(4) / 2)
    bad = np.diag([0.6, 0.5, 0.0, -0.1])
    with pytest.raises(ValidationError):
        DensityMatrix(bad)
    nonherm = np.eye(4, dtype=complex) / 4
    nonherm[0, 1] = 0.1j
    with pytest.raises(ValidationError):
        DensityMatrix(nonherm)


def test_fidelity_basics():
    assert fidelity(bell_state(0.3), 0.3) == pytest.approx(1.0, abs=1e-14)
    assert fidelity(maximally_mixed(), 1.1) == pytest.approx(0.25, abs=1e-15)


@pytest.mark.parametrize("V", np.linspace(0, 1, 11))
def test_fidelity_and_concurrence_closed_forms(V):
    for phi in (0.0, 0.9, -2.2):
        rho = visibility_mixed_state(V, phi)
        assert fidelity(rho, phi) == pytest.approx((1 + V) / 2, abs=1e-14)
        assert concurrence(rho) == pytest.approx(V, abs=1e-9)


def brute_concurrence(rho):
    # Hill-Wootters via the Hermitian matrix sqrt(sqrt(rho) rho~ sqrt(rho))
    yy = np.kron([[0, -1j], [1j, 0]], [[0, -1j], [1j, 0]])
    w, U = np.linalg.eigh(rho)
    sq = (U * np.sqrt(np.clip(w, 0, None))) @ U.conj().T
    R = sq @ yy @ rho.conj() @ yy @ sq
    lam = np.sort(np.sqrt(np.clip(np.linalg.eigvalsh(R), 0, None)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def test_concurrence_against_hermitian_oracle():
    rng = np.random.default_rng(7)
    for _ in range(30):
        rho = random_state(rng)
        # the oracle takes square roots of round-off eigenvalues on rank-deficient states
        assert concurrence(rho) == pytest.approx(brute_concurrence(rho.data), abs=1e-7)


def test_concurrence_eof_extremes():
    assert concurrence(bell_state(0)) == pytest.approx(1.0, abs=1e-12)
    assert eof(bell_state(0)) == pytest.approx(1.0, abs=1e-9)
    assert concurrence(maximally_mixed()) == 0.0
    assert eof(maximally_mixed()) == 0.0


def test_eof_monotone_in_concurrence():
    vals = [eof(visibility_mixed_state(v)) for v in np.linspace(0, 1, 21)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_rho_exp_metrics():
    rho = bundled_density("rho_exp")
    assert eof(rho) == pytest.approx(0.56, abs=0.01)
    F, phi = best_fidelity(rho)
    scan = max(fidelity(rho, p) for p in np.linspace(-math.pi, math.pi, 20001))
    assert F == pytest.approx(scan, abs=1e-8)
    assert F == pytest.approx(0.95, abs=0.01)
    assert fidelity(rho, phi) == pytest.approx(F, abs=1e-14)


def test_rho_exp_requires_lenient_mode():
    text = (bundled_density("rho_exp").data.real, bundled_density("rho_exp").data.imag)
    with pytest.raises(ValidationError):
        DensityMatrix(text[0] + 1j * text[1])


def test_chsh_from_density():
    assert chsh_from_density(bell_state(0), ANGLES) == pytest.approx(2 * math.sqrt(2), abs=1e-10)
    assert chsh_from_density(maximally_mixed(), ANGLES) == pytest.approx(0.0, abs=1e-15)


@settings(max_examples=50, deadline=None)
@given(V=st.floats(0, 1))
def test_chsh_matches_visibility_formula(V):
    got = chsh_from_density(visibility_mixed_state(V, 0.0), ANGLES)
    assert got == pytest.approx(math.sqrt(2) * (1 + V), abs=1e-9)
    assert got == pytest.approx(s_from_visibilities(1.0, V), abs=1e-9)


# --- tomography -----------------------------------------------------------------


def test_settings_file_matches_default():
    assert load_settings(default_settings_file()) == DEFAULT_SETTINGS


@pytest.mark.parametrize("state", [bell_state(0.0), visibility_mixed_state(0.5, math.pi / 3)])
@pytest.mark.parametrize("method", ["linear", "projected"])
def test_noiseless_round_trip(state, method):
    rec = synthetic_record(state, noiseless=True)
    out = tomography_reconstruct(rec, method)
    assert np.max(np.abs(out.data - state.data)) < 1e-6


def test_noiseless_round_trip_random_states():
    rng = np.random.default_rng(11)
    for _ in range(20):
        state = random_state(rng)
        out = tomography_reconstruct(synthetic_record(state, rate=3.7, time_s=2.0, noiseless=True))
        assert np.max(np.abs(out.data - state.data)) < 1e-9


def test_poisson_sampled_bell_state():
    fids = []
    for seed in range(20):
        rec = synthetic_record(bell_state(0.0), rate=1e4, seed=seed)
        fids.append(fidelity(tomography_reconstruct(rec, "linear"), 0.0))
    assert np.mean(fids) > 0.99
    proj = tomography_reconstruct(synthetic_record(bell_state(0.0), rate=1e4, seed=0), "projected")
    assert proj.eigenvalues().min() >= -1e-12


def test_sampling_is_seeded():
    a = synthetic_record(bell_state(0.0), seed=3)
    b = synthetic_record(bell_state(0.0), seed=3)
    assert [e.counts for e in a.entries] == [e.counts for e in b.entries]


def test_tomography_errors():
    degenerate = [TomographyEntry("H", "H", 10)] * 16
    with pytest.raises(DegeneracyError):
        tomography_reconstruct(TomographyRecord(degenerate))
    zeros = TomographyRecord([TomographyEntry(s, i, 0) for s, i in DEFAULT_SETTINGS])
    with pytest.raises(ValidationError):
        tomography_reconstruct(zeros)
    with pytest.raises(ValidationError):
        TomographyEntry("X", "H", 1)
    with pytest.raises(DegeneracyError):
        TomographyRecord([TomographyEntry("H", "H", 1)])


def test_expected_counts_sum_for_bell():
    counts = expected_counts(bell_state(0), DEFAULT_SETTINGS, rate=100)
    assert counts[0] == pytest.approx(50) and counts[1] == pytest.approx(0, abs=1e-12)


def test_record_file_round_trip(tmp_path):
    rec = synthetic_record(visibility_mixed_state(0.8), seed=1)
    p = tmp_path / "counts.csv"
    write_record(rec, p)
    back = read_record(p)
    assert back.settings == rec.settings
    assert [e.counts for e in back.entries] == [e.counts for e in rec.entries]


# --- fixtures -------------------------------------------------------------------


def test_fixture_round_trip(tmp_path):
    state = visibility_mixed_state(0.7, 0.3)
    p = tmp_path / "rho.txt"
    p.write_text(format_density(state))
    assert np.array_equal(read_density(p).data, state.data)


def test_bundled_bell_fixture():
    assert np.allclose(bundled_density("bell_phi0").data, bell_state(0).data)


def test_malformed_fixtures(tmp_path):
    with pytest.raises(DataFileError):
        parse_density("1 2 3\n")
    with pytest.raises(DataFileError):
        parse_density("\n".join(["0.25 0 0 x"] * 8))
    with pytest.raises(DataFileError, match="nope"):
        read_density(tmp_path / "nope.txt")
    bad = format_density(np.diag([2.0, 0, 0, 0]).astype(complex))
    with pytest.raises(DataFileError):
        parse_density(bad)
