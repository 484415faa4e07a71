import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from twocrystal.errors import DataFileError, DuplicateKeyError, RangeError, RegistryError
from twocrystal.materials import (
    SellmeierModel, default_registry, group_index, load_registry, parse_registry, refractive_index,
)


def constant(n0, name="const"):
    return SellmeierModel(name, "X", "constant", (n0,), (0.2, 5.0), (-50.0, 300.0))


def test_vacuum_and_constant_models():
    assert refractive_index(constant(1.0), 0.81) == 1.0
    assert refractive_index(constant(1.8), 0.5) == 1.8
    assert refractive_index(constant(1.8), 2.0) == 1.8
    assert group_index(constant(1.8), 0.81) == 1.8
    assert group_index(constant(1.0), 0.81) == 1.0


def test_ktp_z_hand_evaluation():
    # independent evaluation of the published Z-axis coefficients at their reference temperature
    lam = 0.810
    n2 = 2.12725 + 1.18431 / (1 - 5.14852e-2 / lam**2) + 0.6603 / (1 - 100.00507 / lam**2) - 9.68956e-3 * lam**2
    model = default_registry().get("KTP", "Z")
    assert refractive_index(model, lam, 25.0) == pytest.approx(math.sqrt(n2), abs=1e-6)


def test_ktp_z_group_index_finite_difference():
    model = default_registry().get("KTP", "Z")
    lam, h = 0.810, 1e-4
    dn = (refractive_index(model, lam + h, 25) - refractive_index(model, lam - h, 25)) / (2 * h)
    fd = refractive_index(model, lam, 25) - lam * dn
    assert group_index(model, lam, 25) == pytest.approx(fd, rel=1e-6)


def test_out_of_range_names_bound():
    model = default_registry().get("KTP", "X")
    with pytest.raises(RangeError) as exc:
        refractive_index(model, 0.3, 25)
    assert exc.value.bound == 0.40
    with pytest.raises(RangeError) as exc:
        refractive_index(model, 0.8, 250)
    assert exc.value.bound == 200.0
    with pytest.raises(RangeError):
        refractive_index(model, np.array([0.8, 1.9]), 25)


def test_bundled_registry_keys():
    reg = default_registry()
    for key in [("KTP", "X"), ("KTP", "Z"), ("LN", "Z"), ("LN", "X"), ("calcite", "o"), ("calcite", "e")]:
        assert reg.get(*key).name == key[0]
    assert ("MgO:LN", "Z") in reg


def test_lookup_is_pure():
    reg = default_registry()
    assert reg.get("KTP", "Z") is reg.get("KTP", "z")
    assert default_registry() is reg


def test_empty_file(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    reg = load_registry(p)
    assert len(reg) == 0
    with pytest.raises(RegistryError):
        reg.get("KTP", "Z")


ENTRY = """
  - name: KTP
    axis: Z
    form: constant
    coefficients: [1.8]
    valid_wavelength_range: [0.4, 2.0]
    valid_temperature_range: [0, 100]
    source: test
"""


def test_duplicate_key(tmp_path):
    p = tmp_path / "dup.yaml"
    p.write_text("schema_version: 1\nmodels:" + ENTRY + ENTRY)
    with pytest.raises(DuplicateKeyError):
        load_registry(p)


def test_schema_and_parse_errors():
    with pytest.raises(DataFileError, match="line"):
        parse_registry("schema_version: 1\nmodels: [\n", "bad.yaml")
    with pytest.raises(DataFileError, match="schema"):
        parse_registry("schema_version: 2\nmodels: []\n", "bad.yaml")
    with pytest.raises(DataFileError, match="coefficient"):
        parse_registry("schema_version: 1\nmodels:" + ENTRY.replace("[1.8]", "[1.8, 2.0]"), "bad.yaml")


def test_missing_file(tmp_path):
    with pytest.raises(DataFileError, match="nope.yaml"):
        load_registry(tmp_path / "nope.yaml")


def _models():
    reg = default_registry()
    return list(reg)


@pytest.mark.parametrize("model", _models(), ids=lambda m: m.key[0] + "/" + m.key[1])
def test_group_index_matches_finite_difference_over_range(model):
    lo, hi = model.valid_wavelength_range
    T = sum(model.valid_temperature_range) / 2
    h = 1e-5
    lam = np.linspace(lo + 2 * h, hi - 2 * h, 40)
    n_plus = refractive_index(model, lam + h, T)
    n_minus = refractive_index(model, lam - h, T)
    fd = refractive_index(model, lam, T) - lam * (n_plus - n_minus) / (2 * h)
    np.testing.assert_allclose(group_index(model, lam, T), fd, rtol=1e-6)


@pytest.mark.parametrize("model", _models(), ids=lambda m: m.key[0] + "/" + m.key[1])
def test_index_physical_and_decreasing(model):
    lo, hi = model.valid_wavelength_range
    T = model.valid_temperature_range[0]
    # normal dispersion region: visible to near infrared, below the mid-infrared poles
    lam = np.linspace(lo, min(hi, 1.7), 200)
    n = refractive_index(model, lam, T)
    assert np.all(np.isfinite(n)) and np.all(n >= 1)
    assert np.all(np.diff(n) < 0)
    assert np.all(group_index(model, lam, T) > n)


@settings(max_examples=60, deadline=None)
@given(lam=st.floats(0.45, 1.65), T=st.floats(20, 190))
def test_ktp_evaluation_deterministic(lam, T):
    m = default_registry().get("KTP", "X")
    assert refractive_index(m, lam, T) == refractive_index(m, lam, T)
    assert refractive_index(m, np.array([lam]), T)[0] == pytest.approx(refractive_index(m, lam, T), rel=1e-15)
