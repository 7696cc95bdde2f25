import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oqgqsp.potentials import (DatasetError, PotentialSpec, dataset_from_dict, dataset_to_dict,
                               dumps_dataset, evaluate, linear, load_uracil_dataset, morse,
                               morse_taylor2, quadratic, quartic, save_dataset, sum_of, tabulated,
                               zero)


def test_morse_at_minimum():
    p = morse(9.46894, -0.08653, 0.37635, -0.01037)
    assert evaluate(p, 0.37635) == pytest.approx(-0.01037)


def test_quartic_value(dataset):
    p = dataset.diagonal_terms("nu10", "D0")
    assert evaluate(p, 2.0) == pytest.approx(0.03317 * 16 / 24, rel=1e-12)


def test_linear_value(dataset):
    p = dataset.diagonal_terms("nu3", "D0")
    # nu3 also carries a quadratic term; isolate the linear part
    lin = next(t for t in p.terms if t.kind == "linear")
    assert evaluate(lin, 1.0) == pytest.approx(0.04139)


def test_conventions():
    assert evaluate(quadratic(2.0), 3.0) == pytest.approx(9.0)
    assert evaluate(quartic(24.0), 2.0) == pytest.approx(16.0)
    assert evaluate(sum_of(linear(1.0), quadratic(2.0)), 1.5) == pytest.approx(1.5 + 2.25)
    assert evaluate(zero(), 4.0) == 0.0


def test_complex_arguments_allowed_for_analytic_kinds():
    p = morse(1.0, 0.3, 0.0, 0.0)
    z = 0.5 + 0.2j
    assert evaluate(p, z) == pytest.approx((np.exp(0.3 * z) - 1) ** 2)
    assert p.is_entire and p.is_anharmonic
    assert not sum_of(linear(1.0), quadratic(1.0)).is_anharmonic


def test_tabulated():
    x = np.linspace(-2, 2, 21)
    p = tabulated(x, x**2)
    assert evaluate(p, 0.55) == pytest.approx(0.55**2, abs=1e-3)
    assert not p.is_entire
    with pytest.raises(ValueError):
        evaluate(p, 3.0)
    with pytest.raises(TypeError):
        evaluate(p, 0.1j)
    with pytest.raises(ValueError):
        tabulated(x[::-1], x)


@pytest.mark.parametrize("kind, params", [("morse", {"d0": -1, "a": 1, "q0": 0, "e0": 0}),
                                          ("quartic", {}), ("cubic", {"c": 1})])
def test_invalid_specs(kind, params):
    with pytest.raises(ValueError):
        PotentialSpec(kind, params)


@settings(max_examples=30, deadline=None)
@given(st.floats(-3, 3), st.floats(0.1, 10), st.floats(-0.5, 0.5), st.floats(-1, 1))
def test_morse_taylor2_matches_to_second_order(q0, d0, a, e0):
    p = morse(d0, a, q0, e0)
    t = morse_taylor2(p)
    h = 1e-3
    for x in (q0 - h, q0, q0 + h):
        assert abs(evaluate(p, x) - evaluate(t, x)) <= 2 * d0 * abs(a) ** 3 * h**3 + 1e-12


def test_shipped_dataset(dataset):
    assert dataset.states == ("D0", "D1", "D2", "D3")
    assert dataset.mode("nu3").omega_cm == 388.0
    assert dataset.mode("nu26").morse[2] == (9.46894, -0.08653, 0.37635, -0.01037)
    assert len(dataset.mode_labels) == 12
    assert len(dataset.anharmonic_modes) == 5
    assert dataset.coupling("nu10", "D1", "D0") == pytest.approx(0.04633)
    assert dataset.coupling("nu10", 0, 3) == 0.0
    with pytest.raises(KeyError):
        dataset.mode("nu99")


def test_forbidden_coupling_rejected(dataset):
    doc = dataset_to_dict(dataset)
    doc["modes"]["nu10"]["couplings"]["0-3"] = 0.01
    with pytest.raises(DatasetError, match="forbidden"):
        dataset_from_dict(doc)


def test_schema_errors(dataset):
    doc = dataset_to_dict(dataset)
    doc["modes"]["nu3"]["kappa"] = [1.0, 2.0]
    with pytest.raises(DatasetError):
        dataset_from_dict(doc)
    with pytest.raises(DatasetError):
        dataset_from_dict({"states": ["A"]})


def test_round_trip(dataset, tmp_path):
    path = tmp_path / "copy.toml"
    save_dataset(dataset, path)
    again = load_uracil_dataset(path)
    assert again == dataset
    assert dumps_dataset(again) == dumps_dataset(dataset)


def test_missing_file(tmp_path):
    with pytest.raises(FileNotFoundError, match="nope.toml"):
        load_uracil_dataset(tmp_path / "nope.toml")
