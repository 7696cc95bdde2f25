import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.base import clone

from oqgqsp.fock import function_of_position, vacuum
from oqgqsp.fourier import fourier_coefficients
from oqgqsp.gqsp import (AngleFindingError, CompletedPair, CompletionError, GqspProgram,
                         GqspSynthesizer, complete, find_angles, laurent_eval, program_fidelity,
                         reconstruct_F, reconstruction_error, refine_angles, sup_norm, unit_circle)
from oqgqsp.units import HBAR_EV_FS

L = 8.0


def random_target(rng, d, sup=0.9):
    c = (rng.normal(size=2 * d + 1) + 1j * rng.normal(size=2 * d + 1)) / (1 + np.arange(-d, d + 1) ** 2)
    return sup * c / sup_norm(c)


def test_cosine_completion():
    pair = complete([0.5, 0.0, 0.5])
    z = unit_circle(512)
    g2 = np.abs(laurent_eval(pair.G, z)) ** 2
    s = (1 - 1e-6) ** 2
    np.testing.assert_allclose(g2, 1 - s * np.real(z) ** 2, atol=1e-9)
    assert pair.scale == pytest.approx(1 / (1 - 1e-6))
    np.testing.assert_allclose(pair.scale * pair.F, [0.5, 0.0, 0.5], rtol=1e-15)


def test_constant_completion():
    pair = complete([0.6j])
    assert abs(pair.G[0]) == pytest.approx(0.8)
    assert pair.completion_residual() < 1e-14


def test_random_degree_ten(rng):
    pair = complete(random_target(rng, 10))
    assert pair.completion_residual() <= 1e-8
    assert pair.scale == 1.0


def test_degree_guard():
    with pytest.raises(CompletionError, match="guard"):
        complete(np.full(2 * 201 + 1, 1e-4))


def test_degree_mismatch():
    with pytest.raises(ValueError):
        complete([0.1, 0.2, 0.1], d=2)
    with pytest.raises(ValueError):
        complete([0.1, 0.2])


def test_bare_signal_product():
    pair = CompletedPair(F=np.array([0, 0, 1], dtype=complex), G=np.zeros(3, dtype=complex), d=1)
    prog = find_angles(pair)
    assert np.allclose(prog.theta, 0) and np.allclose(prog.phi, 0) and prog.lam == 0
    z = unit_circle(64)
    np.testing.assert_allclose(reconstruct_F(prog, 64), z, atol=1e-12)


def test_identity_program():
    prog = find_angles(CompletedPair(F=np.array([1.0 + 0j]), G=np.array([0j]), d=0))
    assert prog.lam == 0 and prog.theta.size == prog.phi.size == 1
    np.testing.assert_allclose(reconstruct_F(prog, 16), 1.0)


def test_inconsistent_pair_rejected():
    pair = CompletedPair(F=np.array([0.5, 0, 0.5], dtype=complex),
                         G=np.array([0.5, 0, 0.5], dtype=complex), d=1)
    with pytest.raises(AngleFindingError):
        find_angles(pair)


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 30), st.integers(0, 2**32 - 1))
def test_reconstruction_property(d, seed):
    rng = np.random.default_rng(seed)
    F = random_target(rng, d)
    pair = complete(F)
    prog = find_angles(pair, L=L)
    assert pair.completion_residual() <= 1e-8
    assert reconstruction_error(prog, F) <= 1e-8
    assert prog.theta.size == prog.phi.size == 2 * d + 1
    U = prog.unitaries(unit_circle(256))
    eye = np.eye(2)
    assert np.max(np.abs(np.conj(np.swapaxes(U, -1, -2)) @ U - eye)) <= 1e-12


def test_random_degree_25(rng):
    F = random_target(rng, 25)
    prog = find_angles(complete(F))
    assert reconstruction_error(prog, F) <= 1e-8


def test_morse_program(morse_26_2):
    s = fourier_coefficients(morse_26_2, 0.3, L, 39)
    pair = complete(s.coeffs)
    prog = find_angles(pair, L=L)
    assert reconstruction_error(prog, pair.F) <= 1e-8
    # undo the recorded scale before comparing with the series
    np.testing.assert_allclose(pair.scale * pair.F, s.coeffs, rtol=0, atol=1e-15)


def test_program_text_round_trip(rng):
    prog = find_angles(complete(random_target(rng, 4)), L=6.0)
    prog.meta["potential"] = "test"
    again = GqspProgram.loads(prog.dumps())
    np.testing.assert_array_equal(again.theta, prog.theta)
    np.testing.assert_array_equal(again.phi, prog.phi)
    assert (again.lam, again.d, again.L, again.scale) == (prog.lam, prog.d, prog.L, prog.scale)
    assert again.meta["potential"] == "test"
    with pytest.raises(ValueError):
        GqspProgram.loads("d = 1\n")


def _gate_setup(morse_26_2, d, dim=30):
    s = fourier_coefficients(morse_26_2, 0.3, L, d)
    prog = find_angles(complete(s.coeffs), L=L)
    target = function_of_position(dim, lambda x: np.exp(-1j * 0.3 * morse_26_2(x) / HBAR_EV_FS))
    return prog, target, vacuum(dim)


def test_refinement_fixed_point():
    pair = CompletedPair(F=np.array([0, 0, 1], dtype=complex), G=np.zeros(3, dtype=complex), d=1)
    prog = find_angles(pair, L=L)
    ref = vacuum(20)
    target = function_of_position(20, lambda x: np.exp(1j * np.pi * x / L))
    out = refine_angles(prog, target, ref)
    np.testing.assert_array_equal(out.to_vector(), prog.to_vector())
    assert out.meta["fidelity_after"] - out.meta["fidelity_before"] < 1e-12
    assert out.meta["fidelity_after"] == pytest.approx(1.0, abs=1e-10)


def test_refinement_never_worse(morse_26_2, rng):
    prog, target, ref = _gate_setup(morse_26_2, 6)
    for _ in range(20):
        start = prog.with_vector(prog.to_vector() + 0.3 * rng.normal(size=prog.n_parameters))
        before = program_fidelity(start, target, ref)
        out = refine_angles(start, target, ref, max_iters=15)
        assert out.meta["fidelity_after"] >= before - 1e-15
        assert program_fidelity(out, target, ref) == pytest.approx(out.meta["fidelity_after"])


def test_synthesizer_estimator(morse_26_2):
    s = fourier_coefficients(morse_26_2, 0.3, L, 10)
    est = GqspSynthesizer()
    assert clone(est).get_params() == est.get_params()
    est.fit(s)
    x = np.linspace(-4, 4, 9)
    np.testing.assert_allclose(est.predict(x, positions=True) * est.scale_, s(x), atol=1e-9)
    with pytest.raises(ValueError):
        GqspSynthesizer(refine=True).fit(s)
