import numpy as np
import pytest
from scipy.linalg import expm

from oqgqsp.compiler import (Circuit, HeraldError, Instruction, Registers, UnaryCode, cd,
                             circuit_unitary, gqsp_circuit, herald_csv, linear_term_instructions,
                             mcd_coupling_circuit, measure, quadratic_term_instructions,
                             reference_rotation, rot, run_shots, signal_operator_circuit,
                             simulate, state_dependent_gate)
from oqgqsp.compiler.builders import mcd_coupling_instructions
from oqgqsp.fock import (HybridState, coherent_state, fock_state, position_eigensystem,
                         position_operator, vacuum)
from oqgqsp.fourier import fourier_coefficients
from oqgqsp.gqsp import CompletedPair, complete, find_angles
from oqgqsp.units import HBAR_EV_FS

L = 8.0


def function_matrix(values, dim):
    x, V = position_eigensystem(dim)
    return (V * values(x)) @ V.T


def code_block(M, regs, dim, osc_count=1):
    """Restrict a full circuit unitary to codewords with both ancillas in |0>."""
    nq = regs.n_qubits
    idx = [regs.code.register_index(n) * 4 for n in range(regs.n_states)]
    D = dim**osc_count
    M = M.reshape(2**nq, D, 2**nq, D)[np.ix_(idx, range(D), idx, range(D))]
    return M.reshape(len(idx) * D, len(idx) * D)


def test_unary_code():
    code = UnaryCode(4)
    assert code.bitstring(0) == "1110"
    assert code.bits(2) == (1, 1, 0, 1)
    assert [code.decode(code.register_index(n)) for n in range(4)] == [0, 1, 2, 3]
    assert code.decode(0b1111) is None and code.decode(0b0011) is None
    with pytest.raises(ValueError):
        code.bits(4)


def test_instruction_validation():
    with pytest.raises(ValueError):
        Instruction("MEASURE", (0,))
    with pytest.raises(ValueError):
        Instruction("CD", (0,), ())
    with pytest.raises(ValueError):
        Instruction("ROT", (0,), (), 0.1, axes="w")
    c = Circuit(2, 1)
    with pytest.raises(ValueError):
        c.append(cd(2, 0, 0.1))
    with pytest.raises(ValueError):
        Circuit(1, 0, policy="retry")


def test_text_round_trip(morse_26_2):
    prog = find_angles(complete(fourier_coefficients(morse_26_2, 0.3, L, 3, fraction=0.5).coeffs))
    c = state_dependent_gate(prog, 1, Registers(3, 1), 0)
    c.append(reference_rotation(0, 0.1, 0.4))
    again = Circuit.from_text(c.to_text())
    assert again.instructions == c.instructions
    assert (again.n_qubits, again.n_osc, again.policy) == (c.n_qubits, c.n_osc, c.policy)
    assert Instruction.from_text("CD q0 osc1 0.19635") == cd(0, 1, 0.19635)
    with pytest.raises(ValueError):
        Circuit.from_text("CD q0 osc0 0.1\n")


@pytest.mark.parametrize("which", ["A", "B"])
@pytest.mark.parametrize("dim", [16, 32])
def test_signal_operators(which, dim):
    U = expm(1j * np.pi / L * position_operator(dim))
    I = np.eye(dim)
    c = signal_operator_circuit(L, which, 0, 1, 0)
    assert c.cd_count == 2
    M = circuit_unitary(c, dim).reshape(2, 2, dim, 2, 2, dim)
    blocks = (U, I) if which == "A" else (I, U.conj().T)
    target = np.block([[blocks[0], 0 * I], [0 * I, blocks[1]]])
    assert np.abs(M[:, 0, :, :, 0, :].reshape(2 * dim, 2 * dim) - target).max() <= 1e-10
    assert np.abs(M[:, 1, :, :, 0, :]).max() <= 1e-12


def test_signal_pair_is_doubled_cd():
    dim = 16
    c = signal_operator_circuit(L, "A", 0, 1, 0)
    c.extend(signal_operator_circuit(L, "B", 0, 1, 0))
    M = circuit_unitary(c, dim).reshape(2, 2, dim, 2, 2, dim)[:, 0, :, :, 0, :]
    ref = circuit_unitary(Circuit(1, 1, [cd(0, 0, np.pi / L)]), dim)
    assert np.abs(M.reshape(2 * dim, 2 * dim) - ref).max() <= 1e-10


def test_gqsp_block(morse_26_2):
    dim = 30
    prog = find_angles(complete(fourier_coefficients(morse_26_2, 0.3, L, 12).coeffs), L=L)
    c = gqsp_circuit(prog, 0, 1, 0)
    assert c.meta["cd_count"] == c.cd_count == 4 * prog.d
    M = circuit_unitary(c, dim).reshape(2, 2, dim, 2, 2, dim)
    F = function_matrix(lambda x: prog.F(np.exp(1j * np.pi * x / L)), dim)
    assert np.abs(M[0, 0, :, 0, 0, :] - F).max() <= 1e-8


def test_gqsp_degree_zero():
    prog = find_angles(CompletedPair(F=np.array([0.6 + 0j]), G=np.array([0.8 + 0j]), d=0))
    c = gqsp_circuit(prog, 0, 1, 0)
    assert c.cd_count == 0 and len(c) == 3


def _electronic_state(regs, amps, osc):
    dim = osc.size
    t = np.zeros((2,) * regs.n_qubits + (dim,), dtype=complex)
    for n, a in enumerate(amps):
        t[regs.code.bits(n) + (0, 0)] = a * osc
    return HybridState(t.ravel(), regs.n_qubits, 1, dim)


def _half_program(morse_26_2, d):
    s = fourier_coefficients(morse_26_2, 0.3, L, d, fraction=0.5)
    pair = complete(s.coeffs)
    return s, pair, find_angles(pair, L=L)


@pytest.mark.parametrize("n", [0, 2])
def test_state_dependent_gate_action(morse_26_2, n):
    dim = 30
    regs = Registers(3, 1)
    s, pair, prog = _half_program(morse_26_2, 20)
    osc = coherent_state(dim, 0.4 + 0.2j)
    amps = np.array([0.6, 0.48j, 0.64])
    c = state_dependent_gate(prog, n, regs, 0)
    assert c.cd_count == c.meta["cd_count"] == 8 * prog.d
    out, log = simulate(c, _electronic_state(regs, amps, osc))
    p = np.prod([r.probability for r in log])
    F = function_matrix(lambda x: prog.F(np.exp(1j * np.pi * x / L)), dim)
    G = function_matrix(lambda x: prog.G(np.exp(1j * np.pi * x / L)), dim)
    t = out.tensor()
    for k in range(3):
        got = t[regs.code.bits(k) + (0, 0)] * np.sqrt(p)
        op = F @ F if k == n else F.conj().T @ F
        assert np.abs(got - amps[k] * (op @ osc)).max() <= 1e-12
    # herald probabilities: first herald fails with ||G|osc>||^2
    assert log[0].probability == pytest.approx(1 - np.linalg.norm(G @ osc) ** 2, abs=1e-12)
    # helper and herald end in |0>
    assert out.qubit_probability(regs.herald, 1) <= 1e-10
    assert out.qubit_probability(regs.helper, 1) <= 1e-10


def test_state_dependent_gate_operator_accuracy(morse_26_2):
    dim = 30
    s, pair, prog = _half_program(morse_26_2, 20)
    x, _ = position_eigensystem(dim)
    F = pair.scale * prog.F(np.exp(1j * np.pi * x / L))
    assert np.max(np.abs(np.abs(F) ** 2 - 1)) <= 2 * s.tail_bound
    assert np.max(np.abs(F**2 - s.target(x) ** 2)) <= 4 * s.tail_bound


def test_exact_gate_when_G_vanishes():
    # F = x is unimodular, so G = 0 and both heralds succeed with certainty
    dim = 16
    regs = Registers(2, 1)
    prog = find_angles(CompletedPair(F=np.array([0, 0, 1], dtype=complex),
                                     G=np.zeros(3, dtype=complex), d=1), L=L)
    osc = coherent_state(dim, 0.5)
    out, log = simulate(state_dependent_gate(prog, 0, regs, 0),
                        _electronic_state(regs, [0.6, 0.8], osc))
    assert all(r.probability == pytest.approx(1.0, abs=1e-12) for r in log)
    U2 = function_matrix(lambda x: np.exp(2j * np.pi * x / L), dim)
    assert np.abs(out.tensor()[regs.code.bits(0) + (0, 0)] - 0.6 * U2 @ osc).max() <= 1e-12
    assert np.abs(out.tensor()[regs.code.bits(1) + (0, 0)] - 0.8 * osc).max() <= 1e-12


def test_herald_sampling_and_determinism(morse_26_2):
    dim = 20
    regs = Registers(2, 1)
    _, _, prog = _half_program(morse_26_2, 4)
    st = _electronic_state(regs, [0.6, 0.8], coherent_state(dim, 1.0))
    c = state_dependent_gate(prog, 0, regs, 0)
    logs = []
    for _ in range(2):
        try:
            logs.append(simulate(c, st, seed=11, policy="sample")[1])
        except HeraldError as exc:
            logs.append(exc.log)
    assert logs[0] == logs[1]
    stats = run_shots(c, st, 500, seed=3)
    assert stats == run_shots(c, st, 500, seed=3)
    assert stats.attempts[0] == 500
    assert herald_csv(logs[0]).startswith("step,outcome,probability\n")


def test_zero_probability_herald():
    c = Circuit(1, 0, [measure(0, 1)])
    st = HybridState(np.array([1.0, 0.0], dtype=complex), 1, 0, 2)
    with pytest.raises(HeraldError):
        simulate(c, st)


def test_ancilla_contract():
    regs = Registers(2, 1)
    c = mcd_coupling_circuit(0, 1, 0, 0.1, regs)
    t = np.zeros((2, 2, 2, 2, 4), dtype=complex)
    t[0, 1, 0, 1, 0] = 1.0  # helper in |1>
    with pytest.raises(ValueError, match="start in"):
        simulate(c, HybridState(t.ravel(), 4, 1, 4))


@pytest.mark.parametrize("pair", [(0, 1), (0, 2), (1, 2)])
def test_mcd_matches_expm(pair):
    dim = 16
    regs = Registers(3, 1)
    n, m = pair
    theta = 0.1
    c = mcd_coupling_circuit(n, m, 0, theta, regs)
    assert c.cd_count == 2
    M = code_block(circuit_unitary(c, dim), regs, dim)
    E = np.zeros((3, 3))
    E[n, m] = E[m, n] = 1
    assert np.abs(M - expm(1j * theta * np.kron(E, position_operator(dim)))).max() <= 1e-10


def test_mcd_zero_angle_and_commuting_factors():
    dim = 8
    regs = Registers(2, 1)
    assert np.abs(circuit_unitary(mcd_coupling_circuit(0, 1, 0, 0.0, regs), dim)
                  - np.eye(16 * dim)).max() <= 1e-12
    ins = mcd_coupling_instructions(0, 1, 0, 0.3)
    half = len(ins) // 2
    fwd = circuit_unitary(Circuit(4, 1, ins), dim)
    rev = circuit_unitary(Circuit(4, 1, ins[half:] + ins[:half]), dim)
    assert np.abs(fwd - rev).max() <= 1e-12


def test_forbidden_pair():
    with pytest.raises(ValueError, match="forbidden"):
        mcd_coupling_circuit(0, 3, 0, 0.1, Registers(4, 1), forbidden={(0, 3)})
    with pytest.raises(ValueError):
        mcd_coupling_circuit(1, 1, 0, 0.1, Registers(4, 1))


def test_native_diagonal_terms():
    dim = 16
    regs = Registers(2, 1)
    dt, kappa, gamma = 0.4, 0.05, -0.01
    Q = position_operator(dim)
    c = regs.empty()
    c.extend(linear_term_instructions(1, 0, kappa, dt, regs))
    c.extend(quadratic_term_instructions(1, 0, gamma, dt, regs))
    M = code_block(circuit_unitary(c, dim), regs, dim)
    P1 = np.diag([0.0, 1.0])
    H = np.kron(P1, kappa * Q + 0.5 * gamma * Q @ Q)
    assert np.abs(M - expm(-1j * dt * H / HBAR_EV_FS)).max() <= 1e-10


def test_reference_rotation():
    dim = 10
    c = Circuit(0, 1, [reference_rotation(0, 0.2, 0.5)])
    M = circuit_unitary(c, dim)
    np.testing.assert_allclose(np.diag(M), np.exp(-1j * 0.5 * 0.2 * np.arange(dim) / HBAR_EV_FS))


def test_cd_on_plus_state_purity():
    dim, theta = 30, 0.7
    plus = np.kron(np.array([1, 1]) / np.sqrt(2), vacuum(dim))
    out, log = simulate(Circuit(1, 1, [cd(0, 0, theta)]), HybridState(plus, 1, 1, dim))
    assert log == []
    t = out.tensor()
    rho_q = t.reshape(2, dim) @ t.reshape(2, dim).conj().T
    purity = np.real(np.trace(rho_q @ rho_q))
    Up = expm(1j * theta * position_operator(dim))
    overlap = np.vdot(Up @ vacuum(dim), Up.conj().T @ vacuum(dim))
    assert purity == pytest.approx(0.5 * (1 + abs(overlap) ** 2), abs=1e-12)
    assert purity < 1


def test_empty_circuit():
    st = HybridState.product((1,), [fock_state(5, 2)])
    out, log = simulate(Circuit(1, 1), st)
    np.testing.assert_array_equal(out.amplitudes, st.amplitudes)
    assert log == []


def test_rotation_axes():
    from oqgqsp.compiler import pauli_exponential
    c = Circuit(1, 0, [rot(0, "y", 0.3)])
    np.testing.assert_allclose(circuit_unitary(c, 2), pauli_exponential("y", 0.3), atol=1e-15)
