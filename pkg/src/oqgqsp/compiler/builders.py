"""Circuit builders: signal operators, OQ-GQSP sequences, heralded
state-dependent phase gates, multi-controlled displacement couplings and
native linear/quadratic diagonal terms.

Register convention for vibronic circuits with N electronic states:
qubits 0..N-1 hold the inverted unary code (state n has qubit n in |0> and
all others in |1>), qubit N is the herald ancilla and qubit N+1 the helper
used by the signal operators; both ancillas start and end in |0>.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .._validation import check_scalar
from ..units import HBAR_EV_FS
from .circuit import (Circuit, cd, cq, measure, parity_flip, pauli2, phase_rotation, reset,
                      rot)
from .simulator import pauli_exponential


@dataclass(frozen=True)
class UnaryCode:
    """Inverted unary encoding of ``N`` electronic states."""

    N: int

    def __post_init__(self):
        check_scalar(self.N, "N", min_val=1, integer=True)

    def bits(self, n):
        if not 0 <= n < self.N:
            raise ValueError(f"state {n} outside the {self.N}-state code")
        return tuple(0 if k == n else 1 for k in range(self.N))

    def bitstring(self, n):
        """Display form with qubit 0 rightmost (D0 of 4 states -> '1110')."""
        return "".join(str(b) for b in reversed(self.bits(n)))

    def register_index(self, n):
        """Index of the codeword in the N-qubit register (qubit 0 most significant)."""
        return int("".join(str(b) for b in self.bits(n)), 2)

    def decode(self, index):
        """State label of a register index, or None outside the code space."""
        bits = [(index >> (self.N - 1 - k)) & 1 for k in range(self.N)]
        zeros = [k for k, b in enumerate(bits) if b == 0]
        return zeros[0] if len(zeros) == 1 else None


@dataclass(frozen=True)
class Registers:
    """Qubit layout of a vibronic circuit."""

    n_states: int
    n_osc: int

    @property
    def code(self):
        return UnaryCode(self.n_states)

    @property
    def herald(self):
        return self.n_states

    @property
    def helper(self):
        return self.n_states + 1

    @property
    def n_qubits(self):
        return self.n_states + 2

    def empty(self, policy="project"):
        c = Circuit(self.n_qubits, self.n_osc, policy=policy)
        c.meta["zero_qubits"] = (self.herald, self.helper)
        return c


def _blank(n_qubits, n_osc, zero_qubits):
    c = Circuit(n_qubits, n_osc)
    c.meta["zero_qubits"] = tuple(zero_qubits)
    return c


def signal_operator_circuit(L, which, main_qubit, ancilla, osc, n_qubits=None, n_osc=None):
    """Two-CD signal operator.

    ``A``: diag(e^{i pi Q / L}, I) on the main qubit; ``B``: diag(I, e^{-i pi Q / L}).
    The ancilla must be in |0> and is left there.
    """
    L = check_scalar(L, "L", min_val=0.0, include_min=False)
    if which not in ("A", "B"):
        raise ValueError("which must be 'A' or 'B'")
    if main_qubit == ancilla:
        raise ValueError("main qubit and ancilla must differ")
    nq = max(main_qubit, ancilla) + 1 if n_qubits is None else n_qubits
    no = osc + 1 if n_osc is None else n_osc
    c = _blank(nq, no, (ancilla,))
    half = np.pi / (2 * L)
    c.append(cd(ancilla, osc, half if which == "A" else -half))
    c.append(cd(main_qubit, osc, half))
    return c


def _signal_ops(L, which, main, ancilla, osc):
    half = np.pi / (2 * L)
    return [cd(ancilla, osc, half if which == "A" else -half), cd(main, osc, half)]


def gqsp_instructions(program, main_qubit, ancilla, osc):
    """Time-ordered instructions realizing the program's 2x2 product on the main qubit."""
    d, L = program.d, program.L
    ops = []
    # time order: R_d, A, R_{d-1}, ..., A, R_0, B, R_{-1}, ..., B, R_{-d}, then lambda
    for j in range(2 * d, -1, -1):
        ops.append(rot(main_qubit, "z", program.theta[j]))
        ops.append(rot(main_qubit, "x", program.phi[j]))
        if j > d:
            ops.extend(_signal_ops(L, "A", main_qubit, ancilla, osc))
        elif j > 0:
            ops.extend(_signal_ops(L, "B", main_qubit, ancilla, osc))
    ops.append(rot(main_qubit, "z", program.lam))
    return ops


def gqsp_circuit(program, main_qubit, ancilla, osc, n_qubits=None, n_osc=None):
    """OQ-GQSP circuit; the (0, 0) qubit block of its action is F(e^{i pi Q / L})."""
    nq = max(main_qubit, ancilla) + 1 if n_qubits is None else n_qubits
    no = osc + 1 if n_osc is None else n_osc
    c = _blank(nq, no, (ancilla,))
    c.extend(gqsp_instructions(program, main_qubit, ancilla, osc))
    c.meta["cd_count"] = 4 * program.d
    return c


def state_dependent_instructions(program, n, regs, osc):
    """Heralded gate applying F^2 to state n's oscillator and F^dagger F elsewhere."""
    code = regs.code
    code.bits(n)
    h, x = regs.herald, regs.helper
    ops = list(gqsp_instructions(program, h, x, osc))
    ops.append(measure(h, 0))
    ops.extend(gqsp_instructions(program, n, x, osc))
    ops.append(parity_flip(h, range(code.N)))
    ops.append(measure(h, 1))
    ops.append(reset(h))
    return ops


def state_dependent_gate(program, n, regs, osc):
    c = regs.empty()
    c.extend(state_dependent_instructions(program, n, regs, osc))
    c.meta["cd_count"] = 8 * program.d
    return c


@lru_cache(maxsize=None)
def _zz_reduction_sign():
    """Sign s with V (Z (x) Z) V^dagger = s Z (x) I for the fixed Clifford V."""
    V = _clifford_matrix()
    Z = np.diag([1.0, -1.0])
    out = V @ np.kron(Z, Z) @ V.conj().T
    for s in (1.0, -1.0):
        if np.allclose(out, s * np.kron(Z, np.eye(2)), atol=1e-12):
            return s
    raise AssertionError("Clifford reduction of ZZ failed")


def _clifford_matrix():
    # V = e^{i pi/4 X (x) Z} e^{i pi/4 X (x) I}
    return pauli_exponential("xz", np.pi / 4) @ np.kron(pauli_exponential("x", np.pi / 4),
                                                       np.eye(2))


def _basis_to_z(axis):
    """Single-qubit Clifford c with c sigma_axis c^dagger = +Z, as (ROT axis, angle) or None."""
    if axis == "z":
        return None
    # e^{i pi/4 Y} X e^{-i pi/4 Y} = -Z, e^{-i pi/4 Y} X e^{i pi/4 Y} = +Z
    return ("y", -np.pi / 4) if axis == "x" else ("x", np.pi / 4)


def pauli_displacement_instructions(q0, q1, axis, alpha, osc):
    """exp(i alpha sigma_axis(q0) sigma_axis(q1) Q_osc) as Cliffords around one CD."""
    pre = []
    b = _basis_to_z(axis)
    if b is not None:
        pre += [rot(q0, b[0], b[1]), rot(q1, b[0], b[1])]
    pre += [rot(q0, "x", np.pi / 4), pauli2(q0, q1, "xz", np.pi / 4)]
    post = [type(i)(i.kind, i.qubits, i.osc, -i.angle, i.axes, i.outcome) for i in reversed(pre)]
    return pre + [cd(q0, osc, _zz_reduction_sign() * alpha)] + post


def mcd_coupling_instructions(n, m, osc, theta):
    """exp(i theta (|n><m| + |m><n|) Q) on the unary code space.

    On codewords |n><m| + h.c. = (X_n X_m + Y_n Y_m) / 2, and the two
    Pauli terms commute.
    """
    if n == m:
        raise ValueError("coupling needs two distinct states")
    return (pauli_displacement_instructions(n, m, "x", theta / 2, osc)
            + pauli_displacement_instructions(n, m, "y", theta / 2, osc))


def mcd_coupling_circuit(n, m, osc, theta, regs, forbidden=frozenset()):
    if (min(n, m), max(n, m)) in forbidden:
        raise ValueError(f"coupling between states {n} and {m} is forbidden in this model")
    regs.code.bits(n)
    regs.code.bits(m)
    c = regs.empty()
    c.extend(mcd_coupling_instructions(n, m, osc, theta))
    c.meta["cd_count"] = 2
    return c


def linear_term_instructions(n, osc, kappa, dt, regs):
    """exp(-i dt kappa |n><n| Q / hbar) via the helper (unconditional) and qubit n."""
    t = -dt * kappa / (2 * HBAR_EV_FS)
    return [cd(regs.helper, osc, t), cd(n, osc, t)]


def quadratic_term_instructions(n, osc, gamma, dt, regs):
    """exp(-i dt (gamma/2) |n><n| Q^2 / hbar)."""
    t = -dt * gamma / (4 * HBAR_EV_FS)
    return [cq(regs.helper, osc, t), cq(n, osc, t)]


def energy_term_instructions(n, energy, dt):
    """exp(-i dt E |n><n| / hbar) up to a global phase."""
    return [rot(n, "z", -energy * dt / (2 * HBAR_EV_FS))]


def reference_rotation(osc, omega_ev, dt):
    """exp(-i dt omega N / hbar): harmonic reference up to a global phase."""
    return phase_rotation(osc, omega_ev * dt / HBAR_EV_FS)
