"""Reference state-vector executor for :class:`Circuit`.

Each oscillator is kept lazily in either the number basis or the position
eigenbasis of the truncated Q, so CD/CQ gates and R gates are all diagonal
phase multiplications; basis changes are applied only when needed.
"""

from dataclasses import dataclass
import io

import numpy as np

from ..fock import HybridState, position_eigensystem

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class HeraldError(RuntimeError):
    """A heralded measurement failed or requested an impossible branch."""

    def __init__(self, message, log=None, step=None):
        super().__init__(message)
        self.log = log or []
        self.step = step


@dataclass(frozen=True)
class HeraldRecord:
    step: int
    outcome: int
    probability: float


def herald_csv(log):
    buf = io.StringIO()
    buf.write("step,outcome,probability\n")
    for r in log:
        buf.write(f"{r.step},{r.outcome},{r.probability!r}\n")
    return buf.getvalue()


def pauli_exponential(axes, angle):
    """exp(i angle P) for a (possibly multi-qubit) Pauli string P."""
    P = np.array([[1.0 + 0j]])
    for a in axes:
        P = np.kron(P, _PAULI[a])
    return np.cos(angle) * np.eye(P.shape[0]) + 1j * np.sin(angle) * P


class _Engine:
    """Mutable tensor with per-oscillator basis tracking."""

    def __init__(self, tensor, n_qubits, n_osc, dim, batch=False):
        self.psi = tensor
        self.nq = n_qubits
        self.no = n_osc
        self.dim = dim
        self.batch = batch
        self.basis = ["n"] * n_osc
        self.x, self.V = position_eigensystem(dim) if n_osc else (None, None)
        self.n = np.arange(dim)

    @property
    def ndim(self):
        return self.psi.ndim

    def _axis_op(self, M, ax):
        self.psi = np.moveaxis(np.tensordot(M, self.psi, axes=([1], [ax])), 0, ax)

    def set_basis(self, o, b):
        if self.basis[o] == b:
            return
        ax = self.nq + o
        self._axis_op(self.V.T if b == "x" else self.V, ax)
        self.basis[o] = b

    def finish(self):
        for o in range(self.no):
            self.set_basis(o, "n")
        return self.psi

    def _osc_shape(self, o, drop_axis):
        shape = [1] * self.ndim
        shape[self.nq + o] = self.dim
        if drop_axis is not None:
            del shape[drop_axis]
        return shape

    def _qubit_slice(self, q, b):
        idx = [slice(None)] * self.ndim
        idx[q] = b
        return tuple(idx)

    def conditional_phase(self, q, o, vals, basis):
        """Multiply the q=0 branch by e^{i vals} and the q=1 branch by e^{-i vals}."""
        self.set_basis(o, basis)
        shape = self._osc_shape(o, q)
        ph = np.exp(1j * vals).reshape(shape)
        self.psi[self._qubit_slice(q, 0)] *= ph
        self.psi[self._qubit_slice(q, 1)] *= np.conj(ph)

    def phase(self, o, vals, basis):
        self.set_basis(o, basis)
        self.psi *= np.exp(1j * vals).reshape(self._osc_shape(o, None))

    def qubit_op(self, M, qubits):
        k = len(qubits)
        rest = [a for a in range(self.ndim) if a not in qubits]
        perm = list(qubits) + rest
        t = np.transpose(self.psi, perm)
        shape = t.shape
        t = (M @ t.reshape(2**k, -1)).reshape(shape)
        self.psi = np.transpose(t, np.argsort(perm))

    def parity_flip(self, target, controls):
        acc = np.zeros([1] * self.ndim, dtype=int)
        for c in controls:
            shape = [1] * self.ndim
            shape[c] = 2
            acc = acc + np.arange(2).reshape(shape)
        mask = (acc % 2) == ((len(controls) - 1) % 2)
        self.psi = np.where(mask, np.flip(self.psi, axis=target), self.psi)

    def probability(self, q, b):
        return float(np.sum(np.abs(self.psi[self._qubit_slice(q, b)]) ** 2))

    def project(self, q, b):
        self.psi[self._qubit_slice(q, 1 - b)] = 0.0

    def flip(self, q):
        self.psi = np.flip(self.psi, axis=q).copy()


def _apply(eng, ins):
    k = ins.kind
    if k == "CD":
        eng.conditional_phase(ins.qubits[0], ins.osc[0], ins.angle * eng.x, "x")
    elif k == "CQ":
        eng.conditional_phase(ins.qubits[0], ins.osc[0], ins.angle * eng.x**2, "x")
    elif k == "R":
        vals = -ins.angle * eng.n
        if ins.qubits:
            eng.conditional_phase(ins.qubits[0], ins.osc[0], vals, "n")
        else:
            eng.phase(ins.osc[0], vals, "n")
    elif k == "ROT":
        eng.qubit_op(pauli_exponential(ins.axes, ins.angle), ins.qubits)
    elif k == "PAULI2":
        eng.qubit_op(pauli_exponential(ins.axes, ins.angle), ins.qubits)
    elif k == "PARITY":
        eng.parity_flip(ins.qubits[0], ins.qubits[1:])
    else:
        raise ValueError(f"{k} is not a unitary instruction")


def _check_zero_qubits(circuit, state):
    for q in circuit.meta.get("zero_qubits", ()):
        p1 = state.qubit_probability(q, 1)
        if p1 > 1e-10:
            raise ValueError(
                f"qubit {q} must start in |0> (found population {p1:.2e} in |1>)"
            )


def simulate(circuit, state, seed=None, policy=None):
    """Run ``circuit`` on ``state``.

    Returns ``(HybridState, herald log)``. With policy ``project`` each
    measurement is post-selected on its heralded outcome and renormalized;
    with ``sample`` outcomes are drawn from ``seed`` and a failed herald
    raises :class:`HeraldError` carrying the partial log.
    """
    if (state.n_qubits, state.n_osc) != (circuit.n_qubits, circuit.n_osc):
        raise ValueError(
            f"state has {state.n_qubits} qubits / {state.n_osc} oscillators, circuit expects "
            f"{circuit.n_qubits} / {circuit.n_osc}"
        )
    _check_zero_qubits(circuit, state)
    policy = policy or circuit.policy
    rng = np.random.default_rng(seed)
    eng = _Engine(state.tensor().copy(), state.n_qubits, state.n_osc, state.dim)
    log = []
    for step, ins in enumerate(circuit):
        if ins.kind == "MEASURE":
            q, want = ins.qubits[0], ins.outcome
            p_want = eng.probability(q, want)
            total = p_want + eng.probability(q, 1 - want)
            p_want /= total
            if policy == "project":
                if p_want <= 1e-300:
                    raise HeraldError(f"step {step}: heralded outcome {want} has zero probability",
                                      log, step)
                outcome = want
            else:
                outcome = want if rng.random() < p_want else 1 - want
            p_out = p_want if outcome == want else 1.0 - p_want
            log.append(HeraldRecord(step, outcome, p_out))
            if outcome != want:
                raise HeraldError(f"step {step}: herald failed (p_success={p_want:.6f})", log, step)
            eng.project(q, outcome)
            eng.psi /= np.sqrt(np.sum(np.abs(eng.psi) ** 2))
        elif ins.kind == "RESET":
            q = ins.qubits[0]
            p1 = eng.probability(q, 1) / (eng.probability(q, 0) + eng.probability(q, 1))
            if p1 > 1 - 1e-10:
                eng.flip(q)
            elif p1 > 1e-10:
                raise ValueError(f"step {step}: RESET on a qubit in superposition (p1={p1:.3e})")
            eng.project(q, 0)
        else:
            _apply(eng, ins)
    out = eng.finish().reshape(-1)
    return HybridState(out, state.n_qubits, state.n_osc, state.dim), log


def circuit_unitary(circuit, dim):
    """Dense matrix of a measurement-free circuit (columns in the flat layout)."""
    if any(ins.kind in ("MEASURE", "RESET") for ins in circuit):
        raise ValueError("circuit contains non-unitary instructions")
    shape = (2,) * circuit.n_qubits + (dim,) * circuit.n_osc
    size = int(np.prod(shape))
    eng = _Engine(np.eye(size, dtype=complex).reshape(shape + (size,)),
                  circuit.n_qubits, circuit.n_osc, dim, batch=True)
    for ins in circuit:
        _apply(eng, ins)
    return eng.finish().reshape(size, size)


@dataclass
class ShotStatistics:
    n_shots: int
    probabilities: tuple  # conditional success probability per measurement
    attempts: tuple
    successes: tuple

    @property
    def frequencies(self):
        return tuple(s / a if a else np.nan for s, a in zip(self.successes, self.attempts))

    @property
    def full_successes(self):
        return self.successes[-1] if self.successes else self.n_shots


def run_shots(circuit, state, n_shots, seed):
    """Monte-Carlo herald statistics over independent seeded shots.

    Because every failed herald aborts the shot, the post-measurement state
    on the success path is deterministic; the branch probabilities are
    computed once and each shot draws its outcomes from its own generator
    (``SeedSequence(seed).spawn(n_shots)``).
    """
    _, log = simulate(circuit, state, policy="project")
    probs = tuple(r.probability for r in log)
    children = np.random.SeedSequence(seed).spawn(int(n_shots))
    attempts = np.zeros(len(probs), dtype=int)
    successes = np.zeros(len(probs), dtype=int)
    for child in children:
        rng = np.random.default_rng(child)
        for k, p in enumerate(probs):
            attempts[k] += 1
            if rng.random() >= p:
                break
            successes[k] += 1
    return ShotStatistics(int(n_shots), probs, tuple(attempts.tolist()), tuple(successes.tolist()))
