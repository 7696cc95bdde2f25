"""Vibronic coupling Hamiltonians in truncated Fock space.

    H = sum_r omega_r (N_r + 1/2)
        + sum_n |n><n| (E_n + sum_r f_nr(Q_r))
        + sum_{n<m} (|n><m| + |m><n|) sum_r lambda_nmr Q_r

The harmonic reference omega (N + 1/2) carries the kinetic energy of every
mode. Per-state functions f_nr are what remains of the diagonal potential:
kappa Q + gamma Q^2 / 2 for quadratic-coupling modes, k Q^4 / 24 for quartic
modes and V_Morse - omega Q^2 / 2 for Morse modes (the Morse curve replaces
the harmonic potential). Matrices use the physical electronic basis with the
electronic index most significant, then modes in model order.
"""

from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .fock import FockConfig, as_dim, function_of_position, number_operator, position_operator
from .potentials import (FORBIDDEN_PAIRS, evaluate, linear, morse, morse_taylor2, quadratic,
                         quartic, sum_of, zero)
from .units import wavenumber_to_ev

DIMENSION_GUARD = 10**6


@dataclass(frozen=True)
class VibronicMode:
    label: str
    omega: float  # eV
    kind: str  # "qvc" | "quartic" | "morse"
    diag: tuple  # PotentialSpec per model state
    couplings: dict = field(default_factory=dict)  # (i, j) local indices -> lambda (eV)

    @property
    def is_anharmonic(self):
        return any(f.is_anharmonic for f in self.diag)


@dataclass(frozen=True)
class VibronicModel:
    states: tuple
    modes: tuple
    energies: tuple
    forbidden: frozenset = frozenset()

    @property
    def N(self):
        return len(self.states)

    @property
    def M(self):
        return len(self.modes)

    @property
    def M_prime(self):
        return sum(m.is_anharmonic for m in self.modes)

    @property
    def coupled_terms(self):
        """(r, n, m, lambda) in mode-major, pair-lexicographic order."""
        out = []
        for r, mode in enumerate(self.modes):
            for (n, m) in sorted(mode.couplings):
                lam = mode.couplings[(n, m)]
                if lam != 0.0:
                    out.append((r, n, m, lam))
        return out

    def dimension(self, config):
        return self.N * as_dim(config) ** self.M

    def summary(self, config=None, gamma=None):
        lines = [
            f"states: {', '.join(self.states)}",
            f"modes: {', '.join(m.label for m in self.modes)}",
            f"N = {self.N}, M = {self.M}, M' = {self.M_prime}",
        ]
        if config is not None:
            lines.append(f"dimension = {self.dimension(config)}")
        if gamma is not None:
            lines.append(f"Gamma = {gamma!r} eV^2")
        return "\n".join(lines) + "\n"


def _diag_function(p, n_global, omega):
    if p.kind == "qvc":
        return sum_of(linear(p.kappa[n_global]), quadratic(p.gamma[n_global]))
    if p.kind == "quartic":
        k = p.k[n_global]
        return quartic(k) if k else zero()
    return sum_of(morse(*p.morse[n_global]), quadratic(-omega))


def build_model(dataset, modes=None, states=None, *, couplings=True):
    """Model restricted to a mode subset and a state subset (labels or indices).

    Couplings involving dropped states are removed; ``couplings=False`` drops
    all of them.
    """
    mode_labels = dataset.mode_labels if modes is None else tuple(modes)
    idx = [dataset.state_index(s) for s in (dataset.states if states is None else states)]
    if len(set(idx)) != len(idx):
        raise ValueError("state subset contains duplicates")
    local = {g: i for i, g in enumerate(idx)}
    built = []
    for label in mode_labels:
        p = dataset.mode(label)
        omega = wavenumber_to_ev(p.omega_cm)
        diag = tuple(_diag_function(p, g, omega) for g in idx)
        cpl = {}
        if couplings:
            for (a, b), lam in p.couplings.items():
                if a in local and b in local:
                    i, j = sorted((local[a], local[b]))
                    cpl[(i, j)] = lam
        built.append(VibronicMode(label, omega, p.kind, diag, cpl))
    forbidden = frozenset(
        tuple(sorted((local[a], local[b]))) for a, b in FORBIDDEN_PAIRS
        if a in local and b in local
    )
    return VibronicModel(
        states=tuple(dataset.states[g] for g in idx),
        modes=tuple(built),
        energies=tuple(dataset.energies[g] for g in idx),
        forbidden=forbidden,
    )


def qvc_variant(model):
    """Replace each Morse curve by its second-order expansion about its minimum."""
    modes = []
    for mode in model.modes:
        if mode.kind != "morse":
            modes.append(mode)
            continue
        diag = []
        for f in mode.diag:
            mo = next(t for t in f.terms if t.kind == "morse")
            diag.append(sum_of(morse_taylor2(mo), quadratic(-mode.omega)))
        modes.append(VibronicMode(mode.label, mode.omega, "qvc", tuple(diag), dict(mode.couplings)))
    return VibronicModel(model.states, tuple(modes), model.energies, model.forbidden)


# ---------------------------------------------------------------------------
# matrices


def _kron_all(mats):
    out = np.array([[1.0 + 0j]])
    for m in mats:
        out = np.kron(out, m)
    return out


def _mode_op(op, r, M, dim):
    eye = np.eye(dim)
    return _kron_all([op if k == r else eye for k in range(M)])


@dataclass
class TruncatedHamiltonian:
    matrix: np.ndarray
    dims: tuple  # (N, dim, dim, ...)
    blocks: dict = field(default_factory=dict)

    def hermiticity_defect(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))


def term_matrices(model, config):
    """Elementary Hermitian pieces of H on the full space.

    Returns ``(reference, diagonal, offdiagonal)``: the harmonic reference,
    a dict {(n, r): |n><n| (x) f_nr(Q_r)} (E_n folded in as (n, None)) and a
    dict {(n, m, r): lambda (|n><m| + h.c.) (x) Q_r}.
    """
    dim = as_dim(config)
    N, M = model.N, model.M
    total = N * dim**M
    if total > DIMENSION_GUARD:
        raise ValueError(f"dimension {total} exceeds guard {DIMENSION_GUARD}")
    eyeN = np.eye(N)
    n_op = number_operator(dim).real
    ref = sum(
        np.kron(eyeN, _mode_op(mode.omega * (n_op + 0.5 * np.eye(dim)), r, M, dim))
        for r, mode in enumerate(model.modes)
    ) if M else np.zeros((N, N))
    diag = {}
    for n in range(N):
        P = np.zeros((N, N))
        P[n, n] = 1.0
        if model.energies[n]:
            diag[(n, None)] = model.energies[n] * np.kron(P, np.eye(dim**M))
        for r, mode in enumerate(model.modes):
            f = mode.diag[n]
            fm = function_of_position(dim, lambda x, f=f: evaluate(f, x)).real
            diag[(n, r)] = np.kron(P, _mode_op(fm, r, M, dim))
    Q = position_operator(dim).real
    off = {}
    for r, n, m, lam in model.coupled_terms:
        E = np.zeros((N, N))
        E[n, m] = E[m, n] = 1.0
        off[(n, m, r)] = lam * np.kron(E, _mode_op(Q, r, M, dim))
    return ref, diag, off


def assemble_matrix(model, config=FockConfig()):
    ref, diag, off = term_matrices(model, config)
    H = ref + sum(diag.values(), np.zeros_like(ref)) + sum(off.values(), np.zeros_like(ref))
    H = 0.5 * (H + H.T)
    dim = as_dim(config)
    return TruncatedHamiltonian(H.astype(complex), (model.N,) + (dim,) * model.M,
                                {"reference": ref, "diagonal": diag, "offdiagonal": off})


def _commutator_norm(a, b):
    """Spectral norm of [a, b] for Hermitian a, b (the commutator is anti-Hermitian)."""
    c = 1j * (a @ b - b @ a)
    return float(np.max(np.abs(np.linalg.eigvalsh(0.5 * (c + c.conj().T)))))


def commutator_bound(model, config=FockConfig(), terms=None):
    """Gamma = ||[sum diag, sum off]|| + sum_r sum_{ordered distinct pairs} ||[off, off']|| (eV^2)."""
    ref, diag, off = term_matrices(model, config) if terms is None else terms
    if not off:
        return 0.0
    D = ref + sum(diag.values(), np.zeros_like(ref))
    O = sum(off.values(), np.zeros_like(ref))
    gamma = _commutator_norm(D, O)
    for r in range(model.M):
        keys = [k for k in off if k[2] == r]
        for a, b in combinations(keys, 2):
            gamma += 2.0 * _commutator_norm(off[a], off[b])  # both orderings of the pair
    return gamma
