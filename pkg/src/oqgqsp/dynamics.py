"""Trotterized vibronic dynamics: compiled circuits versus exact oracles.

Layer order (shared by the compiled path and the Trotterized oracle):
for each mode r, the harmonic reference rotation of r followed by the
diagonal terms f_nr for n = 0..N-1 (state energies first, before any mode);
then every off-diagonal coupling in mode-major, pair-lexicographic order.
"""

from dataclasses import dataclass, field
import io
import math

import numpy as np

from .compiler import (Registers, energy_term_instructions, linear_term_instructions,
                       mcd_coupling_instructions, quadratic_term_instructions,
                       reference_rotation, simulate, state_dependent_instructions)
from .fock import FockConfig, HybridState, as_dim, displaced_vacuum, position_eigensystem
from .fourier import select_series, fourier_coefficients
from .gqsp import complete, find_angles
from .potentials import evaluate
from .units import HBAR_EV_FS
from .vibronic import assemble_matrix, commutator_bound
from ._validation import check_scalar


@dataclass(frozen=True)
class TrotterPlan:
    t_total: float
    p: int
    dt: float
    eps_trot: float = math.nan
    eps_fourier: float = math.nan
    gamma: float = math.nan

    @property
    def times(self):
        return self.dt * np.arange(self.p + 1)


def plan(model, t_total, epsilon=1e-2, config=FockConfig(), *, p=None, gamma=None):
    """Step schedule with epsilon split equally between Trotter and Fourier error.

    p = ceil(Gamma t^2 / (hbar^2 eps_trot)) with Gamma in eV^2; a manual ``p``
    overrides the bound.
    """
    t_total = check_scalar(t_total, "t_total", min_val=0.0, include_min=False)
    epsilon = check_scalar(epsilon, "epsilon", min_val=0.0, max_val=1.0,
                           include_min=False, include_max=False)
    eps_trot = eps_fourier = epsilon / 2
    if gamma is None and p is None:
        gamma = commutator_bound(model, config)
    if p is None:
        p = 1 if gamma == 0 else math.ceil(gamma * t_total**2 / (HBAR_EV_FS**2 * eps_trot) - 1e-9)
    p = check_scalar(p, "p", min_val=1, integer=True)
    return TrotterPlan(t_total, p, t_total / p, eps_trot, eps_fourier,
                       math.nan if gamma is None else float(gamma))


# ---------------------------------------------------------------------------
# initial states and traces


def initial_state(model, config, state, displacements=None):
    """Electronic basis state times (displaced) vacua, as an (N, dim, ..., dim) tensor."""
    dim = as_dim(config)
    n = model.states.index(state) if isinstance(state, str) else int(state)
    if not 0 <= n < model.N:
        raise ValueError(f"initial state {state!r} not in the model")
    displacements = displacements or {}
    labels = [m.label for m in model.modes]
    unknown = set(displacements) - set(labels)
    if unknown:
        raise ValueError(f"displacements name unknown modes {sorted(unknown)}")
    psi = np.zeros(model.N, dtype=complex)
    psi[n] = 1.0
    for lab in labels:
        psi = np.multiply.outer(psi, displaced_vacuum(dim, displacements.get(lab, 0.0)))
    return psi


def populations(psi):
    """Electronic populations of an (N, ...) tensor."""
    w = np.sum(np.abs(psi.reshape(psi.shape[0], -1)) ** 2, axis=1)
    return w / w.sum()


@dataclass
class PopulationTrace:
    times: np.ndarray
    populations: np.ndarray  # (n_times, N)
    herald: np.ndarray = None  # cumulative herald probability per time
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.populations = np.asarray(self.populations, dtype=float)
        if self.herald is None:
            self.herald = np.ones(self.times.size)

    def to_csv(self):
        N = self.populations.shape[1]
        buf = io.StringIO()
        buf.write(",".join(["t_fs"] + [f"P{n}" for n in range(N)] + ["herald_cumulative"]) + "\n")
        for t, row, h in zip(self.times, self.populations, self.herald):
            buf.write(",".join([f"{t:.10g}"] + [f"{v:.12e}" for v in row] + [f"{h:.12e}"]) + "\n")
        return buf.getvalue()


def compare(a, b):
    """Per-state max and RMS deviations between two traces on the same grid."""
    if a.times.shape != b.times.shape or not np.allclose(a.times, b.times, rtol=0, atol=1e-9):
        raise ValueError("traces are on different time grids")
    if a.populations.shape != b.populations.shape:
        raise ValueError("traces have different numbers of states")
    diff = np.abs(a.populations - b.populations)
    return {
        "per_state_max": diff.max(axis=0),
        "per_state_l2": np.sqrt(np.mean(diff**2, axis=0)),
        "max": float(diff.max()) if diff.size else 0.0,
    }


def comparison_report(report, label_a="compiled", label_b="oracle"):
    lines = [f"comparison {label_a} vs {label_b}"]
    for n, (mx, l2) in enumerate(zip(report["per_state_max"], report["per_state_l2"])):
        lines.append(f"P{n}: max {mx:.3e} rms {l2:.3e}")
    lines.append(f"overall max {report['max']:.3e}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# oracles


def evolve_exact(model, plan_, initial, config=FockConfig()):
    """Populations under exp(-i H t / hbar) from full diagonalization."""
    H = assemble_matrix(model, config).matrix
    w, V = np.linalg.eigh(H)
    c0 = V.conj().T @ initial.reshape(-1)
    pops = []
    for t in plan_.times:
        psi = V @ (np.exp(-1j * w * t / HBAR_EV_FS) * c0)
        pops.append(populations(psi.reshape(initial.shape)))
    return PopulationTrace(plan_.times, pops, meta={"kind": "exact"})


class _SplitPropagator:
    """Exact per-term exponentials applied in the documented layer order."""

    def __init__(self, model, config, dt):
        self.model = model
        self.dim = as_dim(config)
        self.x, self.V = position_eigensystem(self.dim)
        k = np.arange(self.dim)
        self.ref = [np.exp(-1j * dt * m.omega * (k + 0.5) / HBAR_EV_FS) for m in model.modes]
        self.energy = np.exp(-1j * dt * np.asarray(model.energies) / HBAR_EV_FS)
        self.diag = [[np.exp(-1j * dt * evaluate(f, self.x) / HBAR_EV_FS) for f in m.diag]
                     for m in model.modes]
        self.off = [(r, n, m, dt * lam * self.x / HBAR_EV_FS)
                    for r, n, m, lam in model.coupled_terms]

    def _to(self, psi, basis, r, want):
        if basis[r] == want:
            return psi
        M = self.V.T if want == "x" else self.V
        psi = np.moveaxis(np.tensordot(M, psi, axes=([1], [r + 1])), 0, r + 1)
        basis[r] = want
        return psi

    def _shape(self, r, ndim):
        s = [1] * ndim
        s[r] = self.dim
        return s

    def layer(self, psi):
        basis = ["n"] * self.model.M
        psi = psi * self.energy.reshape([-1] + [1] * self.model.M)
        for r in range(self.model.M):
            psi = self._to(psi, basis, r, "n")
            psi = psi * self.ref[r].reshape(self._shape(r + 1, psi.ndim))
            psi = self._to(psi, basis, r, "x")
            for n in range(self.model.N):
                psi[n] *= self.diag[r][n].reshape(self._shape(r, psi.ndim - 1))
        for r, n, m, th in self.off:
            psi = self._to(psi, basis, r, "x")
            shape = self._shape(r, psi.ndim - 1)
            c, s = np.cos(th).reshape(shape), np.sin(th).reshape(shape)
            a, b = psi[n].copy(), psi[m].copy()
            psi[n] = c * a - 1j * s * b
            psi[m] = -1j * s * a + c * b
        for r in range(self.model.M):
            psi = self._to(psi, basis, r, "n")
        return psi


def evolve_trotter(model, plan_, initial, config=FockConfig()):
    """Trotterized oracle: the same layer split with exactly exponentiated terms."""
    prop = _SplitPropagator(model, config, plan_.dt)
    psi = np.array(initial, dtype=complex)
    pops = [populations(psi)]
    for _ in range(plan_.p):
        psi = prop.layer(psi)
        pops.append(populations(psi))
    return PopulationTrace(plan_.times, pops, meta={"kind": "trotter"})


def evolve_oracle(model, plan_, initial, config=FockConfig(), flavor="trotter"):
    if flavor == "exact":
        return evolve_exact(model, plan_, initial, config)
    if flavor == "trotter":
        return evolve_trotter(model, plan_, initial, config)
    raise ValueError("flavor must be 'exact' or 'trotter'")


# ---------------------------------------------------------------------------
# compiled path


@dataclass
class CompiledLayer:
    circuit: object
    programs: dict  # (n, r) -> GqspProgram
    series: dict  # (n, r) -> FourierSeries (half series)
    registers: Registers


def synthesize_diagonal(f, dt, L=8.0, fourier_epsilon=1e-3, degree=None):
    """Half-series program for exp(-i dt f / hbar) delivered by the heralded gate."""
    if degree is None:
        series = select_series(f, dt, L, fourier_epsilon, fraction=0.5)
    else:
        series = fourier_coefficients(f, dt, L, degree, fraction=0.5)
    prog = find_angles(complete(series.coeffs), L=L)
    return series, prog


def _flatten(f):
    if f.kind != "sum":
        return [f]
    return [leaf for t in f.terms for leaf in _flatten(t)]


def compile_layer(model, dt, *, L=8.0, fourier_epsilon=1e-3, degree=None, policy="project"):
    """One Trotter layer as a circuit on N + 2 qubits and M oscillators."""
    regs = Registers(model.N, model.M)
    circ = regs.empty(policy)
    programs, series = {}, {}
    for n, e in enumerate(model.energies):
        if e:
            circ.extend(energy_term_instructions(n, e, dt))
    cd_diag = 0
    for r, mode in enumerate(model.modes):
        circ.append(reference_rotation(r, mode.omega, dt))
        for n, f in enumerate(mode.diag):
            if f.is_anharmonic:
                s, prog = synthesize_diagonal(f, dt, L, fourier_epsilon, degree)
                programs[(n, r)], series[(n, r)] = prog, s
                circ.extend(state_dependent_instructions(prog, n, regs, r))
                cd_diag += 8 * prog.d
                continue
            for t in _flatten(f):
                if t.kind == "linear" and t.params["kappa"]:
                    circ.extend(linear_term_instructions(n, r, t.params["kappa"], dt, regs))
                    cd_diag += 2
                elif t.kind == "quadratic" and t.params["gamma"]:
                    circ.extend(quadratic_term_instructions(n, r, t.params["gamma"], dt, regs))
                elif t.kind == "constant" and t.params["value"]:
                    circ.extend(energy_term_instructions(n, t.params["value"], dt))
                elif t.kind not in ("linear", "quadratic", "constant"):
                    raise ValueError(f"no native compilation for {t.kind} terms")
    for r, n, m, lam in model.coupled_terms:
        circ.extend(mcd_coupling_instructions(n, m, r, -lam * dt / HBAR_EV_FS))
    circ.meta["cd_count"] = cd_diag + 2 * len(model.coupled_terms)
    return CompiledLayer(circ, programs, series, regs)


def _to_register(psi, regs, dim):
    """Physical (N, dim, ...) tensor -> unary-encoded HybridState with ancillas in |0>."""
    N, M = regs.n_states, regs.n_osc
    amp = np.zeros((2,) * regs.n_qubits + (dim,) * M, dtype=complex)
    for n in range(N):
        amp[regs.code.bits(n) + (0, 0)] = psi[n]
    return HybridState(amp.reshape(-1), regs.n_qubits, M, dim)


def _from_register(state, regs):
    t = state.tensor()
    return np.stack([t[regs.code.bits(n) + (0, 0)] for n in range(regs.n_states)])


def evolve_compiled(model, plan_, initial, config=FockConfig(), *, policy="project", seed=None,
                    L=8.0, fourier_epsilon=1e-3, degree=None, layer=None):
    """Run the compiled layer circuit p times; populations read from the state vector."""
    dim = as_dim(config)
    layer = layer or compile_layer(model, plan_.dt, L=L, fourier_epsilon=fourier_epsilon,
                                   degree=degree, policy=policy)
    regs = layer.registers
    state = _to_register(np.asarray(initial, dtype=complex), regs, dim)
    rng = np.random.default_rng(seed)
    pops = [populations(initial)]
    herald = [1.0]
    cum = 1.0
    norm_defect = 0.0
    for _ in range(plan_.p):
        state, log = simulate(layer.circuit, state, seed=rng.integers(2**63), policy=policy)
        if not np.all(np.isfinite(state.amplitudes)):
            raise FloatingPointError("non-finite amplitude in compiled evolution")
        norm_defect = max(norm_defect, abs(state.norm() - 1.0))
        for rec in log:
            cum *= rec.probability
        psi = _from_register(state, regs)
        pops.append(populations(psi))
        herald.append(cum)
    return PopulationTrace(plan_.times, pops, np.array(herald),
                           meta={"kind": "compiled", "cd_per_layer": layer.circuit.meta["cd_count"],
                          "norm_defect": norm_defect,
                                 "degrees": {k: p.d for k, p in layer.programs.items()}})
