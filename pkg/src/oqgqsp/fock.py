"""Truncated Fock-space linear algebra.

Index layout
------------
Every hybrid register in this package is stored as one flat complex vector
whose C-order reshape is ``(2,) * n_qubits + (dim,) * n_osc``: qubit 0 is
the most significant index, oscillators follow the qubits, and oscillator 0
is the most significant of those. Operators built here act on a single
oscillator and are embedded with :func:`embed`.
"""

from dataclasses import dataclass
from functools import lru_cache
import io

import numpy as np
from scipy.special import eval_genlaguerre, gammaln

from ._validation import check_normalized, check_scalar, check_square, check_vector


@dataclass(frozen=True)
class FockConfig:
    """Number of Fock levels kept per oscillator."""

    dim: int = 30

    def __post_init__(self):
        check_scalar(self.dim, "dim", min_val=2, integer=True)


def as_dim(config):
    if isinstance(config, FockConfig):
        return config.dim
    return FockConfig(config).dim


def annihilation(config):
    dim = as_dim(config)
    return np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1).astype(complex)


def creation(config):
    return annihilation(config).conj().T


def number_operator(config):
    return np.diag(np.arange(as_dim(config), dtype=float)).astype(complex)


def position_operator(config):
    """Q = (a + a^dagger)/sqrt(2): real symmetric tridiagonal."""
    a = annihilation(config)
    return (a + a.conj().T) / np.sqrt(2)


def momentum_operator(config):
    """Hermitian momentum i(a^dagger - a)/sqrt(2)."""
    a = annihilation(config)
    return 1j * (a.conj().T - a) / np.sqrt(2)


@lru_cache(maxsize=32)
def _position_eigh(dim):
    x, v = np.linalg.eigh(position_operator(dim).real)
    # eigenvalues come out symmetric only up to rounding; symmetrize them
    x = 0.5 * (x - x[::-1])
    x.setflags(write=False)
    v.setflags(write=False)
    return x, v


def position_eigensystem(config):
    """Eigenvalues (ascending) and real orthogonal eigenvectors of Q."""
    return _position_eigh(as_dim(config))


def function_of_position(config, func):
    """Matrix f(Q) built by eigendecomposition of the truncated Q."""
    x, v = position_eigensystem(config)
    vals = np.asarray(func(x))
    return (v * vals) @ v.T


def phase_operator(config, angle_per_unit):
    """exp(i * angle_per_unit * Q), exactly unitary."""
    angle_per_unit = check_scalar(angle_per_unit, "angle_per_unit")
    return function_of_position(config, lambda x: np.exp(1j * angle_per_unit * x))


def expm_hermitian(h, t=1.0):
    """exp(-i t H) for Hermitian H via eigendecomposition."""
    h = check_square(h, "h")
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def unitarity_defect(u):
    u = np.asarray(u)
    return np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0]))


# ---------------------------------------------------------------------------
# states


def fock_state(config, n):
    dim = as_dim(config)
    n = check_scalar(n, "n", min_val=0, max_val=dim - 1, integer=True)
    psi = np.zeros(dim, dtype=complex)
    psi[n] = 1.0
    return psi


def vacuum(config):
    return fock_state(config, 0)


def coherent_state(config, alpha):
    """Coherent state projected onto the truncated space and renormalized."""
    dim = as_dim(config)
    alpha = complex(alpha)
    n = np.arange(dim)
    if alpha == 0:
        return vacuum(dim)
    log_amp = n * np.log(abs(alpha)) - 0.5 * gammaln(n + 1) - 0.5 * abs(alpha) ** 2
    psi = np.exp(log_amp + 1j * n * np.angle(alpha))
    return psi / np.linalg.norm(psi)


def displaced_vacuum(config, q_shift, p_shift=0.0):
    """Vacuum displaced so that <Q> = q_shift and <P> = p_shift."""
    return coherent_state(config, (q_shift + 1j * p_shift) / np.sqrt(2))


def tensor_product(*factors):
    """Kronecker product in the package's index order (first factor most significant)."""
    out = np.array([[1.0 + 0j]]) if np.ndim(factors[0]) == 2 else np.array([1.0 + 0j])
    for f in factors:
        out = np.kron(out, np.asarray(f, dtype=complex))
    return out


def embed(op, position, dims):
    """Embed a local operator acting on subsystem ``position`` of ``dims``."""
    left = int(np.prod(dims[:position], dtype=int))
    right = int(np.prod(dims[position + 1:], dtype=int))
    return np.kron(np.kron(np.eye(left), op), np.eye(right))


def fidelity(a, b):
    """|<a|b>|^2 for two state vectors (or HybridStates) of equal layout."""
    a = getattr(a, "amplitudes", a)
    b = getattr(b, "amplitudes", b)
    a = check_vector(a, "a")
    b = check_vector(b, "b")
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(min(1.0, abs(np.vdot(a, b)) ** 2))


@dataclass
class HybridState:
    """State of ``n_qubits`` qubits and ``n_osc`` oscillators of equal truncation.

    ``amplitudes`` is flat in the module-level layout (qubits first, qubit 0
    most significant).
    """

    amplitudes: np.ndarray
    n_qubits: int
    n_osc: int
    dim: int

    def __post_init__(self):
        self.amplitudes = check_vector(self.amplitudes, "amplitudes")
        expected = 2**self.n_qubits * self.dim**self.n_osc
        if self.amplitudes.size != expected:
            raise ValueError(f"expected {expected} amplitudes, got {self.amplitudes.size}")

    @property
    def shape(self):
        return (2,) * self.n_qubits + (self.dim,) * self.n_osc

    def tensor(self):
        return self.amplitudes.reshape(self.shape)

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self):
        return HybridState(self.amplitudes / self.norm(), self.n_qubits, self.n_osc, self.dim)

    @classmethod
    def product(cls, qubit_bits, osc_states):
        """Computational-basis qubits times single-oscillator states."""
        osc_states = [np.asarray(o, dtype=complex) for o in osc_states]
        dim = osc_states[0].size if osc_states else 1
        q = np.zeros(2 ** len(qubit_bits), dtype=complex)
        q[int("".join(str(int(b)) for b in qubit_bits) or "0", 2)] = 1.0
        return cls(tensor_product(q, *osc_states), len(qubit_bits), len(osc_states), dim)

    def qubit_probability(self, qubit, outcome=1):
        t = np.moveaxis(self.tensor(), qubit, 0)
        return float(np.sum(np.abs(t[outcome]) ** 2))


# ---------------------------------------------------------------------------
# Wigner function


def _displacement_elements(dim, beta):
    """<m|D(beta)|n> for all m, n < dim at every point of the array ``beta``.

    Closed-form Laguerre expression, exact in the untruncated space; the
    result has shape ``beta.shape + (dim, dim)``.
    """
    beta = np.asarray(beta, dtype=complex)
    x = np.abs(beta) ** 2
    m = np.arange(dim)[:, None]
    n = np.arange(dim)[None, :]
    lo = np.minimum(m, n)
    k = np.abs(m - n)
    out = np.empty(beta.shape + (dim, dim), dtype=complex)
    xb = x[..., None, None]
    lag = eval_genlaguerre(lo, k, xb)
    # floor keeps 0 * log(0) finite; beta^k still underflows to zero for k > 0
    logx = np.log(np.maximum(xb, 1e-300))
    pref = np.exp(0.5 * (gammaln(lo + 1) - gammaln(lo + k + 1)) - 0.5 * xb + 0.5 * k * logx)
    ang = np.angle(beta)[..., None, None]
    # m >= n: beta^(m-n); m < n: (-conj(beta))^(n-m)
    phase = np.where(m >= n, np.exp(1j * k * ang), (-1.0) ** k * np.exp(-1j * k * ang))
    out[...] = pref * phase * lag
    return out


def _as_density(state):
    s = np.asarray(state, dtype=complex)
    if s.ndim == 1:
        check_normalized(s, "state", atol=1e-6)
        return np.outer(s, s.conj())
    if s.ndim == 2 and s.shape[0] == s.shape[1]:
        tr = np.trace(s).real
        if abs(tr - 1.0) > 1e-6:
            raise ValueError(f"density matrix is not normalized (trace={tr:.3e})")
        return s
    raise ValueError(f"expected a state vector or density matrix, got shape {s.shape}")


def wigner_grid(state, q_values, p_values):
    """Wigner function W(q, p) from the displaced-parity formula.

    W(q, p) = (1/pi) <D(alpha) Pi D(alpha)^dagger> with alpha = (q + ip)/sqrt(2),
    normalized so that the integral over dq dp is one. ``state`` is a pure
    single-oscillator vector or a density matrix. Returns an array of shape
    ``(len(p_values), len(q_values))`` (row-major over p, then q).
    """
    rho = _as_density(state)
    dim = rho.shape[0]
    q = np.asarray(q_values, dtype=float)
    p = np.asarray(p_values, dtype=float)
    qq, pp = np.meshgrid(q, p)
    alpha = (qq + 1j * pp) / np.sqrt(2)
    parity = (-1.0) ** np.arange(dim)
    # D(a) Pi D(a)^dagger = D(2a) Pi
    w = np.empty(alpha.shape)
    for row in range(alpha.shape[0]):
        d = _displacement_elements(dim, 2 * alpha[row])
        # Tr[rho D Pi] = sum_{m,n} rho[n, m] D[m, n] (-1)^n
        w[row] = np.einsum("nm,xmn,n->x", rho, d, parity).real / np.pi
    return w


def wigner_csv(grid, q_values, p_values):
    """CSV text with header ``q,p,w``; rows ordered over p, then q."""
    buf = io.StringIO()
    buf.write("q,p,w\n")
    for i, p in enumerate(p_values):
        for j, q in enumerate(q_values):
            buf.write(f"{q:.10g},{p:.10g},{grid[i, j]:.12e}\n")
    return buf.getvalue()
