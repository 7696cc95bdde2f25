"""Generalized quantum signal processing on the unit circle.

A program (theta, phi, lambda) of degree d defines

    U(x) = e^{i lam Z} R_{-d} (B R_{-d+1}) ... (B R_0) (A R_1) ... (A R_d)

with R_r = e^{i phi_r X} e^{i theta_r Z}, A = diag(x, 1), B = diag(1, 1/x).
The first column of U is (F(x), G(x)) for Laurent polynomials of degree d.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment, minimize, minimize_scalar
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted
import tomli
import tomli_w

from ._validation import check_laurent, check_scalar, check_vector
from .fock import position_eigensystem

DEFAULT_ETA = 1e-6
MAX_DEGREE = 200


class CompletionError(RuntimeError):
    """Spectral factorization could not produce a valid complement."""


class AngleFindingError(RuntimeError):
    """Layer stripping lost consistency."""


def laurent_eval(coeffs, z):
    """sum_k c_k z^k for coefficients indexed -d..d."""
    coeffs, d = check_laurent(coeffs)
    z = np.asarray(z, dtype=complex)
    acc = np.zeros(z.shape, dtype=complex)
    for c in coeffs[::-1]:
        acc = acc * z + c
    return acc * z ** (-d)


def unit_circle(n):
    return np.exp(2j * np.pi * np.arange(n) / n)


def sup_norm(coeffs, n=None, refine=True):
    """max |F| on the unit circle: grid maximum, polished by bounded local search."""
    coeffs, d = check_laurent(coeffs)
    n = max(4096, 16 * (2 * d + 1)) if n is None else n
    vals = np.abs(laurent_eval(coeffs, unit_circle(n)))
    best = float(np.max(vals))
    if not refine or d == 0:
        return best
    h = 2 * np.pi / n
    neg = lambda t: -abs(laurent_eval(coeffs, np.exp(1j * t)))
    # grid peaks can sit up to O(d^2 h^2) below the true maximum
    peaks = np.flatnonzero((vals >= np.roll(vals, 1)) & (vals >= np.roll(vals, -1)))
    for j in peaks[np.argsort(vals[peaks])[-8:]]:
        res = minimize_scalar(neg, bounds=(h * (j - 1), h * (j + 1)), method="bounded",
                              options={"xatol": 1e-12})
        best = max(best, -float(res.fun))
    return best


@dataclass
class CompletedPair:
    """Laurent pair with |F|^2 + |G|^2 = 1 on |z| = 1.

    ``scale`` records the pre-completion rescaling: scale * F equals the
    coefficients originally supplied.
    """

    F: np.ndarray
    G: np.ndarray
    d: int
    scale: float = 1.0
    residual: float = np.nan

    def completion_residual(self, n=4096):
        z = unit_circle(n)
        tot = np.abs(laurent_eval(self.F, z)) ** 2 + np.abs(laurent_eval(self.G, z)) ** 2
        return float(np.max(np.abs(tot - 1.0)))


def _strip_small(a, tol):
    """Number of symmetric negligible coefficients at both ends of a palindromic vector."""
    k = 0
    n = a.size
    while 2 * k + 2 < n and abs(a[k]) <= tol and abs(a[n - 1 - k]) <= tol:
        k += 1
    return k


def complete(F, d=None, *, eta=DEFAULT_ETA, circle_tol=1e-7, n_check=4096, check_tol=1e-8):
    """Fejer-Riesz completion of F.

    Parameters
    ----------
    F : array_like
        Coefficients c_{-d..d}.
    d : int, optional
        Degree; inferred from ``len(F)`` when omitted.
    eta : float
        Safety margin; F is rescaled when sup |F| > 1 - eta.

    Returns
    -------
    CompletedPair
    """
    F, d_in = check_laurent(F)
    if d is not None and d != d_in:
        raise ValueError(f"degree {d} does not match {F.size} coefficients")
    d = d_in
    if d > MAX_DEGREE:
        raise CompletionError(f"degree {d} exceeds the companion-matrix guard {MAX_DEGREE}")
    sup = sup_norm(F)
    scale = 1.0
    if sup > 1.0 - eta:
        scale = sup / (1.0 - eta)
        F = F / scale
    if d == 0:
        g0 = np.sqrt(max(0.0, 1.0 - abs(F[0]) ** 2))
        pair = CompletedPair(F=F, G=np.array([g0], dtype=complex), d=0, scale=scale)
        pair.residual = pair.completion_residual(n_check)
        return pair

    # A(z) = 1 - F(z) conj(F)(1/z), coefficients m = -2d..2d
    a = -np.convolve(F, np.conj(F[::-1]))
    a[2 * d] += 1.0
    a = 0.5 * (a + np.conj(a[::-1]))  # exact conjugate symmetry
    tol = 1e-15 * max(1.0, float(np.max(np.abs(a))))
    k = _strip_small(a, tol)
    core = a[k:a.size - k]
    roots = np.roots(core[::-1]) if core.size > 1 else np.array([], dtype=complex)
    mod = np.abs(roots)
    near = np.abs(mod - 1.0) < circle_tol
    if np.any(near):
        raise CompletionError(
            f"{int(near.sum())} roots within {circle_tol:g} of the unit circle "
            f"(closest |w| - 1 = {np.min(np.abs(mod - 1.0)):.2e}); |F| touches 1"
        )
    inner = roots[mod < 1.0]
    outer = roots[mod > 1.0]
    if inner.size != outer.size or inner.size + k != 2 * d:
        raise CompletionError(
            f"root pairing failed: {inner.size} inner vs {outer.size} outer roots "
            f"(+{k} stripped), expected {2 * d} each"
        )
    if inner.size:
        refl = 1.0 / np.conj(outer)
        cost = np.abs(inner[:, None] - refl[None, :])
        rows, cols = linear_sum_assignment(cost)
        inner = 0.5 * (inner[rows] + refl[cols])
    inner = np.concatenate([inner, np.zeros(k, dtype=complex)])
    # expanding prod (z - w) by convolution is unstable for clustered roots;
    # sample it pointwise on the circle and transform instead
    n_fft = 1 << int(np.ceil(np.log2(max(n_check, 8 * (2 * d + 1)))))
    z = unit_circle(n_fft)
    log_p = np.sum(np.log(z[:, None] - inner[None, :]), axis=1)
    gz = np.exp(log_p - d * np.log(z) - np.max(log_p.real))
    az = 1.0 - np.abs(laurent_eval(F, z)) ** 2
    p2 = np.abs(gz) ** 2
    c2 = float(np.dot(az, p2) / np.dot(p2, p2))
    spec = np.fft.fft(np.sqrt(max(c2, 0.0)) * gz) / n_fft
    G = spec[np.arange(-d, d + 1) % n_fft]
    pair = CompletedPair(F=F, G=G, d=d, scale=scale)
    pair.residual = pair.completion_residual(n_check)
    if pair.residual > check_tol:
        raise CompletionError(
            f"completion residual {pair.residual:.2e} exceeds {check_tol:g} "
            f"(degree {d}, min A on circle {az.min():.2e})"
        )
    return pair


# ---------------------------------------------------------------------------
# programs and reconstruction


@dataclass
class GqspProgram:
    """Angles for the degree-d GQSP product; index j of theta/phi is r = j - d."""

    theta: np.ndarray
    phi: np.ndarray
    lam: float
    d: int
    L: float = 8.0
    scale: float = 1.0
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        self.phi = np.asarray(self.phi, dtype=float)
        n = 2 * self.d + 1
        if self.theta.shape != (n,) or self.phi.shape != (n,):
            raise ValueError(f"expected {n} theta and phi angles")
        self.lam = float(self.lam)

    @property
    def n_parameters(self):
        return 2 * self.theta.size + 1

    def to_vector(self):
        return np.concatenate([self.theta, self.phi, [self.lam]])

    def with_vector(self, v):
        n = self.theta.size
        return GqspProgram(v[:n], v[n:2 * n], v[2 * n], self.d, self.L, self.scale, dict(self.meta))

    def unitaries(self, z):
        return program_unitaries(self.theta, self.phi, self.lam, self.d, z)

    def F(self, z):
        return self.unitaries(z)[..., 0, 0]

    def G(self, z):
        return self.unitaries(z)[..., 1, 0]

    def dumps(self):
        doc = {"d": self.d, "L": self.L, "lambda": self.lam, "scale": self.scale,
               "theta": self.theta.tolist(), "phi": self.phi.tolist()}
        if self.meta:
            doc["meta"] = {k: v for k, v in self.meta.items() if isinstance(v, (str, int, float))}
        return tomli_w.dumps(doc)

    @classmethod
    def loads(cls, text):
        doc = tomli.loads(text)
        try:
            return cls(theta=doc["theta"], phi=doc["phi"], lam=doc["lambda"], d=doc["d"],
                       L=doc.get("L", 8.0), scale=doc.get("scale", 1.0),
                       meta=dict(doc.get("meta", {})))
        except KeyError as exc:
            raise ValueError(f"program file lacks field {exc.args[0]!r}") from None


def _rot(theta, phi):
    """e^{i phi X} e^{i theta Z} broadcast over leading axes."""
    c, s = np.cos(phi), np.sin(phi)
    et = np.exp(1j * theta)
    out = np.empty(np.shape(theta) + (2, 2), dtype=complex)
    out[..., 0, 0] = c * et
    out[..., 0, 1] = 1j * s * np.conj(et)
    out[..., 1, 0] = 1j * s * et
    out[..., 1, 1] = c * np.conj(et)
    return out


def program_unitaries(theta, phi, lam, d, z):
    """2x2 matrices U(z) of the GQSP product at each point of ``z``."""
    z = np.asarray(z, dtype=complex)
    R = _rot(np.asarray(theta), np.asarray(phi))
    el = np.exp(1j * lam)
    U = np.zeros(z.shape + (2, 2), dtype=complex)
    U[..., 0, :] = el * R[0, 0]
    U[..., 1, :] = np.conj(el) * R[0, 1]
    zi = 1.0 / z
    for j in range(1, 2 * d + 1):
        if j <= d:
            U[..., :, 1] *= zi[..., None]  # B = diag(1, 1/z)
        else:
            U[..., :, 0] *= z[..., None]  # A = diag(z, 1)
        U = U @ R[j]
    return U


def reconstruct_F(program, samples=4096):
    """F(z) of the program at ``samples`` equispaced unit-circle points."""
    samples = check_scalar(samples, "samples", min_val=1, integer=True)
    return program.F(unit_circle(samples))


def reconstruction_error(program, F, samples=4096):
    z = unit_circle(samples)
    return float(np.max(np.abs(program.F(z) - laurent_eval(F, z))))


# ---------------------------------------------------------------------------
# layer stripping


def _canonical(row):
    j = int(np.argmax(np.abs(row)))
    return row * np.exp(-1j * np.angle(row[j]))


def _zxz(W):
    """(a, phi, theta) with W = e^{i a Z} e^{i phi X} e^{i theta Z} for W in SU(2)."""
    w00, w10 = W[0, 0], W[1, 0]
    phi = float(np.arctan2(abs(w10), abs(w00)))
    if abs(w10) < 1e-14:
        return 0.0, phi, float(np.angle(w00))
    if abs(w00) < 1e-14:
        return 0.0, phi, float(np.angle(w10) - np.pi / 2)
    s = np.angle(w00)
    t = np.angle(w10) - np.pi / 2
    return float((s - t) / 2), phi, float((s + t) / 2)


def find_angles(pair, *, L=8.0, tiny=1e-13, drift_tol=1e-6):
    """Layer-stripping angle extraction for a completed pair.

    Works on P = x^d F and Q = x^d G, peeling one signal operator per step
    from the left; each step zeros P's constant and Q's top coefficient.
    """
    d = pair.d
    P = np.array(pair.F, dtype=complex)
    Q = np.array(pair.G, dtype=complex)
    Ws = []
    for k in range(2 * d, 0, -1):
        nrm = np.sqrt(np.sum(np.abs(P) ** 2 + np.abs(Q) ** 2))
        P, Q = P / nrm, Q / nrm
        nk = np.hypot(abs(P[k]), abs(Q[k]))
        n0 = np.hypot(abs(P[0]), abs(Q[0]))
        if max(nk, n0) < tiny:
            Wd = np.eye(2, dtype=complex)
        elif nk >= n0:
            r2 = _canonical(np.array([Q[k], -P[k]]) / nk)
            r1 = np.array([np.conj(r2[1]), -np.conj(r2[0])])
            Wd = np.array([r1, r2])
        else:
            r1 = _canonical(np.array([Q[0], -P[0]]) / n0)
            r2 = np.array([-np.conj(r1[1]), np.conj(r1[0])])
            Wd = np.array([r1, r2])
        top = Wd[0, 0] * P + Wd[0, 1] * Q
        bot = Wd[1, 0] * P + Wd[1, 1] * Q
        drift = max(abs(top[0]), abs(bot[k]))
        if drift > drift_tol:
            raise AngleFindingError(
                f"layer {2 * d - k}: annihilated coefficients left {drift:.2e} "
                f"(> {drift_tol:g}); the pair is inconsistent or needs higher precision"
            )
        Ws.append(Wd.conj().T)
        P, Q = top[1:], bot[:k]
    nrm = np.hypot(abs(P[0]), abs(Q[0]))
    p0, q0 = P[0] / nrm, Q[0] / nrm
    Ws.append(np.array([[p0, -np.conj(q0)], [q0, np.conj(p0)]]))

    n = 2 * d + 1
    theta = np.zeros(n)
    phi = np.zeros(n)
    lam = 0.0
    for j, W in enumerate(Ws):
        a, ph, th = _zxz(W)
        phi[j] = ph
        theta[j] += th
        if j == 0:
            lam = a
        else:
            # e^{i a Z} commutes with the diagonal signal operator on its left
            theta[j - 1] += a
    prog = GqspProgram(theta, phi, lam, d, L=L, scale=pair.scale)
    prog.meta["reconstruction_error"] = reconstruction_error(prog, pair.F)
    return prog


# ---------------------------------------------------------------------------
# refinement


def _fidelity_weights(target, reference, L):
    """Weights w_j with <ref| T^dagger F(U) |ref> = sum_j w_j F(z_j)."""
    reference = check_vector(reference, "reference")
    target = np.asarray(target, dtype=complex)
    dim = reference.size
    if target.shape != (dim, dim):
        raise ValueError(f"target shape {target.shape} does not match reference dimension {dim}")
    x, V = position_eigensystem(dim)
    a = V.T @ reference
    b = V.T @ (target @ reference)
    return np.conj(b) * a, np.exp(1j * np.pi * x / L)


def program_fidelity(program, target, reference):
    """|<ref| T^dagger F(e^{i pi Q / L}) |ref>|^2."""
    w, z = _fidelity_weights(target, reference, program.L)
    return float(abs(np.dot(w, program.F(z))) ** 2)


def refine_angles(program, target, reference, max_iters=200, *, tol=1e-12):
    """Locally maximize the reference-state fidelity over all angles.

    Quasi-Newton (L-BFGS-B, finite-difference gradients). The returned
    program is never worse than the input.
    """
    w, z = _fidelity_weights(target, reference, program.L)
    d = program.d

    def loss(v):
        n = 2 * d + 1
        F = program_unitaries(v[:n], v[n:2 * n], v[2 * n], d, z)[..., 0, 0]
        val = 1.0 - abs(np.dot(w, F)) ** 2
        if not np.isfinite(val):
            raise FloatingPointError("non-finite refinement objective")
        return val

    v0 = program.to_vector()
    f0 = loss(v0)
    res = minimize(loss, v0, method="L-BFGS-B",
                   options={"maxiter": int(max_iters), "ftol": tol, "gtol": 1e-12})
    out = program.with_vector(res.x) if res.fun < f0 else program.with_vector(v0)
    out.meta["fidelity_before"] = float(1.0 - f0)
    out.meta["fidelity_after"] = float(1.0 - min(res.fun, f0))
    out.meta["refined"] = 1
    return out


class GqspSynthesizer(BaseEstimator):
    """Estimator wrapper: complete a Laurent series and extract GQSP angles.

    ``fit`` accepts a :class:`~oqgqsp.fourier.FourierSeries` or a raw
    coefficient vector; ``predict`` evaluates the synthesized F at unit-circle
    points (or, with ``positions=True``, at positions x via z = e^{i pi x / L}).

    Parameters
    ----------
    L : float, default=8.0
    eta : float, default=1e-6
    refine : bool, default=False
        Refine against ``reference`` (vacuum when None) toward ``target``.
    max_iters : int, default=200
    """

    def __init__(self, L=8.0, eta=DEFAULT_ETA, refine=False, max_iters=200):
        self.L = L
        self.eta = eta
        self.refine = refine
        self.max_iters = max_iters

    def fit(self, X, y=None, target=None, reference=None):
        coeffs = getattr(X, "coeffs", X)
        L = getattr(X, "L", self.L)
        self.pair_ = complete(coeffs, eta=self.eta)
        prog = find_angles(self.pair_, L=L)
        if self.refine:
            if target is None:
                raise ValueError("refinement needs a target operator")
            if reference is None:
                reference = np.zeros(target.shape[0], dtype=complex)
                reference[0] = 1.0
            prog = refine_angles(prog, target, reference, self.max_iters)
        self.program_ = prog
        self.scale_ = self.pair_.scale
        self.residual_ = self.pair_.residual
        return self

    def predict(self, X, positions=False):
        check_is_fitted(self, "program_")
        x = np.asarray(X)
        if x.ndim == 2:
            x = x[:, 0]
        z = np.exp(1j * np.pi * x.astype(float) / self.program_.L) if positions else x
        return self.program_.F(z)
