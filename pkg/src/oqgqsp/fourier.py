"""Laurent/Fourier approximation of bosonic phase functions.

For a potential f the phase function is g(x) = exp(-i * dt * f(x) / hbar)
on [-L, L]. Since g(-L) != g(L) in general, the phase is first blended into
a smooth 2L-periodic function outside a core window (exact inside it), so
that the truncated series converges rapidly instead of ringing at the
period boundary. Oscillator states must live inside the core window for
the approximation to be meaningful; the default window is |x| <= 6.
"""

from dataclasses import dataclass, field
import io

import numpy as np
from scipy.special import erf
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_scalar
from .potentials import PotentialSpec, evaluate
from .units import HBAR_EV_FS


class ConvergenceError(RuntimeError):
    """Quadrature refinement did not converge."""


@dataclass(frozen=True)
class Periodization:
    """Smooth periodic continuation of the phase outside ``|x| <= core_fraction * L``.

    The blend weight w(s) = (1 + erf(beta (s - 1/2) / sqrt(s (1 - s)))) / 2
    is C-infinity with all derivatives vanishing at both ends of the buffer.
    """

    core_fraction: float = 0.75
    beta: float = 3.0

    def __post_init__(self):
        check_scalar(self.core_fraction, "core_fraction", min_val=0.0, max_val=1.0,
                     include_min=False, include_max=False)
        check_scalar(self.beta, "beta", min_val=0.0, include_min=False)


def _blend_weight(s, beta):
    s = np.clip(s, 1e-300, 1.0 - 1e-16)
    return 0.5 * (1.0 + erf(beta * (s - 0.5) / np.sqrt(s * (1.0 - s))))


class PhaseTarget:
    """The function g(x) = exp(i * phase(x)) approximated by a Fourier series.

    Parameters
    ----------
    potential : PotentialSpec
    delta_t : float
        Time step in fs.
    L : float
        Half-period.
    fraction : float
        Multiplies the phase; 0.5 gives the half series used by the
        heralded state-dependent gate.
    periodization : Periodization or None
        None disables the periodic blend (raw phase on [-L, L)).
    """

    def __init__(self, potential, delta_t, L, fraction=1.0, periodization=Periodization()):
        if not isinstance(potential, PotentialSpec):
            raise TypeError("potential must be a PotentialSpec")
        self.potential = potential
        self.delta_t = check_scalar(delta_t, "delta_t")
        self.L = check_scalar(L, "L", min_val=0.0, include_min=False)
        self.fraction = check_scalar(fraction, "fraction")
        self.periodization = periodization
        self._scale = -self.fraction * self.delta_t / HBAR_EV_FS
        if periodization is not None:
            self.core = periodization.core_fraction * self.L
            jump = self.raw_phase(-self.L) - self.raw_phase(self.L)
            self._winding = float(np.round(-jump / (2 * np.pi)))

    def raw_phase(self, x):
        """-fraction * dt * f(x) / hbar; accepts complex x for entire potentials."""
        return self._scale * evaluate(self.potential, x)

    def phase(self, x):
        """Real phase of the periodized target at real x (any real line point)."""
        x = np.asarray(x, dtype=float)
        L = self.L
        xr = (x + L) % (2 * L) - L
        if self.periodization is None:
            return self.raw_phase(xr)
        out = np.array(self.raw_phase(xr), dtype=float)
        # buffer spans (core, 2L - core) in the shifted coordinate u
        u = np.where(xr > self.core, xr, xr + 2 * L)
        buf = (xr > self.core) | (xr < -self.core)
        if np.any(buf):
            uu = u[buf]
            s = (uu - self.core) / (2 * L - 2 * self.core)
            w = _blend_weight(s, self.periodization.beta)
            left = self.raw_phase(uu)
            right = self.raw_phase(uu - 2 * L) + 2 * np.pi * self._winding
            out[buf] = left + w * (right - left)
        return out

    def __call__(self, x):
        return np.exp(1j * self.phase(x))

    def strip_sup(self, sigma, n_grid=2048):
        """max |exp(i * raw_phase(x +- i sigma))| over x in [-L, L]."""
        if not self.potential.is_entire:
            raise ValueError("strip bound needs an entire potential")
        x = np.linspace(-self.L, self.L, n_grid)
        vals = []
        for sgn in (1.0, -1.0):
            ph = self.raw_phase(x + 1j * sgn * sigma)
            vals.append(np.max(-np.imag(ph)))
        return float(np.exp(max(vals)))


class DirectTarget:
    """Wrap an already periodic callable g on [-L, L] as an approximation target."""

    def __init__(self, func, L):
        self.func = func
        self.L = check_scalar(L, "L", min_val=0.0, include_min=False)
        self.delta_t = 0.0
        self.potential = None

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=complex)


@dataclass
class FourierSeries:
    """Truncated Laurent series g_d(x) = sum_k c_k exp(i pi k x / L), |k| <= d."""

    L: float
    d: int
    coeffs: np.ndarray
    tail_bound: float = np.nan
    delta_t: float = 0.0
    source: object = None
    target: object = field(default=None, repr=False)
    analytic_bound: float = np.nan
    B: float = np.nan
    sigma: float = np.nan

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=complex)
        if self.coeffs.shape != (2 * self.d + 1,):
            raise ValueError(f"expected {2 * self.d + 1} coefficients, got {self.coeffs.shape}")

    @property
    def ks(self):
        return np.arange(-self.d, self.d + 1)

    def coefficient(self, k):
        return self.coeffs[k + self.d] if abs(k) <= self.d else 0.0

    def laurent(self, z):
        """Evaluate sum_k c_k z^k at points on (or near) the unit circle."""
        z = np.asarray(z, dtype=complex)
        # Horner in z with a z^-d prefactor
        acc = np.zeros(z.shape, dtype=complex)
        for c in self.coeffs[::-1]:
            acc = acc * z + c
        return acc * z ** (-self.d)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        return self.laurent(np.exp(1j * np.pi * x / self.L))

    def to_csv(self):
        buf = io.StringIO()
        buf.write(f"# L={float(self.L)!r}\n# d={self.d}\n# delta_t={float(self.delta_t)!r}\n")
        buf.write(f"# tail_bound={float(self.tail_bound)!r}\n")
        buf.write("k,re,im\n")
        for k, c in zip(self.ks, self.coeffs):
            buf.write(f"{k},{float(c.real)!r},{float(c.imag)!r}\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text):
        meta, rows = {}, []
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, val = line[1:].strip().partition("=")
                meta[key.strip()] = val.strip()
            elif line != "k,re,im":
                k, re, im = line.split(",")
                rows.append((int(k), float(re) + 1j * float(im)))
        try:
            d = int(meta["d"])
            L = float(meta["L"])
        except KeyError as exc:
            raise ValueError(f"series file lacks header field {exc.args[0]!r}") from None
        coeffs = np.zeros(2 * d + 1, dtype=complex)
        for k, c in rows:
            coeffs[k + d] = c
        return cls(L=L, d=d, coeffs=coeffs, tail_bound=float(meta.get("tail_bound", "nan")),
                   delta_t=float(meta.get("delta_t", "0")))


def _as_target(p, delta_t, L, fraction, periodization):
    if isinstance(p, PotentialSpec):
        return PhaseTarget(p, delta_t, L, fraction=fraction, periodization=periodization)
    if isinstance(p, (PhaseTarget, DirectTarget)):
        return p
    if callable(p):
        return DirectTarget(p, L)
    raise TypeError("expected a PotentialSpec, a target, or a callable")


def _dft_coefficients(target, L, d, n):
    x = -L + 2 * L * np.arange(n) / n
    spec = np.fft.fft(target(x)) / n
    ks = np.arange(-d, d + 1)
    # shift grid origin from 0 to -L
    return spec[ks % n] * np.exp(1j * np.pi * ks)


def fourier_coefficients(p, delta_t=0.0, L=8.0, d=39, *, fraction=1.0,
                         periodization=Periodization(), max_doublings=20, tol=1e-12,
                         certify=True, sigma=None):
    """Fourier coefficients c_{-d..d} of a phase target on [-L, L].

    ``p`` is a PotentialSpec (phase exp(-i fraction dt f / hbar)), a
    :class:`PhaseTarget`, or any periodic callable g. The uniform-grid
    quadrature starts at 16 (2d + 1) points and doubles until successive
    coefficient sets agree within ``tol``.
    """
    d = check_scalar(d, "d", min_val=0, integer=True)
    L = check_scalar(L, "L", min_val=0.0, include_min=False)
    target = _as_target(p, delta_t, L, fraction, periodization)
    n = 16 * (2 * d + 1)
    prev = _dft_coefficients(target, L, d, n)
    for _ in range(max_doublings):
        n *= 2
        cur = _dft_coefficients(target, L, d, n)
        if np.max(np.abs(cur - prev)) <= tol:
            break
        prev = cur
    else:
        raise ConvergenceError(f"coefficients did not settle within {max_doublings} doublings")
    series = FourierSeries(L=L, d=d, coeffs=cur, delta_t=getattr(target, "delta_t", 0.0),
                           source=getattr(target, "potential", None), target=target)
    if certify:
        certify_tail(series)
        if isinstance(target, PhaseTarget) and target.potential.is_entire:
            sig = L if sigma is None else sigma
            series.sigma = sig
            series.B = 1.25 * target.strip_sup(sig)
            series.analytic_bound = analytic_tail_bound(series.B, sig, L, d)
    return series


def analytic_tail_bound(B, sigma, L, d):
    rho = np.exp(np.pi * sigma / L)
    return float(2 * B * rho ** (-(d + 1)) / (1 - 1 / rho))


def select_degree(B, sigma, L, epsilon):
    """Smallest d with 2 B rho^-(d+1) / (1 - 1/rho) <= epsilon, rho = exp(pi sigma / L).

    Evaluated as ceil((L / (pi sigma)) ln(2B / ((1 - 1/rho) epsilon))).
    """
    B = check_scalar(B, "B", min_val=1.0)
    sigma = check_scalar(sigma, "sigma", min_val=0.0, include_min=False)
    L = check_scalar(L, "L", min_val=0.0, include_min=False)
    epsilon = check_scalar(epsilon, "epsilon", min_val=0.0, max_val=1.0,
                           include_min=False, include_max=False)
    rho = np.exp(np.pi * sigma / L)
    val = L / (np.pi * sigma) * np.log(2 * B / ((1 - 1 / rho) * epsilon))
    return max(0, int(np.ceil(val - 1e-12)))


def certify_tail(series, oversample=8):
    """Empirical sup |g - g_d| on an oversampled grid; stored in ``series.tail_bound``."""
    oversample = check_scalar(oversample, "oversample", min_val=1, integer=True)
    if series.target is None:
        raise ValueError("series carries no target to compare against")
    n = max(4096, oversample * (2 * series.d + 1))
    x = -series.L + 2 * series.L * np.arange(n) / n
    # include the core-window edges and endpoints explicitly
    x = np.concatenate([x, [series.L]])
    err = float(np.max(np.abs(series.target(x) - series(x))))
    series.tail_bound = err
    return err


def envelope_strip(target, L, d_ref=256, floor=1e-13):
    """Effective (B, sigma) with |c_k| <= B exp(-pi sigma |k| / L) for all computed k.

    The decay rate is a least-squares fit to the monotone envelope of the
    coefficient moduli above ``floor``; B is then the smallest constant
    making the geometric envelope hold at every computed k.
    """
    c = fourier_coefficients(target, L=L, d=d_ref, certify=False).coeffs
    mag = np.maximum(np.abs(c[d_ref:]), np.abs(c[d_ref::-1]))
    env = np.maximum.accumulate(mag[::-1])[::-1]
    keep = env > floor * env[0]
    k = np.arange(d_ref + 1)[keep]
    if k.size < 3:
        # effectively band-limited: any fast decay works
        return 1.0, L
    slope = np.polyfit(k, np.log(env[keep]), 1)[0]
    slope = min(slope, -1e-3)
    B = float(np.max(env[keep] * np.exp(-slope * k)))
    sigma = -slope * L / np.pi
    return max(B, 1.0), float(sigma)


def select_series(p, delta_t, L, epsilon, *, fraction=1.0, periodization=Periodization(),
                  max_degree=400):
    """Series at the degree selected from the envelope strip bound.

    The empirical error governs acceptance: if it exceeds ``epsilon`` at the
    formula degree, the degree is raised until it does not.
    """
    target = _as_target(p, delta_t, L, fraction, periodization)
    B, sigma = envelope_strip(target, L)
    d = select_degree(B, sigma, L, epsilon)
    formula_d = d
    if fourier_coefficients(target, L=L, d=0).tail_bound <= epsilon:
        d = 0  # constant target
    while True:
        series = fourier_coefficients(target, L=L, d=d)
        if series.tail_bound <= epsilon or d >= max_degree:
            break
        d += 1
    series.B, series.sigma = B, sigma
    series.analytic_bound = analytic_tail_bound(B, sigma, L, d)
    series.formula_degree = formula_d
    return series


class FourierPhaseApproximator(RegressorMixin, BaseEstimator):
    """Estimator wrapper: fit a truncated Fourier series to a phase target.

    ``fit`` ignores ``X`` beyond validation; ``predict`` evaluates g_d at the
    positions in the first column of ``X``.

    Parameters
    ----------
    potential : PotentialSpec
    delta_t : float, default=0.3
    L : float, default=8.0
    degree : int or None
        Fixed degree; None selects it from ``epsilon``.
    epsilon : float, default=1e-3
    fraction : float, default=1.0
    """

    def __init__(self, potential=None, delta_t=0.3, L=8.0, degree=None, epsilon=1e-3,
                 fraction=1.0):
        self.potential = potential
        self.delta_t = delta_t
        self.L = L
        self.degree = degree
        self.epsilon = epsilon
        self.fraction = fraction

    def fit(self, X=None, y=None):
        if self.potential is None:
            raise ValueError("potential must be set before fitting")
        if self.degree is None:
            self.series_ = select_series(self.potential, self.delta_t, self.L, self.epsilon,
                                         fraction=self.fraction)
        else:
            self.series_ = fourier_coefficients(self.potential, self.delta_t, self.L,
                                                self.degree, fraction=self.fraction)
        self.degree_ = self.series_.d
        self.coef_ = self.series_.coeffs
        self.tail_bound_ = self.series_.tail_bound
        return self

    def predict(self, X):
        check_is_fitted(self, "series_")
        x = np.asarray(X, dtype=float)
        if x.ndim == 2:
            x = x[:, 0]
        return self.series_(x)

    def score(self, X, y=None):
        """Negative sup error against the target at the given positions."""
        check_is_fitted(self, "series_")
        x = np.asarray(X, dtype=float)
        if x.ndim == 2:
            x = x[:, 0]
        ref = self.series_.target(x) if y is None else np.asarray(y)
        return -float(np.max(np.abs(ref - self.predict(x))))
