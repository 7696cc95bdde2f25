"""Closed-form resource accounting for compiled vibronic dynamics.

Counting conventions (per Trotter layer, matching :func:`compile_layer`):

- anharmonic (n, r) pair: one heralded state-dependent gate, i.e. two
  OQ-GQSP sequences of 4 d CD gates each (8 d) and two heralded measurements;
- nonzero linear term kappa Q: 2 CD gates;
- nonzero quadratic term gamma Q^2 / 2: 2 CQ gates (counted separately);
- coupled (n, m, r): 2 CD gates;
- one phase-space rotation R per mode.

The qubit count is N + 2: the unary register, the herald and the helper
used by the signal operators.
"""

from dataclasses import dataclass, field
import io
import math

import numpy as np

from .fourier import select_series
from ._validation import check_scalar


def shot_factor(one_minus_delta, n_measurements):
    """1 / (1 - delta)^n for a uniform per-measurement success probability."""
    one_minus_delta = check_scalar(one_minus_delta, "one_minus_delta", min_val=0.0, max_val=1.0,
                                   include_min=False)
    return float(np.exp(-n_measurements * np.log(one_minus_delta)))


def _leaves(f):
    if f.kind != "sum":
        return [f]
    return [leaf for t in f.terms for leaf in _leaves(t)]


@dataclass
class ResourceReport:
    N: int
    M: int
    M_prime: int
    p: int
    degrees: dict  # (n, r) -> d
    cd_diagonal: int  # per layer
    cd_offdiagonal: int  # per layer
    cq_per_layer: int
    r_per_layer: int
    measurements_per_layer: int
    one_minus_delta: float
    meta: dict = field(default_factory=dict)

    @property
    def cd_per_layer(self):
        return self.cd_diagonal + self.cd_offdiagonal

    @property
    def cd_total(self):
        return self.cd_per_layer * self.p

    @property
    def n_measurements(self):
        return self.measurements_per_layer * self.p

    @property
    def success_probability(self):
        return 1.0 / shot_factor(self.one_minus_delta, self.n_measurements)

    @property
    def shot_factor(self):
        return shot_factor(self.one_minus_delta, self.n_measurements)

    @property
    def n_qubits(self):
        return self.N + 2

    @property
    def n_oscillators(self):
        return self.M

    def rows(self):
        return [
            ("N", self.N), ("M", self.M), ("M'", self.M_prime), ("p", self.p),
            ("max d", max(self.degrees.values(), default=0)),
            ("CD per layer (diagonal)", self.cd_diagonal),
            ("CD per layer (off-diagonal)", self.cd_offdiagonal),
            ("CD total", self.cd_total),
            ("CQ per layer", self.cq_per_layer),
            ("R per layer", self.r_per_layer),
            ("heralded measurements", self.n_measurements),
            ("1 - delta", self.one_minus_delta),
            ("success probability", self.success_probability),
            ("shot factor", self.shot_factor),
            ("qubits", self.n_qubits),
            ("oscillators", self.n_oscillators),
        ]

    def to_text(self):
        rows = self.rows()
        width = max(len(k) for k, _ in rows)
        return "".join(f"{k:<{width}}  {_fmt(v)}\n" for k, v in rows)

    def to_csv(self):
        buf = io.StringIO()
        buf.write("quantity,value\n")
        for k, v in self.rows():
            buf.write(f"{k},{_fmt(v)}\n")
        return buf.getvalue()


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def anharmonic_pairs(model):
    return [(n, r) for r, mode in enumerate(model.modes)
            for n, f in enumerate(mode.diag) if f.is_anharmonic]


def estimate(model, p, degrees, one_minus_delta=1.0):
    """Exact per-layer gate counts and heralding overhead.

    ``degrees`` is a dict {(n, r): d} covering every anharmonic pair, or a
    single integer used for all of them. ``one_minus_delta`` is the uniform
    per-measurement success probability.
    """
    p = check_scalar(p, "p", min_val=1, integer=True)
    pairs = anharmonic_pairs(model)
    if isinstance(degrees, (int, np.integer)):
        degrees = {k: int(degrees) for k in pairs}
    missing = [k for k in pairs if k not in degrees]
    if missing:
        raise ValueError(f"no degree given for anharmonic pairs {missing}")
    cd_diag = sum(8 * degrees[k] for k in pairs)
    cq = 0
    for r, mode in enumerate(model.modes):
        for n, f in enumerate(mode.diag):
            if f.is_anharmonic:
                continue
            for t in _leaves(f):
                if t.kind == "linear" and t.params["kappa"]:
                    cd_diag += 2
                elif t.kind == "quadratic" and t.params["gamma"]:
                    cq += 2
    return ResourceReport(
        N=model.N, M=model.M, M_prime=model.M_prime, p=p,
        degrees={k: int(degrees[k]) for k in pairs},
        cd_diagonal=cd_diag, cd_offdiagonal=2 * len(model.coupled_terms),
        cq_per_layer=cq, r_per_layer=model.M,
        measurements_per_layer=2 * len(pairs),
        one_minus_delta=float(one_minus_delta),
    )


def uniform_estimate(N, M_prime, p, one_minus_delta):
    """Success probability and shot factor from (1 - delta)^(2 M' N p) alone."""
    n = 2 * M_prime * N * p
    sf = shot_factor(one_minus_delta, n)
    return {"exponent": n, "success_probability": 1.0 / sf, "shot_factor": sf}


def degree_for_delta(model, dt, delta, *, L=8.0, epsilon_per_delta=0.5, max_degree=400):
    """Largest half-series degree over anharmonic pairs at epsilon = epsilon_per_delta * delta.

    A half series with sup-error eps has |F| >= 1 - eps, so the herald failure
    probability is at most about 2 eps; the default relation inverts that.
    """
    eps = epsilon_per_delta * delta
    ds = [select_series(model.modes[r].diag[n], dt, L, eps, fraction=0.5,
                        max_degree=max_degree).d
          for n, r in anharmonic_pairs(model)]
    return max(ds, default=0)


@dataclass
class TradeoffRow:
    one_minus_delta: float
    epsilon: float
    degree: int
    shot_factor: float


def tradeoff_sweep(model, dt, p, success_values, *, L=8.0, epsilon_per_delta=0.5,
                   exponent=None):
    """Degree needed and shot factor for each per-measurement success target."""
    n = 2 * model.M_prime * model.N * p if exponent is None else exponent
    rows = []
    for s in sorted(success_values):
        s = check_scalar(s, "success", min_val=0.0, max_val=1.0,
                         include_min=False, include_max=False)
        delta = 1.0 - s
        d = degree_for_delta(model, dt, delta, L=L, epsilon_per_delta=epsilon_per_delta)
        rows.append(TradeoffRow(s, epsilon_per_delta * delta, d, shot_factor(s, n)))
    return rows


def tradeoff_text(rows, anchors=None):
    """Aligned table; ``anchors`` maps success values to reference (degree, shot factor)."""
    anchors = anchors or {}
    out = ["1-delta    epsilon     degree  shot_factor  reference"]
    for row in rows:
        ref = anchors.get(row.one_minus_delta)
        note = "" if ref is None else f"d={ref[0]} shots={ref[1]}"
        out.append(f"{row.one_minus_delta:<10.6g} {row.epsilon:<11.4g} {row.degree:<7d} "
                   f"{row.shot_factor:<12.6g} {note}".rstrip())
    return "\n".join(out) + "\n"


def asymptotic_ratios(report):
    """Counts over the asymptotic forms N M' d and N^2 M (bounded over sweeps)."""
    d = max(report.degrees.values(), default=0)
    diag = report.cd_diagonal / (report.N * report.M_prime * d) if report.M_prime and d else math.nan
    off = report.cd_offdiagonal / (report.N**2 * report.M)
    return diag, off
