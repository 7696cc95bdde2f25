"""Single-mode potential families and the uracil-cation parameter set.

Potentials are functions of the dimensionless coordinate Q returning eV.
All analytic kinds are entire, so :func:`evaluate` also accepts complex
arguments (needed for strip bounds in :mod:`oqgqsp.fourier`).
"""

from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from types import MappingProxyType

import numpy as np
from scipy.interpolate import CubicSpline
import tomli
import tomli_w

KINDS = ("constant", "linear", "quadratic", "quartic", "morse", "tabulated", "sum")
ANHARMONIC_KINDS = ("quartic", "morse", "tabulated")
FORBIDDEN_PAIRS = frozenset({(0, 3), (2, 3)})

_REQUIRED = {
    "constant": ("value",),
    "linear": ("kappa",),
    "quadratic": ("gamma",),
    "quartic": ("k",),
    "morse": ("d0", "a", "q0", "e0"),
}


@dataclass(frozen=True)
class PotentialSpec:
    """One analytic potential term, or a sum of terms.

    ``quadratic`` uses the 1/2 gamma Q^2 convention and ``quartic`` the
    (1/24) k Q^4 convention. ``tabulated`` carries sample arrays ``x``, ``y``.
    """

    kind: str
    params: dict = field(default_factory=dict)
    terms: tuple = ()
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown potential kind {self.kind!r}; expected one of {KINDS}")
        params = dict(self.params)
        for name in _REQUIRED.get(self.kind, ()):
            if name not in params:
                raise ValueError(f"{self.kind} potential requires parameter {name!r}")
            params[name] = float(params[name])
            if not np.isfinite(params[name]):
                raise ValueError(f"parameter {name!r} must be finite")
        if self.kind == "morse" and params["d0"] <= 0:
            raise ValueError(f"Morse depth d0 must be positive, got {params['d0']}")
        if self.kind == "tabulated":
            x = np.asarray(params.get("x"), dtype=float)
            y = np.asarray(params.get("y"), dtype=float)
            if x.ndim != 1 or x.shape != y.shape or x.size < 4:
                raise ValueError("tabulated potential needs matching 1-D x, y with >= 4 points")
            if np.any(np.diff(x) <= 0):
                raise ValueError("tabulated abscissae must be strictly increasing")
            params["x"], params["y"] = x, y
            params["_spline"] = CubicSpline(x, y)
        if self.kind == "sum":
            for t in self.terms:
                if not isinstance(t, PotentialSpec):
                    raise TypeError("sum terms must be PotentialSpec instances")
        object.__setattr__(self, "params", MappingProxyType(params))

    def __reduce__(self):
        params = {k: v for k, v in self.params.items() if not k.startswith("_")}
        return (PotentialSpec, (self.kind, params, self.terms, self.label))

    @property
    def is_anharmonic(self):
        if self.kind == "sum":
            return any(t.is_anharmonic for t in self.terms)
        return self.kind in ANHARMONIC_KINDS

    @property
    def is_entire(self):
        if self.kind == "sum":
            return all(t.is_entire for t in self.terms)
        return self.kind != "tabulated"

    def __call__(self, x):
        return evaluate(self, x)


def constant(value, label=""):
    return PotentialSpec("constant", {"value": value}, label=label)


def linear(kappa, label=""):
    return PotentialSpec("linear", {"kappa": kappa}, label=label)


def quadratic(gamma, label=""):
    return PotentialSpec("quadratic", {"gamma": gamma}, label=label)


def quartic(k, label=""):
    return PotentialSpec("quartic", {"k": k}, label=label)


def morse(d0, a, q0, e0, label=""):
    return PotentialSpec("morse", {"d0": d0, "a": a, "q0": q0, "e0": e0}, label=label)


def tabulated(x, y, label=""):
    return PotentialSpec("tabulated", {"x": x, "y": y}, label=label)


def sum_of(*terms, label=""):
    return PotentialSpec("sum", terms=tuple(terms), label=label)


def zero():
    return sum_of(label="zero")


def evaluate(p, x):
    """Value of potential ``p`` at ``x`` (scalar or array, real or complex)."""
    x = np.asarray(x)
    if not np.all(np.isfinite(x)):
        raise ValueError("potential argument must be finite")
    kind, q = p.kind, p.params
    if kind == "constant":
        return np.full(x.shape, q["value"], dtype=np.result_type(x, float))
    if kind == "linear":
        return q["kappa"] * x
    if kind == "quadratic":
        return 0.5 * q["gamma"] * x**2
    if kind == "quartic":
        return q["k"] * x**4 / 24.0
    if kind == "morse":
        return q["d0"] * (np.exp(q["a"] * (x - q["q0"])) - 1.0) ** 2 + q["e0"]
    if kind == "tabulated":
        if np.iscomplexobj(x):
            raise TypeError("tabulated potentials cannot be continued to complex arguments")
        xs = q["x"]
        if np.any(x < xs[0]) or np.any(x > xs[-1]):
            raise ValueError(f"argument outside tabulated range [{xs[0]}, {xs[-1]}]")
        return q["_spline"](x)
    total = np.zeros(x.shape, dtype=np.result_type(x, float))
    for t in p.terms:
        total = total + evaluate(t, x)
    return total


def morse_taylor2(p):
    """Second-order Taylor expansion of a Morse potential about its minimum q0."""
    if p.kind != "morse":
        raise ValueError("morse_taylor2 needs a Morse potential")
    d0, a, q0, e0 = (p.params[k] for k in ("d0", "a", "q0", "e0"))
    curv = 2.0 * d0 * a * a
    # e0 + curv/2 (Q - q0)^2 written in monomials
    return sum_of(
        constant(e0 + 0.5 * curv * q0 * q0),
        linear(-curv * q0),
        quadratic(curv),
        label=f"{p.label} taylor2".strip(),
    )


# ---------------------------------------------------------------------------
# dataset


@dataclass(frozen=True)
class ModeParameters:
    label: str
    omega_cm: float
    kind: str
    kappa: tuple = ()
    gamma: tuple = ()
    k: tuple = ()
    morse: tuple = ()  # per state: (d0, a, q0, e0)
    couplings: MappingProxyType = field(default_factory=lambda: MappingProxyType({}))


@dataclass(frozen=True)
class UracilDataset:
    """Vibronic model parameters; states indexed 0..N-1 in file order."""

    name: str
    states: tuple
    modes: MappingProxyType
    energies: tuple
    comments: str = ""

    @property
    def n_states(self):
        return len(self.states)

    @property
    def mode_labels(self):
        return tuple(self.modes)

    @property
    def anharmonic_modes(self):
        return tuple(m for m, p in self.modes.items() if p.kind in ANHARMONIC_KINDS)

    def state_index(self, label):
        if isinstance(label, (int, np.integer)):
            if not 0 <= label < self.n_states:
                raise KeyError(f"state index {label} out of range")
            return int(label)
        try:
            return self.states.index(label)
        except ValueError:
            raise KeyError(f"unknown state {label!r}; known: {self.states}") from None

    def mode(self, label):
        try:
            return self.modes[label]
        except KeyError:
            raise KeyError(f"unknown mode {label!r}; known: {tuple(self.modes)}") from None

    def diagonal_terms(self, mode, state):
        """Potential terms of mode ``mode`` on state ``state``, as tabulated.

        Harmonic reference handling is left to the vibronic model.
        """
        p = self.mode(mode)
        n = self.state_index(state)
        tag = f"{mode}/{self.states[n]}"
        if p.kind == "qvc":
            return sum_of(linear(p.kappa[n]), quadratic(p.gamma[n]), label=tag)
        if p.kind == "quartic":
            return quartic(p.k[n], label=tag)
        return morse(*p.morse[n], label=tag)

    def coupling(self, mode, n, m):
        n, m = sorted((self.state_index(n), self.state_index(m)))
        return self.mode(mode).couplings.get((n, m), 0.0)


class DatasetError(ValueError):
    """Schema or invariant violation in a parameter file."""


def _floats(raw, n, what):
    if not isinstance(raw, list) or len(raw) != n:
        raise DatasetError(f"{what}: expected a list of {n} numbers")
    try:
        vals = tuple(float(v) for v in raw)
    except (TypeError, ValueError):
        raise DatasetError(f"{what}: entries must be numbers") from None
    if not all(np.isfinite(vals)):
        raise DatasetError(f"{what}: entries must be finite")
    return vals


def _parse_pair(key, n_states, where):
    try:
        a, b = (int(s) for s in key.split("-"))
    except ValueError:
        raise DatasetError(f"{where}: coupling key {key!r} must look like 'n-m'") from None
    if not (0 <= a < b < n_states):
        raise DatasetError(f"{where}: coupling pair {key!r} must satisfy 0 <= n < m < {n_states}")
    if (a, b) in FORBIDDEN_PAIRS:
        raise DatasetError(f"{where}: coupling {key!r} is forbidden by the model's symmetry")
    return a, b


def dataset_from_dict(doc):
    try:
        states = tuple(str(s) for s in doc["states"])
        raw_modes = doc["modes"]
    except KeyError as exc:
        raise DatasetError(f"missing top-level key {exc.args[0]!r}") from None
    n = len(states)
    if n < 1 or len(set(states)) != n:
        raise DatasetError("states must be a non-empty list of unique labels")
    energies = _floats(doc.get("energies", {}).get("E", [0.0] * n), n, "energies.E")
    modes = {}
    for label, entry in raw_modes.items():
        where = f"modes.{label}"
        try:
            omega = float(entry["omega_cm"])
            kind = entry["kind"]
        except KeyError as exc:
            raise DatasetError(f"{where}: missing {exc.args[0]!r}") from None
        if not omega > 0:
            raise DatasetError(f"{where}: omega_cm must be positive")
        fields = {}
        if kind == "qvc":
            fields["kappa"] = _floats(entry.get("kappa"), n, f"{where}.kappa")
            fields["gamma"] = _floats(entry.get("gamma", [0.0] * n), n, f"{where}.gamma")
        elif kind == "quartic":
            fields["k"] = _floats(entry.get("k"), n, f"{where}.k")
        elif kind == "morse":
            block = entry.get("morse")
            if not isinstance(block, dict):
                raise DatasetError(f"{where}: missing [morse] table")
            cols = [_floats(block.get(c), n, f"{where}.morse.{c}") for c in ("d0", "a", "q0", "e0")]
            if any(d <= 0 for d in cols[0]):
                raise DatasetError(f"{where}: Morse depth d0 must be positive")
            fields["morse"] = tuple(zip(*cols))
        else:
            raise DatasetError(f"{where}: unknown kind {kind!r}")
        couplings = {}
        for key, val in entry.get("couplings", {}).items():
            couplings[_parse_pair(key, n, where)] = float(val)
        modes[label] = ModeParameters(
            label, omega, kind, couplings=MappingProxyType(couplings), **fields
        )
    return UracilDataset(
        name=str(doc.get("name", "")),
        states=states,
        modes=MappingProxyType(modes),
        energies=energies,
        comments=str(doc.get("comments", "")),
    )


def dataset_to_dict(ds):
    doc = {"name": ds.name, "states": list(ds.states), "comments": ds.comments}
    if any(ds.energies):
        doc["energies"] = {"E": list(ds.energies)}
    modes = {}
    for label, p in ds.modes.items():
        entry = {"omega_cm": p.omega_cm, "kind": p.kind}
        if p.kind == "qvc":
            entry["kappa"] = list(p.kappa)
            entry["gamma"] = list(p.gamma)
        elif p.kind == "quartic":
            entry["k"] = list(p.k)
        else:
            cols = list(zip(*p.morse))
            entry["morse"] = {c: list(v) for c, v in zip(("d0", "a", "q0", "e0"), cols)}
        if p.couplings:
            entry["couplings"] = {f"{a}-{b}": v for (a, b), v in p.couplings.items()}
        modes[label] = entry
    doc["modes"] = modes
    return doc


def default_dataset_path():
    return resources.files("oqgqsp") / "data" / "uracil_cation.toml"


def load_uracil_dataset(path=None):
    """Read and validate a parameter file (the shipped one by default)."""
    src = default_dataset_path() if path is None else Path(path)
    try:
        with src.open("rb") as fh:
            doc = tomli.load(fh)
    except FileNotFoundError:
        raise FileNotFoundError(f"dataset file not found: {src}") from None
    except tomli.TOMLDecodeError as exc:
        raise DatasetError(f"{src}: {exc}") from None
    return dataset_from_dict(doc)


def dumps_dataset(ds):
    return tomli_w.dumps(dataset_to_dict(ds))


def save_dataset(ds, path):
    Path(path).write_text(dumps_dataset(ds))
