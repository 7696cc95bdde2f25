"""Command-line front end: approximate, synthesize, simulate, estimate.

Numeric settings come from an optional TOML config; flags override it.
Every output file starts with ``#`` provenance lines (tool version, config
hash, quantity) so reruns with the same config and seed are byte-identical.
"""

import argparse
import hashlib
import json
from pathlib import Path
import sys

import numpy as np
import tomli

from . import __version__
from .compiler import HeraldError
from .dynamics import (comparison_report, compare, compile_layer, evolve_compiled,
                       evolve_oracle, initial_state, plan)
from .fock import function_of_position, position_eigensystem, vacuum, wigner_csv, wigner_grid
from .fourier import ConvergenceError, fourier_coefficients, select_series
from .gqsp import (AngleFindingError, CompletionError, complete, find_angles, program_fidelity,
                   reconstruction_error, refine_angles)
from .potentials import DatasetError, evaluate, load_uracil_dataset, zero
from .resources import estimate, tradeoff_sweep, tradeoff_text, uniform_estimate
from .units import HBAR_EV_FS
from .vibronic import build_model

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3

DEFAULTS = {
    "dataset": None,
    "modes": ["nu21", "nu26"],
    "states": ["D1", "D3"],
    "initial": "D3",
    "displacement": {"nu21": -4.0},
    "mode": "nu26",
    "state": "D2",
    "potential": "dataset",
    "L": 8.0,
    "epsilon": 1e-2,
    "fourier_epsilon": 1e-3,
    "delta_t": 0.3,
    "degree": None,
    "fraction": 1.0,
    "t_total": 40.0,
    "p": 100,
    "dim": 30,
    "policy": "project",
    "oracle": "trotter",
    "refine": True,
    "max_iters": 200,
    "wigner": False,
    "wigner_extent": 5.0,
    "wigner_points": 41,
    "success": [0.9988, 0.9997],
    "one_minus_delta": None,
    "seed": 0,
    "output": "out",
}

ANCHORS = {
    "approximate": "truncated Fourier series of the phase exp(-i dt f(Q) / hbar)",
    "synthesize": "GQSP angles and reference-state gate fidelity",
    "simulate": "electronic populations, compiled circuit vs oracle",
    "estimate": "CD-gate counts and heralded shot overhead",
}


class ConfigError(ValueError):
    pass


def load_config(path):
    if path is None:
        return {}
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    with path.open("rb") as fh:
        doc = tomli.load(fh)
    unknown = set(doc) - set(DEFAULTS)
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    return doc


def resolve_config(args):
    cfg = dict(DEFAULTS)
    cfg.update(load_config(args.config))
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    _validate(cfg)
    return cfg


def _validate(cfg):
    def positive(key):
        if not (isinstance(cfg[key], (int, float)) and cfg[key] > 0):
            raise ConfigError(f"{key} must be positive, got {cfg[key]!r}")

    for key in ("L", "epsilon", "fourier_epsilon", "delta_t", "t_total", "wigner_extent"):
        positive(key)
    for key in ("p", "dim", "max_iters", "wigner_points"):
        if not isinstance(cfg[key], int) or cfg[key] < 1:
            raise ConfigError(f"{key} must be a positive integer, got {cfg[key]!r}")
    if cfg["dim"] < 2:
        raise ConfigError("dim must be at least 2")
    if not 0 < cfg["epsilon"] < 1:
        raise ConfigError("epsilon must lie in (0, 1)")
    if cfg["degree"] is not None and (not isinstance(cfg["degree"], int) or cfg["degree"] < 0):
        raise ConfigError("degree must be a nonnegative integer")
    if cfg["policy"] not in ("project", "sample"):
        raise ConfigError("policy must be 'project' or 'sample'")
    if cfg["oracle"] not in ("trotter", "exact"):
        raise ConfigError("oracle must be 'trotter' or 'exact'")
    if cfg["potential"] not in ("dataset", "zero"):
        raise ConfigError("potential must be 'dataset' or 'zero'")
    if cfg["fraction"] not in (0.5, 1.0):
        raise ConfigError("fraction must be 0.5 or 1.0")
    if cfg["dataset"] is not None and not Path(cfg["dataset"]).is_file():
        raise ConfigError(f"dataset file not found: {cfg['dataset']}")
    for s in cfg["success"]:
        if not 0 < s < 1:
            raise ConfigError("success values must lie in (0, 1)")


def config_hash(cfg):
    """Hash of every setting that can change results (the output directory cannot)."""
    doc = {k: v for k, v in cfg.items() if k != "output"}
    return hashlib.sha256(json.dumps(doc, sort_keys=True).encode()).hexdigest()[:16]


class Writer:
    def __init__(self, cfg, command):
        self.dir = Path(cfg["output"])
        self.dir.mkdir(parents=True, exist_ok=True)
        self.header = (f"# oqgqsp {__version__}\n# config {config_hash(cfg)}\n"
                       f"# quantity {ANCHORS[command]}\n")
        self.written = []

    def write(self, name, text):
        path = self.dir / name
        path.write_text(self.header + text)
        self.written.append(path)
        return path


def _dataset(cfg):
    return load_uracil_dataset(cfg["dataset"])


def _potential(cfg, ds):
    if cfg["potential"] == "zero":
        return zero()
    return ds.diagonal_terms(cfg["mode"], cfg["state"])


def _series(cfg, f):
    if cfg["degree"] is None:
        return select_series(f, cfg["delta_t"], cfg["L"], cfg["fourier_epsilon"],
                             fraction=cfg["fraction"])
    return fourier_coefficients(f, cfg["delta_t"], cfg["L"], cfg["degree"],
                                fraction=cfg["fraction"])


def _degree_report(s):
    return (f"d {s.d}\nL {float(s.L)!r}\ndelta_t {float(s.delta_t)!r}\n"
            f"empirical_sup_error {s.tail_bound:.6e}\n"
            f"analytic_bound {s.analytic_bound:.6e}\n"
            f"formula_degree {getattr(s, 'formula_degree', s.d)}\n")


def cmd_approximate(cfg, out):
    ds = _dataset(cfg)
    f = _potential(cfg, ds)
    s = _series(cfg, f)
    stem = "zero" if cfg["potential"] == "zero" else f"{cfg['mode']}_{cfg['state']}"
    out.write(f"series_{stem}.csv", s.to_csv())
    out.write(f"degree_{stem}.txt", _degree_report(s))
    print(f"{stem}: d = {s.d}, sup error {s.tail_bound:.3e}")


def _haar_state(dim, rng):
    v = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return v / np.linalg.norm(v)


def _applied(program, ref):
    x, V = position_eigensystem(ref.size)
    return V @ (program.F(np.exp(1j * np.pi * x / program.L)) * (V.T @ ref))


def cmd_synthesize(cfg, out):
    ds = _dataset(cfg)
    f = _potential(cfg, ds)
    s = _series(cfg, f)
    pair = complete(s.coeffs)
    prog = find_angles(pair, L=s.L)
    dim = cfg["dim"]
    frac = cfg["fraction"]
    target = function_of_position(
        dim, lambda x: np.exp(-1j * frac * cfg["delta_t"] * evaluate(f, x) / HBAR_EV_FS))
    ref = vacuum(dim)
    haar = _haar_state(dim, np.random.default_rng(cfg["seed"]))
    fid_vac = program_fidelity(prog, target, ref)
    fid_haar = program_fidelity(prog, target, haar)
    lines = [
        f"d {prog.d}",
        f"scale {float(pair.scale)!r}",
        f"completion_residual {pair.residual:.3e}",
        f"reconstruction_error {reconstruction_error(prog, pair.F):.3e}",
        f"fourier_sup_error {s.tail_bound:.3e}",
        f"fidelity_vacuum_unrefined {fid_vac:.4f}",
        f"fidelity_haar_unrefined {fid_haar:.4f}",
    ]
    if cfg["refine"]:
        prog = refine_angles(prog, target, ref, cfg["max_iters"])
        lines.append(f"fidelity_vacuum_refined {prog.meta['fidelity_after']:.6f}")
        lines.append(f"fidelity_haar_refined {program_fidelity(prog, target, haar):.4f}")
    out.write("program.toml", prog.dumps())
    out.write("synthesis.txt", "\n".join(lines) + "\n")
    if cfg["wigner"]:
        grid = np.linspace(-cfg["wigner_extent"], cfg["wigner_extent"], cfg["wigner_points"])
        for name, psi in (("target", target @ ref), ("synthesized", _applied(prog, ref))):
            psi = psi / np.linalg.norm(psi)  # heralded conditional state
            out.write(f"wigner_{name}.csv", wigner_csv(wigner_grid(psi, grid, grid), grid, grid))
    print("\n".join(lines))


def _model(cfg):
    return build_model(_dataset(cfg), cfg["modes"], cfg["states"])


def cmd_simulate(cfg, out):
    model = _model(cfg)
    if cfg["initial"] not in model.states:
        raise ConfigError(f"initial state {cfg['initial']} is not among {list(model.states)}")
    pl = plan(model, cfg["t_total"], cfg["epsilon"], cfg["dim"], p=cfg["p"])
    psi0 = initial_state(model, cfg["dim"], cfg["initial"], cfg["displacement"])
    layer = compile_layer(model, pl.dt, L=cfg["L"], fourier_epsilon=cfg["fourier_epsilon"],
                          degree=cfg["degree"], policy=cfg["policy"])
    compiled = evolve_compiled(model, pl, psi0, cfg["dim"], policy=cfg["policy"],
                               seed=cfg["seed"], layer=layer)
    oracle = evolve_oracle(model, pl, psi0, cfg["dim"], flavor=cfg["oracle"])
    rep = compare(compiled, oracle)
    out.write("populations_compiled.csv", compiled.to_csv())
    out.write("populations_oracle.csv", oracle.to_csv())
    degrees = ", ".join(f"{model.states[n]}/{model.modes[r].label}: {d}"
                        for (n, r), d in sorted(compiled.meta["degrees"].items()))
    text = (model.summary(cfg["dim"])
            + f"p = {pl.p}, dt = {pl.dt!r} fs\n"
            + f"degrees: {degrees or 'none'}\n"
            + f"CD gates per layer: {compiled.meta['cd_per_layer']}\n"
            + f"cumulative herald probability: {compiled.herald[-1]:.6f}\n"
            + comparison_report(rep, "compiled", cfg["oracle"]))
    out.write("comparison.txt", text)
    print(text, end="")


def cmd_estimate(cfg, out):
    ds = _dataset(cfg)
    model = build_model(ds, cfg["modes"], cfg["states"])
    pl = plan(model, cfg["t_total"], cfg["epsilon"], cfg["dim"], p=cfg["p"])
    layer = None
    degrees = {}
    if model.M_prime:
        layer = compile_layer(model, pl.dt, L=cfg["L"], fourier_epsilon=cfg["fourier_epsilon"],
                              degree=cfg["degree"])
        degrees = {k: prog.d for k, prog in layer.programs.items()}
    omd = cfg["one_minus_delta"]
    if omd is None:
        omd = 1.0 - 2.0 * cfg["fourier_epsilon"] if model.M_prime else 1.0
    rep = estimate(model, pl.p, degrees, omd)
    text = model.summary() + rep.to_text()
    rows = tradeoff_sweep(model, pl.dt, pl.p, cfg["success"], L=cfg["L"])
    lines = []
    for s in cfg["success"]:
        u = uniform_estimate(model.N, model.M_prime, pl.p, s)
        lines.append(f"1-delta {s}: exponent {u['exponent']}, shot factor {u['shot_factor']:.4f}")
    text += "\n" + "\n".join(lines) + "\n\n" + tradeoff_text(rows)
    out.write("resources.txt", text)
    out.write("resources.csv", rep.to_csv())
    print(text, end="")


COMMANDS = {
    "approximate": cmd_approximate,
    "synthesize": cmd_synthesize,
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
}


def _csv_list(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def build_parser():
    parser = argparse.ArgumentParser(prog="oqgqsp", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"oqgqsp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name, help=ANCHORS[name])
        sp.add_argument("--config", help="TOML config file")
        sp.add_argument("--output", help="output directory")
        sp.add_argument("--dataset", help="dataset TOML (default: packaged uracil data)")
        sp.add_argument("--seed", type=int)
        sp.add_argument("--dim", type=int, help="Fock truncation")
        sp.add_argument("--L", type=float, help="half-period of the Fourier series")
        sp.add_argument("--degree", type=int, help="fixed Fourier degree")
        sp.add_argument("--fourier-epsilon", dest="fourier_epsilon", type=float)
        if name in ("approximate", "synthesize"):
            sp.add_argument("--mode")
            sp.add_argument("--state")
            sp.add_argument("--potential", choices=["dataset", "zero"])
            sp.add_argument("--delta-t", dest="delta_t", type=float, help="time step (fs)")
            sp.add_argument("--fraction", type=float, choices=[0.5, 1.0])
        if name == "synthesize":
            sp.add_argument("--refine", action=argparse.BooleanOptionalAction, default=None)
            sp.add_argument("--max-iters", dest="max_iters", type=int)
            sp.add_argument("--wigner", action=argparse.BooleanOptionalAction, default=None)
        if name in ("simulate", "estimate"):
            sp.add_argument("--modes", type=_csv_list)
            sp.add_argument("--states", type=_csv_list)
            sp.add_argument("--t-total", dest="t_total", type=float, help="total time (fs)")
            sp.add_argument("--p", type=int, help="Trotter layers")
            sp.add_argument("--epsilon", type=float, help="total error budget")
        if name == "simulate":
            sp.add_argument("--initial")
            sp.add_argument("--policy", choices=["project", "sample"])
            sp.add_argument("--oracle", choices=["trotter", "exact"])
        if name == "estimate":
            sp.add_argument("--one-minus-delta", dest="one_minus_delta", type=float)
            sp.add_argument("--success", type=lambda t: [float(v) for v in _csv_list(t)])
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
        out = Writer(cfg, args.command)
        COMMANDS[args.command](cfg, out)
    except (ConfigError, DatasetError, FileNotFoundError, KeyError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (CompletionError, AngleFindingError, ConvergenceError, HeraldError,
            FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
