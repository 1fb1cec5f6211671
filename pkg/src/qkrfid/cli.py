"""Batch command line: deterministic CSV outputs for every figure and table.

Subcommands
-----------
portrait      phase-space clouds of the pseudo-classical map and pendulum flow
fidelity      exact single-rotor fidelity trace
ensemble      exact ensemble fidelity trace (Riemann sum over quasi-momenta)
pendulum      exact quantum-pendulum fidelity trace
perturbative  perturbative fidelity trace (single rotor or ensemble)
spectrum      WKB / exact / perturbative energy table
scaling       time-rescaling fit of an ensemble family
validity      validity-bound scan over detunings

Configuration is plain ``key=value`` text (``#`` comments) given with
``--config``; command-line flags override file entries.  Every run writes
a ``<out>.meta`` sidecar echoing the resolved configuration plus a SHA-256
content hash per output file.  Exit codes: 0 ok, 2 configuration error,
3 numerical guard tripped.
"""

from __future__ import annotations

import argparse
import hashlib
import math
import sys

import numpy as np

from . import analysis, evolution, pendulum, perturbative, pseudoclassical
from .errors import NumericalGuardError, ParameterError
from .params import EnsembleSpec, derive_params
from .trace import FidelityTrace

DEFAULTS = {
    "basis_size": 4096,
    "smoothing_window": 100,
    "n_beta": 3000,
    "initial_state": "0",
    "order": 4,
    "n_lo": -pendulum.DEFAULT_WINDOW_HALF_WIDTH,
    "n_hi": pendulum.DEFAULT_WINDOW_HALF_WIDTH,
}


def _read_config(path: str) -> dict:
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ParameterError(f"{path}:{lineno}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def _resolve(args: argparse.Namespace, schema: dict) -> dict:
    """Merge built-in defaults, config file, and explicit flags."""
    config = _read_config(args.config) if getattr(args, "config", None) else {}
    for key in config:
        if key not in schema:
            raise ParameterError(f"unknown config key {key!r}")
    resolved = {}
    for key, (cast, default, required) in schema.items():
        flag_value = getattr(args, key, None)
        if flag_value is not None:
            resolved[key] = flag_value
        elif key in config:
            try:
                resolved[key] = cast(config[key])
            except ValueError as exc:
                raise ParameterError(f"config key {key}={config[key]!r}: {exc}") from None
        elif default is not None:
            resolved[key] = default
        elif required:
            raise ParameterError(f"missing required parameter {key!r}")
        else:
            resolved[key] = None
    return resolved


def _parse_initial_state(spec: str, basis_size: int, beta: float) -> evolution.MomentumState:
    spec = spec.strip()
    if ":" not in spec:
        return evolution.momentum_eigenstate(int(spec), basis_size, beta)
    entries = {}
    for item in spec.split(","):
        n_str, amp_str = item.split(":", 1)
        entries[int(n_str)] = complex(amp_str)
    return evolution.state_from_amplitudes(entries, basis_size, beta)


def _parse_float_list(text: str) -> list:
    return [float(x) for x in text.split(",") if x.strip()]


def _sha256(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            digest.update(block)
    return digest.hexdigest()


def _write_meta(out_prefix: str, command: str, resolved: dict, outputs: list) -> None:
    lines = [f"command={command}"]
    for key in sorted(resolved):
        lines.append(f"{key}={resolved[key]}")
    for path in outputs:
        lines.append(f"sha256:{path}={_sha256(path)}")
    with open(f"{out_prefix}.meta", "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _maybe_smooth(trace: FidelityTrace, window: int) -> FidelityTrace:
    return analysis.moving_average(trace, window) if window > 0 else trace


def _trace_outputs(trace: FidelityTrace, cfg: dict, command: str) -> list:
    trace = _maybe_smooth(trace, cfg["smoothing_window"])
    path = f"{cfg['out']}.csv"
    trace.to_csv(path)
    return [path]


# ---------------------------------------------------------------- commands

def _cmd_portrait(cfg: dict) -> list:
    params = derive_params(cfg["k"], cfg["epsilon"], cfg["beta"])
    lo, hi, count = cfg["seed_i"].split(":")
    seeds = [
        pseudoclassical.PhasePoint(I=float(i_val), theta=cfg["seed_theta"])
        for i_val in np.linspace(float(lo), float(hi), int(count))
    ]
    portrait = pseudoclassical.phase_portrait(params, seeds, cfg["steps"])
    paths = [f"{cfg['out']}_map.csv", f"{cfg['out']}_pendulum.csv"]
    portrait.to_csv(*paths)
    return paths


def _cmd_fidelity(cfg: dict) -> list:
    p1 = derive_params(cfg["k1"], cfg["epsilon"], cfg["beta"])
    p2 = derive_params(cfg["k2"], cfg["epsilon"], cfg["beta"])
    psi0 = _parse_initial_state(cfg["initial_state"], cfg["basis_size"], cfg["beta"])
    trace = evolution.fidelity_single(psi0, p1, p2, cfg["kicks"])
    return _trace_outputs(trace, cfg, "fidelity")


def _cmd_ensemble(cfg: dict) -> list:
    spec = EnsembleSpec(cfg["beta1"], cfg["delta_beta"], cfg["n_beta"])
    psi0 = _parse_initial_state(cfg["initial_state"], cfg["basis_size"], cfg["beta1"])
    trace = evolution.fidelity_ensemble(
        psi0, cfg["k1"], cfg["k2"], cfg["epsilon"], spec, cfg["kicks"]
    )
    return _trace_outputs(trace, cfg, "ensemble")


def _cmd_pendulum(cfg: dict) -> list:
    p1 = derive_params(cfg["k1"], cfg["epsilon"], cfg["beta"])
    p2 = derive_params(cfg["k2"], cfg["epsilon"], cfg["beta"])
    psi0 = _parse_initial_state(cfg["initial_state"], cfg["basis_size"], cfg["beta"])
    trace = pendulum.pendulum_fidelity(psi0, p1, p2, cfg["kicks"], cfg["n_lo"], cfg["n_hi"])
    return _trace_outputs(trace, cfg, "pendulum")


def _cmd_perturbative(cfg: dict) -> list:
    single = cfg["beta"] is not None
    ensemble = cfg["beta1"] is not None
    if single == ensemble:
        raise ParameterError("give either beta (single rotor) or beta1/delta_beta/n_beta")
    if single:
        params = derive_params(cfg["k1"], cfg["epsilon"], cfg["beta"])
        psi0 = _parse_initial_state(cfg["initial_state"], cfg["basis_size"], cfg["beta"])
        trace = perturbative.perturbative_fidelity(
            psi0, cfg["k1"], cfg["k2"], params, cfg["order"], cfg["kicks"]
        )
    else:
        spec = EnsembleSpec(cfg["beta1"], cfg["delta_beta"], cfg["n_beta"])
        psi0 = _parse_initial_state(cfg["initial_state"], cfg["basis_size"], cfg["beta1"])
        trace = perturbative.perturbative_fidelity_ensemble(
            psi0, cfg["k1"], cfg["k2"], cfg["epsilon"], spec, cfg["order"], cfg["kicks"]
        )
    return _trace_outputs(trace, cfg, "perturbative")


def _cmd_spectrum(cfg: dict) -> list:
    params = derive_params(cfg["k"], cfg["epsilon"], cfg["beta"])
    system = pendulum.PendulumEigensystem.build(params, cfg["n_lo"], cfg["n_hi"])
    path = f"{cfg['out']}.csv"
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("m,E_wkb,E_exact,E_pert2,E_pert3,E_pert4\n")
        for m in range(cfg["m_min"], cfg["m_max"] + 1):
            try:
                e_wkb = pendulum.wkb_energy(m, params)
            except NumericalGuardError as exc:
                print(f"warning: m={m}: {exc}", file=sys.stderr)
                e_wkb = math.nan
            e_exact = pendulum.exact_energy(m, system)
            e2 = perturbative.perturbative_energy(m, params, 2)
            e3 = perturbative.perturbative_energy(m, params, 3)
            e4 = perturbative.perturbative_energy(m, params, 4)
            fh.write(f"{m},{e_wkb:.17g},{e_exact:.17g},{e2:.17g},{e3:.17g},{e4:.17g}\n")
    return [path]


def _ensemble_trace_for_scaling(cfg: dict, beta1: float) -> FidelityTrace:
    spec = EnsembleSpec(beta1, cfg["delta_beta"], cfg["n_beta"])
    psi0 = _parse_initial_state(cfg["initial_state"], cfg["basis_size"], beta1)
    if cfg["engine"] == "qkr":
        trace = evolution.fidelity_ensemble(
            psi0, cfg["k1"], cfg["k2"], cfg["epsilon"], spec, cfg["kicks"]
        )
    elif cfg["engine"] == "perturbative":
        trace = perturbative.perturbative_fidelity_ensemble(
            psi0, cfg["k1"], cfg["k2"], cfg["epsilon"], spec, cfg["order"], cfg["kicks"]
        )
    else:
        raise ParameterError(f"unknown engine {cfg['engine']!r}")
    return analysis.moving_average(trace, cfg["smoothing_window"])


def _cmd_scaling(cfg: dict) -> list:
    beta1_values = _parse_float_list(cfg["beta1_list"])
    if cfg["beta_ref"] not in beta1_values:
        raise ParameterError("beta_ref must be one of the beta1 values")
    traces = {b: _ensemble_trace_for_scaling(cfg, b) for b in beta1_values}
    result = analysis.scaling_fit(traces, cfg["beta_ref"])
    outputs = []
    factors_path = f"{cfg['out']}_factors.csv"
    with open(factors_path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("beta1,alpha,objective\n")
        for b in sorted(result.factors):
            fh.write(f"{b:.17g},{result.factors[b]:.17g},{result.objectives[b]:.17g}\n")
    outputs.append(factors_path)
    for b in sorted(traces):
        raw_path = f"{cfg['out']}_trace_beta{b:g}.csv"
        traces[b].to_csv(raw_path)
        outputs.append(raw_path)
        resc_path = f"{cfg['out']}_rescaled_beta{b:g}.csv"
        analysis.rescaled_trace(traces[b], result.factors[b]).to_csv(resc_path)
        outputs.append(resc_path)
    return outputs


def _cmd_validity(cfg: dict) -> list:
    grid = np.arange(cfg["beta1_start"], cfg["beta1_stop"] + 1e-12, cfg["beta1_step"])
    rows = analysis.validity_table(
        _parse_float_list(cfg["epsilons"]),
        cfg["k1"],
        cfg["k2"],
        [float(b) for b in grid],
        delta_beta=cfg["delta_beta"],
        n_beta=cfg["n_beta"],
        kicks=cfg["kicks"],
        window=cfg["smoothing_window"],
        basis_size=cfg["basis_size"],
        order=cfg["order"],
    )
    path = f"{cfg['out']}.csv"
    analysis.validity_rows_to_csv(rows, path)
    return [path]


# ------------------------------------------------------------------ schema

_F = float
_I = int
_S = str

SCHEMAS = {
    "portrait": {
        "k": (_F, None, True),
        "epsilon": (_F, None, True),
        "beta": (_F, None, True),
        "steps": (_I, 1000, False),
        "seed_i": (_S, "-1.5:1.5:13", False),
        "seed_theta": (_F, math.pi, False),
        "out": (_S, None, True),
    },
    "fidelity": {
        "k1": (_F, None, True),
        "k2": (_F, None, True),
        "epsilon": (_F, None, True),
        "beta": (_F, None, True),
        "kicks": (_I, None, True),
        "basis_size": (_I, DEFAULTS["basis_size"], False),
        "smoothing_window": (_I, DEFAULTS["smoothing_window"], False),
        "initial_state": (_S, DEFAULTS["initial_state"], False),
        "out": (_S, None, True),
    },
    "ensemble": {
        "k1": (_F, None, True),
        "k2": (_F, None, True),
        "epsilon": (_F, None, True),
        "beta1": (_F, None, True),
        "delta_beta": (_F, None, True),
        "n_beta": (_I, DEFAULTS["n_beta"], False),
        "kicks": (_I, None, True),
        "basis_size": (_I, DEFAULTS["basis_size"], False),
        "smoothing_window": (_I, DEFAULTS["smoothing_window"], False),
        "initial_state": (_S, DEFAULTS["initial_state"], False),
        "out": (_S, None, True),
    },
    "pendulum": {
        "k1": (_F, None, True),
        "k2": (_F, None, True),
        "epsilon": (_F, None, True),
        "beta": (_F, None, True),
        "kicks": (_I, None, True),
        "basis_size": (_I, DEFAULTS["basis_size"], False),
        "n_lo": (_I, DEFAULTS["n_lo"], False),
        "n_hi": (_I, DEFAULTS["n_hi"], False),
        "smoothing_window": (_I, DEFAULTS["smoothing_window"], False),
        "initial_state": (_S, DEFAULTS["initial_state"], False),
        "out": (_S, None, True),
    },
    "perturbative": {
        "k1": (_F, None, True),
        "k2": (_F, None, True),
        "epsilon": (_F, None, True),
        "beta": (_F, None, False),
        "beta1": (_F, None, False),
        "delta_beta": (_F, None, False),
        "n_beta": (_I, DEFAULTS["n_beta"], False),
        "order": (_I, DEFAULTS["order"], False),
        "kicks": (_I, None, True),
        "basis_size": (_I, DEFAULTS["basis_size"], False),
        "smoothing_window": (_I, DEFAULTS["smoothing_window"], False),
        "initial_state": (_S, DEFAULTS["initial_state"], False),
        "out": (_S, None, True),
    },
    "spectrum": {
        "k": (_F, None, True),
        "epsilon": (_F, None, True),
        "beta": (_F, None, True),
        "m_min": (_I, -5, False),
        "m_max": (_I, 5, False),
        "n_lo": (_I, DEFAULTS["n_lo"], False),
        "n_hi": (_I, DEFAULTS["n_hi"], False),
        "out": (_S, None, True),
    },
    "scaling": {
        "k1": (_F, None, True),
        "k2": (_F, None, True),
        "epsilon": (_F, None, True),
        "delta_beta": (_F, None, True),
        "n_beta": (_I, DEFAULTS["n_beta"], False),
        "kicks": (_I, None, True),
        "beta1_list": (_S, None, True),
        "beta_ref": (_F, None, True),
        "engine": (_S, "qkr", False),
        "order": (_I, DEFAULTS["order"], False),
        "basis_size": (_I, DEFAULTS["basis_size"], False),
        "smoothing_window": (_I, DEFAULTS["smoothing_window"], False),
        "initial_state": (_S, DEFAULTS["initial_state"], False),
        "out": (_S, None, True),
    },
    "validity": {
        "epsilons": (_S, None, True),
        "k1": (_F, None, True),
        "k2": (_F, None, True),
        "delta_beta": (_F, 0.06, False),
        "n_beta": (_I, DEFAULTS["n_beta"], False),
        "kicks": (_I, None, True),
        "beta1_start": (_F, 0.04, False),
        "beta1_stop": (_F, 0.40, False),
        "beta1_step": (_F, 0.02, False),
        "order": (_I, DEFAULTS["order"], False),
        "basis_size": (_I, DEFAULTS["basis_size"], False),
        "smoothing_window": (_I, DEFAULTS["smoothing_window"], False),
        "out": (_S, None, True),
    },
}

COMMANDS = {
    "portrait": _cmd_portrait,
    "fidelity": _cmd_fidelity,
    "ensemble": _cmd_ensemble,
    "pendulum": _cmd_pendulum,
    "perturbative": _cmd_perturbative,
    "spectrum": _cmd_spectrum,
    "scaling": _cmd_scaling,
    "validity": _cmd_validity,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qkrfid",
        description="Near-resonant kicked-rotor fidelity: batch runs with CSV output.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, schema in SCHEMAS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="key=value configuration file")
        for key, (cast, default, required) in schema.items():
            p.add_argument(
                f"--{key.replace('_', '-')}",
                dest=key,
                type=cast,
                default=None,
                help=f"default: {default}" if default is not None else None,
            )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _resolve(args, SCHEMAS[args.command])
        outputs = COMMANDS[args.command](cfg)
        _write_meta(cfg["out"], args.command, cfg, outputs)
    except ParameterError as exc:
        print(f"error:config:{exc}", file=sys.stderr)
        return 2
    except NumericalGuardError as exc:
        print(f"error:numerical:{exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
