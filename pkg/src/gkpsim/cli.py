"""Command-line front end.

Every subcommand resolves its configuration from three layers (flags over
config file over preset defaults), echoes the result into manifest.json
in the output directory before any computation starts, writes bulk data
to CSV/JSON files, and prints exactly one JSON summary line on stdout.
Exit codes: 0 success, 2 configuration error, 3 solver or certification
failure, 4 insufficient data for a requested fit.
"""

import argparse
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import io
from .errors import (
    CertificationFailureError,
    ContractViolationError,
    GkpsimError,
    InvalidDimensionError,
    InvalidParameterError,
    InvalidRequestError,
    InvariantBreachError,
    NonConvergenceError,
    RefinementFailureError,
    ShapeMismatchError,
    StiffFailureError,
    SweepFailureError,
    TruncationError,
    UnderflowHorizonError,
    UnsupportedError,
    EXIT_CONFIG,
    EXIT_INSUFFICIENT_DATA,
    EXIT_OK,
    EXIT_SOLVER,
)
from .experiments import (
    SweepSpec,
    certify_energy_bound,
    cross_check_reduced_model,
    run_contrast_decay,
    run_qunaught_noise_study,
    run_scaling_sweep,
    run_stabilization,
)
from .lindblad import (
    RecordSpec,
    ToleranceSpec,
    integrate,
    loss_model,
    two_dissipator_model,
)
from .spectral import gap_table, sigma_from_physical
from .states import (
    GkpParams,
    build_codeword,
    build_logical_state,
    coherent,
    vacuum,
    wigner,
)

_PRESETS = {
    "qubit": {
        "eta": math.sqrt(math.pi),
        "d": 2,
        "dim": 120,
        "epsilon": 0.15,
        "kappa": 0.0,
        "tmax": 30.0,
    },
    "qunaught": {
        "eta": math.sqrt(math.pi / 2.0),
        "d": 1,
        "dim": 120,
        "epsilon": 0.15,
        "kappa": 0.0,
        "tmax": 150.0,
    },
    "custom": {
        "eta": None,
        "d": 2,
        "dim": 120,
        "epsilon": None,
        "kappa": 0.0,
        "tmax": 30.0,
    },
}

_BASE = {
    "rtol": 1e-8,
    "atol": 1e-10,
    "points": 201,
    "threads": 0,  # 0 means: size to the machine
    "out": "gkpsim-out",
    "initial": "vacuum",
    "amplitude": 2.0,
    "r": 0.9,
    "n_grid": 512,
    "hierarchy": True,
    "fit_start": 4.0,
    "fit_end": 16.0,
    "kappas": None,
    "epsilons": None,
    "sigmas": None,
}

_WIGNER_REACH = 7.5
_WIGNER_POINTS = 81

_CONFIG_ERRORS = (
    InvalidParameterError,
    InvalidRequestError,
    InvalidDimensionError,
    UnsupportedError,
    ShapeMismatchError,
)
_SOLVER_ERRORS = (
    StiffFailureError,
    InvariantBreachError,
    NonConvergenceError,
    CertificationFailureError,
    TruncationError,
    RefinementFailureError,
    ContractViolationError,
)
_DATA_ERRORS = (SweepFailureError, UnderflowHorizonError)


def _coerce(text):
    text = text.strip().strip('"').strip("'")
    low = text.lower()
    if low in ("true", "false"):
        return low == "true"
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


def load_config_file(path):
    """Flat key = value lines, or a JSON object (a manifest works as-is)."""
    path = Path(path)
    if not path.exists():
        raise InvalidParameterError(f"config file not found: {path}")
    text = path.read_text()
    if text.lstrip().startswith("{"):
        data = json.loads(text)
        if isinstance(data.get("config"), dict):
            data = data["config"]
        return {str(k).replace("-", "_"): v for k, v in data.items()}
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidParameterError(
                f"{path}:{lineno}: expected key = value, got {raw!r}"
            )
        key, value = line.split("=", 1)
        entries[key.strip().replace("-", "_")] = _coerce(value)
    return entries


def _float_list(value):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return tuple(float(v) for v in value)
    return tuple(float(part) for part in str(value).split(",") if part.strip())


def resolve_config(args, default_preset="custom"):
    """Merge preset defaults, config file entries, then explicit flags."""
    file_cfg = {}
    if getattr(args, "config", None):
        file_cfg = load_config_file(args.config)
    preset = getattr(args, "preset", None) or file_cfg.get("preset") or default_preset
    if preset not in _PRESETS:
        raise InvalidParameterError(
            f"unknown preset {preset!r}; choose from {sorted(_PRESETS)}"
        )
    merged = dict(_BASE)
    merged.update(_PRESETS[preset])
    merged["preset"] = preset
    explicit = set()
    for key, value in file_cfg.items():
        if key == "preset":
            continue
        merged[key] = value
        explicit.add(key)
    for key in merged:
        flag = getattr(args, key, None)
        if flag is not None and key != "preset":
            merged[key] = flag
            explicit.add(key)
    for key in ("kappas", "epsilons", "sigmas"):
        merged[key] = _float_list(merged.get(key))
    if merged.get("threads", 0) in (0, None):
        merged["threads"] = os.cpu_count() or 1
    merged["command"] = args.command
    return merged, explicit


def _require(config, key, flag):
    if config.get(key) is None:
        raise InvalidParameterError(
            f"missing {flag}: preset '{config['preset']}' does not provide "
            f"{key}, pass {flag} explicitly"
        )
    return config[key]


def _params_from(config):
    eta = _require(config, "eta", "--eta")
    epsilon = _require(config, "epsilon", "--epsilon")
    return GkpParams(d=int(config["d"]), eta=float(eta), epsilon=float(epsilon))


def _solver_from(config):
    return ToleranceSpec(rtol=float(config["rtol"]), atol=float(config["atol"]))


def _initial_state(config, dim, params):
    name = str(config["initial"])
    if name == "vacuum":
        return vacuum(dim)
    if name == "coherent":
        return coherent(dim, complex(config["amplitude"]))
    if name == "codeword":
        return build_codeword(dim, params, 0)
    if name == "magic":
        return build_logical_state(dim, params, "magic")
    raise InvalidParameterError(
        f"unknown --initial {name!r}; choose vacuum, coherent, codeword, magic"
    )


def _manifest(config):
    out = Path(config["out"])
    io.write_manifest(out / "manifest.json", config)
    return out


def cmd_stabilize(config):
    params = _params_from(config)
    out = _manifest(config)
    dim = int(config["dim"])
    t_final = float(config["tmax"])
    kappa = float(config["kappa"])
    rho0 = _initial_state(config, dim, params)
    start = time.perf_counter()
    result = run_stabilization(
        dim,
        params,
        rho0=rho0,
        t_final=t_final,
        solver=_solver_from(config),
        n_points=int(config["points"]),
        kappa=kappa,
    )
    tag = config["preset"]
    io.write_trajectory_csv(out / "trajectories" / f"stabilize_{tag}.csv", result.record)
    if kappa > 0:
        reference = integrate(
            loss_model(dim, kappa),
            rho0,
            t_final,
            solver=_solver_from(config),
            record=RecordSpec(n_points=int(config["points"]), check_positivity=False),
        )
        io.write_trajectory_csv(
            out / "trajectories" / f"reference_{tag}.csv", reference
        )
    axis = np.linspace(-_WIGNER_REACH, _WIGNER_REACH, _WIGNER_POINTS)
    grid = wigner(result.record.final_state, axis, axis)
    io.write_wigner_csv(out / "wigner" / f"final_{tag}.csv", grid)
    summary = result.summary()
    summary["kappa"] = kappa
    summary["runtime_seconds"] = time.perf_counter() - start
    io.write_json(out / "summary.json", summary)
    return summary


def cmd_noise_sweep(config):
    eta = _require(config, "eta", "--eta")
    kappas = config["kappas"] or (5e-3, 1e-2, 2e-2)
    epsilons = config["epsilons"] or (0.1, 0.15, 0.2)
    config["kappas"], config["epsilons"] = kappas, epsilons
    out = _manifest(config)
    start = time.perf_counter()
    spec = SweepSpec(
        kappa_values=kappas,
        epsilon_values=epsilons,
        eta=float(eta),
        dim=int(config["dim"]),
        horizon=float(config["tmax"]),
        n_points=int(config["points"]),
        rtol=float(config["rtol"]),
        atol=float(config["atol"]),
        threads=int(config["threads"]),
    )
    result = run_scaling_sweep(spec)
    io.write_sweep_table_csv(out / "sweep_table.csv", result.rows)
    fits = {
        "A": result.fit.amplitude,
        "n": result.fit.n,
        "r": result.fit.r,
        "residual_rms": result.fit.residual_rms,
        "n_cells": result.fit.n_cells,
        "covariance": result.fit.covariance,
    }
    if config["hierarchy"]:
        mid_kappa = sorted(kappas)[len(kappas) // 2]
        mid_epsilon = sorted(epsilons)[len(epsilons) // 2]
        params = GkpParams(d=2, eta=float(eta), epsilon=float(mid_epsilon))
        rates = {}
        residuals = {}
        for observable in ("Z", "X", "Y"):
            cell = run_contrast_decay(
                int(config["dim"]),
                params,
                float(mid_kappa),
                observable,
                float(config["tmax"]),
                n_points=int(config["points"]),
                solver=ToleranceSpec(rtol=float(config["rtol"]), atol=float(config["atol"])),
            )
            rates[observable] = cell.fit.rate
            residuals[observable] = cell.fit.residual
            io.write_columns_csv(
                out / "trajectories" / f"contrast_{observable}.csv",
                ("t", "contrast"),
                (cell.times, cell.contrast),
            )
        fits["hierarchy"] = {
            "kappa": float(mid_kappa),
            "epsilon": float(mid_epsilon),
            "rates": rates,
            "residuals": residuals,
        }
    io.write_json(out / "fits.json", fits)
    return {
        "A": result.fit.amplitude,
        "n": result.fit.n,
        "r": result.fit.r,
        "n_cells": result.fit.n_cells,
        "runtime_seconds": time.perf_counter() - start,
    }


def cmd_spectral(config):
    sigmas = config["sigmas"]
    conversion = None
    if sigmas is None:
        if config.get("epsilon") is None or config.get("eta") is None:
            raise InvalidParameterError(
                "missing --sigmas: pass a sigma list, or both --epsilon and "
                "--eta for conversion"
            )
        sigma = sigma_from_physical(float(config["epsilon"]), float(config["eta"]))
        conversion = {
            "epsilon": float(config["epsilon"]),
            "eta": float(config["eta"]),
            "sigma": sigma,
        }
        sigmas = (sigma,)
        config["sigmas"] = sigmas
    out = _manifest(config)
    start = time.perf_counter()
    rows = gap_table(sigmas, n_grid=int(config["n_grid"]))
    io.write_gap_table_csv(out / "gap_table.csv", rows)
    summary = {
        "sigma_values": [row["sigma"] for row in rows],
        "lambda1_values": [row["lambda1"] for row in rows],
        "n_grid": int(config["n_grid"]),
        "runtime_seconds": time.perf_counter() - start,
    }
    if conversion is not None:
        summary["conversion"] = conversion
    return summary


def cmd_certify_energy(config):
    eta = float(_require(config, "eta", "--eta"))
    epsilon = float(_require(config, "epsilon", "--epsilon"))
    out = _manifest(config)
    start = time.perf_counter()
    certificate = certify_energy_bound(
        int(config["dim"]),
        eta,
        epsilon,
        float(config["r"]),
        t_final=float(config["tmax"]),
        solver=_solver_from(config),
    )
    io.write_json(out / "certificate.json", certificate.to_dict())
    return {
        "lambda": certificate.lam,
        "mu": certificate.mu,
        "ratio": certificate.ratio,
        "stability": certificate.stability,
        "max_number": certificate.max_number,
        "bound": certificate.bound,
        "runtime_seconds": time.perf_counter() - start,
    }


def cmd_qunaught(config, explicit):
    epsilon = float(_require(config, "epsilon", "--epsilon"))
    kappas = config["kappas"] or (0.0, 1e-3, 1e-2, 5e-2)
    config["kappas"] = kappas
    out = _manifest(config)
    start = time.perf_counter()
    study = run_qunaught_noise_study(
        int(config["dim"]),
        epsilon,
        kappas,
        solver=_solver_from(config),
        wigner_points=_WIGNER_POINTS,
    )
    files = []
    for i, entry in enumerate(study.entries):
        path = out / "wigner" / f"qunaught_{i}.csv"
        io.write_wigner_csv(path, entry.grid)
        files.append(f"wigner/qunaught_{i}.csv")
    io.write_json(
        out / "study.json",
        {
            "eta": study.params.eta,
            "epsilon": study.params.epsilon,
            "kappa_values": [e.kappa for e in study.entries],
            "contrasts": [e.contrast for e in study.entries],
            "lattice_spacings": [e.lattice_spacing for e in study.entries],
            "wigner_files": files,
        },
    )
    return {
        "kappa_values": [e.kappa for e in study.entries],
        "contrasts": [e.contrast for e in study.entries],
        "runtime_seconds": time.perf_counter() - start,
    }


def cmd_crosscheck(config, explicit):
    epsilon = float(_require(config, "epsilon", "--epsilon"))
    horizon = float(config["tmax"]) if "tmax" in explicit else 40.0
    config["tmax"] = horizon
    out = _manifest(config)
    start = time.perf_counter()
    report = cross_check_reduced_model(
        int(config["dim"]),
        epsilon,
        eta=float(_require(config, "eta", "--eta")),
        horizon=horizon,
        fit_start=float(config["fit_start"]),
        fit_end=float(config["fit_end"]),
        n_grid=int(config["n_grid"]),
        solver=_solver_from(config),
    )
    io.write_json(out / "crosscheck.json", report.to_dict())
    return {
        "measured_rate": report.measured_rate,
        "predicted_rate": report.predicted,
        "ratio": report.ratio,
        "runtime_seconds": time.perf_counter() - start,
    }


def cmd_wigner(config, explicit):
    params = _params_from(config)
    tmax = float(config["tmax"]) if "tmax" in explicit else 0.0
    config["tmax"] = tmax
    out = _manifest(config)
    dim = int(config["dim"])
    start = time.perf_counter()
    state = _initial_state(config, dim, params)
    if tmax > 0:
        model = two_dissipator_model(
            dim, params.eta, params.epsilon, kappa=float(config["kappa"])
        )
        record = integrate(
            model,
            state,
            tmax,
            solver=_solver_from(config),
            record=RecordSpec(n_points=int(config["points"])),
        )
        state = record.final_state
    axis = np.linspace(-_WIGNER_REACH, _WIGNER_REACH, _WIGNER_POINTS)
    grid = wigner(state, axis, axis)
    io.write_wigner_csv(out / "wigner" / "state.csv", grid)
    return {
        "normalization_check": grid.metadata["normalization_check"],
        "grid_exceeds_validity": grid.metadata["grid_exceeds_validity"],
        "runtime_seconds": time.perf_counter() - start,
    }


def _add_common(parser):
    parser.add_argument("--preset", choices=sorted(_PRESETS))
    parser.add_argument("--eta", type=float)
    parser.add_argument("--epsilon", type=float)
    parser.add_argument("--kappa", type=float)
    parser.add_argument("--dim", type=int)
    parser.add_argument("--tmax", type=float)
    parser.add_argument("--rtol", type=float)
    parser.add_argument("--atol", type=float)
    parser.add_argument("--out")
    parser.add_argument("--threads", type=int)
    parser.add_argument("--config")
    parser.add_argument("--points", type=int)
    parser.add_argument("--d", type=int)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="gkpsim",
        description="Dissipative grid-state stabilization engine",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stabilize", help="evolve from an initial state, track fidelity")
    _add_common(p)
    p.add_argument("--initial")
    p.add_argument("--amplitude", type=float)

    p = sub.add_parser("noise-sweep", help="decay-rate grid and power-law fit")
    _add_common(p)
    p.add_argument("--kappas")
    p.add_argument("--epsilons")
    p.add_argument(
        "--hierarchy", action=argparse.BooleanOptionalAction, default=None
    )

    p = sub.add_parser("spectral", help="reduced-model gap table")
    _add_common(p)
    p.add_argument("--sigmas")
    p.add_argument("--n-grid", dest="n_grid", type=int)

    p = sub.add_parser("certify-energy", help="photon-number bound certificate")
    _add_common(p)
    p.add_argument("--r", type=float)

    p = sub.add_parser("qunaught", help="steady states across loss rates")
    _add_common(p)
    p.add_argument("--kappas")

    p = sub.add_parser("crosscheck", help="full model versus reduced gap")
    _add_common(p)
    p.add_argument("--n-grid", dest="n_grid", type=int)
    p.add_argument("--fit-start", dest="fit_start", type=float)
    p.add_argument("--fit-end", dest="fit_end", type=float)

    p = sub.add_parser("wigner", help="phase-space map of a state")
    _add_common(p)
    p.add_argument("--initial")
    p.add_argument("--amplitude", type=float)

    return parser


_DEFAULT_PRESET = {
    "stabilize": "custom",
    "noise-sweep": "qubit",
    "spectral": "custom",
    "certify-energy": "custom",
    "qunaught": "qunaught",
    "crosscheck": "qubit",
    "wigner": "custom",
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config, explicit = resolve_config(
            args, default_preset=_DEFAULT_PRESET[args.command]
        )
        if args.command == "stabilize":
            summary = cmd_stabilize(config)
        elif args.command == "noise-sweep":
            summary = cmd_noise_sweep(config)
        elif args.command == "spectral":
            summary = cmd_spectral(config)
        elif args.command == "certify-energy":
            summary = cmd_certify_energy(config)
        elif args.command == "qunaught":
            summary = cmd_qunaught(config, explicit)
        elif args.command == "crosscheck":
            summary = cmd_crosscheck(config, explicit)
        else:
            summary = cmd_wigner(config, explicit)
    except _DATA_ERRORS as exc:
        print(f"gkpsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_INSUFFICIENT_DATA
    except _CONFIG_ERRORS as exc:
        print(f"gkpsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except _SOLVER_ERRORS as exc:
        print(f"gkpsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except GkpsimError as exc:
        print(f"gkpsim {args.command}: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    print(json.dumps(io._jsonable(summary), sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
