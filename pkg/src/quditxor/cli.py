"""Experiment harness.

    quditxor bell --dim 3
    quditxor teleport --dim 4 --trials 200 --seed 7
    quditxor purify --dim 3 --lambda 0.6 --format csv
    quditxor sweep --dim 2..20 --lambda-offset 0.05
    quditxor kerr-check --dim 2..8

Exit codes: 0 success (a non-converged purification is still a success),
2 invalid configuration, 3 size guard tripped.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .core import CapacityError, check_dim
from .gates import bell_basis, kerr_residual
from .purify import (
    DEFAULT_SCHEDULE,
    TWIRLS,
    PurifyConfig,
    run_purification,
    separability_threshold,
    sweep,
)
from .teleport import teleport_demo

EXIT_OK, EXIT_CONFIG, EXIT_CAPACITY = 0, 2, 3

DEFAULTS = {
    "dim": None,
    "lam": None,
    "lambda_offset": None,
    "trials": 100,
    "seed": 0,
    "max_iters": 500,
    "target": 0.999,
    "schedule": ",".join(DEFAULT_SCHEDULE),
    "entangled_only": False,
    "workers": None,
    "format": "json",
    "out": None,
}


class ConfigError(ValueError):
    pass


def parse_int_list(text) -> list[int]:
    """'2..5,8' -> [2, 3, 4, 5, 8]."""
    if isinstance(text, int):
        return [text]
    if isinstance(text, list):
        return [int(x) for x in text]
    out = []
    for part in str(text).split(","):
        part = part.strip()
        if not part:
            continue
        if ".." in part:
            lo, hi = part.split("..")
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise ConfigError(f"empty range {part!r}")
            out.extend(range(lo, hi + 1))
        else:
            out.append(int(part))
    return out


def parse_float_list(text) -> list[float]:
    if isinstance(text, (int, float)):
        return [float(text)]
    if isinstance(text, list):
        return [float(x) for x in text]
    return [float(x) for x in str(text).split(",") if x.strip()]


def cplx(z) -> dict:
    return {"re": float(z.real), "im": float(z.imag)}


def fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".17g")
    return str(x)


def cmd_bell(cfg: dict) -> tuple[dict, list[str], list[list]]:
    D = check_dim(_single_dim(cfg))
    basis = bell_basis(D)
    vecs = np.array([s.amps for s in basis.values()])
    gram = vecs.conj() @ vecs.T
    gram_res = float(np.abs(gram - np.eye(D * D)).max())
    states = [{"l": lab.l, "m": lab.m, "amplitudes": [cplx(a) for a in s.amps]}
              for lab, s in basis.items()]
    data = {"D": D, "ordering": "row-major |k1 k2>", "states": states,
            "gram_residual": gram_res}
    rows = [[lab.l, lab.m, idx, float(a.real), float(a.imag)]
            for lab, s in basis.items() for idx, a in enumerate(s.amps)]
    return data, ["l", "m", "index", "re", "im"], rows


def cmd_teleport(cfg: dict):
    D = check_dim(_single_dim(cfg))
    trials = int(cfg["trials"])
    if trials < 1:
        raise ConfigError("--trials must be >= 1")
    s = teleport_demo(D, trials, cfg["seed"])
    data = {
        "D": D,
        "trials": trials,
        "min_fidelity": s.min_fidelity,
        "mean_fidelity": s.mean_fidelity,
        "classical_bits": s.classical_bits,
        "outcome_counts": [list(r) for r in s.outcome_counts],
    }
    freqs = s.frequencies
    rows = [[l, m, s.outcome_counts[l][m], float(freqs[l, m])]
            for l in range(D) for m in range(D)]
    return data, ["l", "m", "count", "frequency"], rows


def _purify_template(cfg: dict, D: int, lam: float) -> PurifyConfig:
    schedule = tuple(x.strip() for x in str(cfg["schedule"]).split(",") if x.strip())
    bad = [x for x in schedule if x not in TWIRLS]
    if bad:
        raise ConfigError(f"unknown twirl kind(s) {bad}; choose from {sorted(TWIRLS)}")
    return PurifyConfig(D=D, lam=lam, max_iters=int(cfg["max_iters"]),
                        fidelity_target=float(cfg["target"]), twirl_schedule=schedule)


def cmd_purify(cfg: dict):
    D = check_dim(_single_dim(cfg))
    lams = parse_float_list(cfg["lam"]) if cfg["lam"] is not None else []
    if len(lams) != 1:
        raise ConfigError("purify needs exactly one --lambda value")
    pc = _purify_template(cfg, D, lams[0])
    tr = run_purification(pc)
    steps = [{"iteration": s.iteration, "fidelity": s.fidelity,
              "step_success_prob": s.step_success_prob,
              "cumulative_success_prob": s.cumulative_success_prob} for s in tr.steps]
    data = {"D": D, "lambda": pc.lam, "lambda_D": separability_threshold(D),
            "converged": tr.converged, "iterations_used": tr.iterations_used,
            "reason": tr.reason, "steps": steps}
    header = ["iteration", "fidelity", "step_success_prob", "cumulative_success_prob"]
    return data, header, [[s[h] for h in header] for s in steps]


def cmd_sweep(cfg: dict):
    dims = parse_int_list(cfg["dim"]) if cfg["dim"] is not None else []
    if not dims:
        raise ConfigError("sweep needs --dim")
    for D in dims:
        check_dim(D)
    lams = parse_float_list(cfg["lam"]) if cfg["lam"] is not None else []
    offsets = parse_float_list(cfg["lambda_offset"]) if cfg["lambda_offset"] is not None else []
    if not lams and not offsets:
        raise ConfigError("sweep needs --lambda and/or --lambda-offset")
    template = _purify_template(cfg, dims[0], 1.0)
    rows_out = []
    cells = []
    for D in dims:
        grid = lams + [separability_threshold(D) + o for o in offsets]
        for lam in grid:
            if not 0 <= lam <= 1:
                raise ConfigError(f"lambda {lam} outside [0, 1] for D={D}")
            if cfg["entangled_only"] and lam <= separability_threshold(D):
                continue
            cells.append((D, lam))
    if not cells:
        raise ConfigError("the (D, lambda) grid is empty after filtering")
    # Rows are computed per D so lambda offsets stay relative to that D's threshold.
    for D in dict.fromkeys(D for D, _ in cells):
        rows_out += sweep([D], [lam for d, lam in cells if d == D], template,
                          workers=cfg["workers"])
    header = ["D", "lambda", "lambda_D", "converged", "iterations_used",
              "cumulative_success_prob", "final_fidelity"]
    rows = [[r.D, r.lam, separability_threshold(r.D), r.converged, r.iterations_used,
             r.cumulative_success_prob, r.final_fidelity] for r in rows_out]
    data = {"rows": [dict(zip(header, r)) for r in rows],
            "all_converged": all(r.converged for r in rows_out)}
    return data, header, rows


def cmd_kerr_check(cfg: dict):
    dims = parse_int_list(cfg["dim"]) if cfg["dim"] is not None else list(range(2, 9))
    if not dims:
        raise ConfigError("empty --dim range")
    for D in dims:
        check_dim(D)
    rows = [[D, kerr_residual(D)] for D in dims]
    data = {
        "conventions": {
            "hamiltonian": "H = chi n1 n2 (hbar = 1), U = exp(-i H t)",
            "interaction_time": "t = 2 pi / (D chi)",
            "mode2_basis": "|k>_2 = D^-1/2 sum_n exp(+2 pi i k n / D) |n>",
            "time_reversal": "complex conjugation of Fock-basis coordinates",
        },
        "rows": [{"D": D, "max_residual": r} for D, r in rows],
    }
    return data, ["D", "max_residual"], rows


def _single_dim(cfg: dict) -> int:
    if cfg["dim"] is None:
        raise ConfigError("--dim is required")
    dims = parse_int_list(cfg["dim"])
    if len(dims) != 1:
        raise ConfigError("this command takes a single --dim value")
    return dims[0]


COMMANDS = {
    "bell": cmd_bell,
    "teleport": cmd_teleport,
    "purify": cmd_purify,
    "sweep": cmd_sweep,
    "kerr-check": cmd_kerr_check,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--dim", help="dimension D, or a list/range such as 2..20 or 2,3,5")
    common.add_argument("--lambda", dest="lam", help="Werner weight (comma list for sweep)")
    common.add_argument("--lambda-offset", dest="lambda_offset",
                        help="sweep only: weights given as lambda_D + offset")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--max-iters", dest="max_iters", type=int)
    common.add_argument("--target", type=float, help="fidelity target")
    common.add_argument("--schedule", help="comma list of twirls: " + ",".join(TWIRLS))
    common.add_argument("--entangled-only", dest="entangled_only", action="store_const",
                        const=True, help="sweep only: keep lambda > lambda_D")
    common.add_argument("--workers", type=int)
    common.add_argument("--format", choices=["json", "csv"])
    common.add_argument("--out", help="write here instead of stdout")
    common.add_argument("--config", help="JSON file of defaults; flags override it")

    parser = argparse.ArgumentParser(prog="quditxor", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS)
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a JSON object")
        loaded = {("lam" if k == "lambda" else k.replace("-", "_")): v for k, v in loaded.items()}
        unknown = set(loaded) - set(DEFAULTS)
        if unknown:
            raise ConfigError(f"unknown config keys {sorted(unknown)}")
        cfg.update(loaded)
    for key in DEFAULTS:
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if cfg["format"] not in ("json", "csv"):
        raise ConfigError("format must be json or csv")
    return cfg


def render(report: dict, header: list[str], rows: list[list], form: str) -> str:
    if form == "json":
        return json.dumps(report, indent=2) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(x) for x in r])
    return buf.getvalue()


def run(argv=None) -> tuple[int, str]:
    """Parse, execute, render.  Returns (exit code, text written)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return (EXIT_CONFIG if exc.code else EXIT_OK), ""
    start = time.perf_counter()
    try:
        cfg = resolve_config(args)
        data, header, rows = COMMANDS[args.command](cfg)
    except CapacityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY, ""
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG, ""
    report = {
        "meta": {
            "command": args.command,
            "version": __version__,
            "seed": cfg["seed"],
            "config": cfg,
            "elapsed_ms": (time.perf_counter() - start) * 1e3,
        },
        "data": data,
    }
    text = render(report, header, rows, cfg["format"])
    if cfg["out"]:
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK, text


def main(argv=None) -> int:
    return run(argv)[0]


if __name__ == "__main__":
    sys.exit(main())
