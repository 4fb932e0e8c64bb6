"""Command-line front end.

Subcommands:
  basis       orthonormality defect, chi conservation/extrema for a pole set
  spr         strict-positive-real check for num/den
  simulate    excite a model with a PRBS and write a t,u,y record
  identify    run one adaptation scheme over a t,u,y record
  experiment  run a bundled or user-configured benchmark experiment
  bode        frequency-response CSV for a model

All stdout output is JSON; failures print a machine-readable error JSON
on stderr and exit with a code that identifies the failure class:
2 configuration/usage, 3 file I/O, 4 numerical failure, 5 divergence.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional

import jsonschema
import numpy as np

from . import io as gio
from .adaptation import (AdaptationOptions, DivergenceError, SCHEMES,
                         run_identification, scheme_structure)
from .basis import gram_matrix, validate_basis
from .bench import (BENCHMARKS, ExperimentConfig, builtin_experiments,
                    run_experiment)
from .convergence import spr_check
from .distortion import chi_conservation, chi_curve, chi_extrema
from .lti import NoiseSpec, RationalModel, bode, prbs, prbs_period, simulate
from .predictor import GobfResponse, PredictorConfig

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_IO = 3
EXIT_NUMERIC = 4
EXIT_DIVERGED = 5


class CliError(Exception):
    def __init__(self, code: int, kind: str, message: str):
        super().__init__(message)
        self.code = code
        self.kind = kind


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems as CliError, not SystemExit."""

    def error(self, message):
        raise CliError(EXIT_CONFIG, "usage", message)


MODEL_SCHEMA: dict = {
    "type": "object",
    "required": ["num", "den"],
    "properties": {
        "num": {"type": "array", "minItems": 1,
                "items": {"type": "number"}},
        "den": {"type": "array", "minItems": 1,
                "items": {"type": "number"}},
        "noise_num": {"type": ["array", "null"],
                      "items": {"type": "number"}},
    },
}


def _print(payload: dict) -> None:
    doc = dict(gio.jsonify(payload))
    doc.setdefault("version", gio.FORMAT_VERSION)
    doc.setdefault("tool", gio.tool_stamp())
    print(json.dumps(doc, indent=2, sort_keys=True))


def _emit_error(code: int, kind: str, message: str) -> None:
    doc = {"error": {"code": code, "kind": kind, "message": message},
           "version": gio.FORMAT_VERSION, "tool": gio.tool_stamp()}
    print(json.dumps(doc, indent=2, sort_keys=True), file=sys.stderr)


def _parse_poles(text: str) -> tuple[complex, ...]:
    """Comma-separated poles; complex entries are closed under conjugation."""
    poles: list[complex] = []
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        try:
            poles.append(complex(tok))
        except ValueError:
            raise CliError(EXIT_CONFIG, "config",
                           f"cannot parse pole {tok!r}") from None
    if not poles:
        raise CliError(EXIT_CONFIG, "config", "at least one pole required")
    closed = list(poles)
    for p in poles:
        if abs(p.imag) > 0 and not any(abs(q - np.conj(p)) < 1e-12
                                       for q in closed):
            closed.append(complex(np.conj(p)))
    return tuple(closed)


def _parse_floats(text: str, what: str) -> np.ndarray:
    try:
        vals = [float(tok) for tok in text.split(",") if tok.strip()]
    except ValueError:
        raise CliError(EXIT_CONFIG, "config",
                       f"cannot parse {what} {text!r}") from None
    if not vals:
        raise CliError(EXIT_CONFIG, "config", f"{what} must be nonempty")
    return np.asarray(vals, dtype=float)


def _load_model(args) -> RationalModel:
    if getattr(args, "benchmark", None):
        if args.benchmark not in BENCHMARKS:
            raise CliError(EXIT_CONFIG, "config",
                           f"unknown benchmark {args.benchmark!r}")
        return BENCHMARKS[args.benchmark]().model
    if getattr(args, "model", None):
        doc = gio.read_json(args.model)
        jsonschema.validate(doc, MODEL_SCHEMA)
        return RationalModel(num=np.asarray(doc["num"], dtype=float),
                             den=np.asarray(doc["den"], dtype=float),
                             noise_num=None if doc.get("noise_num") is None
                             else np.asarray(doc["noise_num"], dtype=float))
    raise CliError(EXIT_CONFIG, "config",
                   "one of --benchmark/--model is required")


def _out_dir(args) -> Optional[Path]:
    if args.out is None:
        return None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_basis(args) -> int:
    poles = _parse_poles(args.poles)
    spec = validate_basis(poles)
    order = args.order if args.order else 2 * spec.n_poles
    if order % spec.n_poles:
        raise CliError(EXIT_CONFIG, "config",
                       "--order must be a multiple of the pole count")
    gram = gram_matrix(spec, order // spec.n_poles)
    defect = float(np.max(np.abs(gram - np.eye(gram.shape[0]))))

    extrema = []
    for p in spec.poles:
        if p.imag < 0 or abs(p) == 0:  # one entry per conjugate pair;
            continue                   # the delay pole has no extremum
        extrema.append(dataclasses.asdict(chi_extrema(p)))

    report = {
        "poles": list(spec.poles),
        "n_poles": spec.n_poles,
        "order": order,
        "gram_defect": defect,
        "chi_conservation": chi_conservation(spec),
        "extrema": extrema,
    }
    out = _out_dir(args)
    if out is not None:
        w, chi = chi_curve(spec)
        gio.write_chi_csv(out / "chi.csv", w, chi)
        gio.write_json(out / "basis.json", report)
        report["artifacts"] = ["basis.json", "chi.csv"]
    _print(report)
    return EXIT_OK


def cmd_spr(args) -> int:
    num = _parse_floats(args.num, "--num")
    den = _parse_floats(args.den, "--den")
    report = spr_check(num, den, lam2=args.lam2, grid=args.grid).as_dict()
    out = _out_dir(args)
    if out is not None:
        gio.write_json(out / "spr.json", report)
        report["artifacts"] = ["spr.json"]
    _print(report)
    return EXIT_OK


def cmd_simulate(args) -> int:
    model = _load_model(args)
    n = args.samples if args.samples else prbs_period(args.registers)
    u = prbs(args.registers, n, args.amplitude).samples
    clean = simulate(model, u).samples
    sigma = 0.0
    y = clean
    if args.snr is not None:
        sigma = float(np.std(clean)) * 10.0 ** (-args.snr / 20.0)
        y = clean + NoiseSpec(sigma, args.seed).realize(n)
    out = _out_dir(args)
    if out is None:
        raise CliError(EXIT_CONFIG, "config", "--out directory is required")
    path = gio.write_record_csv(out / "record.csv", np.arange(n), u, y)
    _print({"record": str(path), "samples": n, "noise_sigma": sigma,
            "registers": args.registers, "seed": args.seed})
    return EXIT_OK


def cmd_identify(args) -> int:
    _, u, y = gio.read_record_csv(args.record)
    spec = validate_basis(_parse_poles(args.poles))
    config = PredictorConfig(scheme_structure(args.scheme), spec, args.order)
    options = AdaptationOptions(
        f0_scale=args.f0, lambda1=args.lambda1, lambda2=args.lambda2,
        trajectory_stride=max(1, (len(u) - 1) // 512))
    res = run_identification(config, u, y, options)

    tail = res.eps[-max(100, res.steps // 10):]
    summary = {
        "scheme": res.scheme,
        "order": args.order,
        "poles": list(spec.poles),
        "samples": int(len(u)),
        "steps": res.steps,
        "diverged": res.diverged,
        "backend": res.backend,
        "residual_std_tail": float(np.std(tail)),
        "stationarity_norm": float(np.max(np.abs(res.stationarity))),
        "model": None if res.model is None else gio.model_to_dict(res.model),
        "spr": None if res.spr is None else res.spr.as_dict(),
        "notes": dict(res.meta),
    }
    out = _out_dir(args)
    if out is not None:
        w = np.geomspace(args.omega_min, np.pi, args.points)
        mag, ph = bode(GobfResponse(res.theta, "io"), w)
        artifacts = [gio.write_bode_csv(out / "bode_model.csv", w, mag, ph)]
        if res.trajectory is not None:
            artifacts.append(gio.write_trajectory_csv(
                out / "theta_trajectory.csv", res.trajectory_idx,
                res.trajectory))
        if res.model is not None:
            artifacts.append(gio.write_model_json(out / "model.json",
                                                  res.model))
        if res.spr is not None:
            artifacts.append(gio.write_json(out / "spr.json",
                                            res.spr.as_dict()))
        summary["artifacts"] = sorted(p.name for p in artifacts) \
            + ["summary.json"]
        gio.write_json(out / "summary.json", summary)
    _print(summary)
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.list:
        _print({"experiments": sorted(builtin_experiments())})
        return EXIT_OK
    if (args.name is None) == (args.config is None):
        raise CliError(EXIT_CONFIG, "config",
                       "exactly one of --name/--config is required")
    if args.name is not None:
        runs = builtin_experiments()
        if args.name not in runs:
            raise CliError(EXIT_CONFIG, "config",
                           f"unknown experiment {args.name!r}; "
                           f"choices: {sorted(runs)}")
        cfg = runs[args.name]
    else:
        cfg = ExperimentConfig.from_dict(gio.read_json(args.config))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, noise_seed=args.seed)
    out_dir = args.out if args.out is not None else cfg.out_dir
    if out_dir is None:
        raise CliError(EXIT_CONFIG, "config",
                       "output directory required (--out or out_dir)")
    summary = run_experiment(cfg, out_dir)
    _print(summary)
    if summary["diverged"]:
        _emit_error(EXIT_DIVERGED, "divergence",
                    f"experiment {cfg.name!r} diverged after "
                    f"{summary['steps']} steps")
        return EXIT_DIVERGED
    return EXIT_OK


def cmd_bode(args) -> int:
    model = _load_model(args)
    out = _out_dir(args)
    if out is None:
        raise CliError(EXIT_CONFIG, "config", "--out directory is required")
    w = np.geomspace(args.omega_min, np.pi, args.points)
    mag, ph = bode(model, w)
    path = gio.write_bode_csv(out / "bode.csv", w, mag, ph)
    _print({"bode": str(path), "n_points": args.points,
            "omega_min": args.omega_min})
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def _add_model_source(p) -> None:
    p.add_argument("--benchmark", choices=sorted(BENCHMARKS),
                   help="bundled plant")
    p.add_argument("--model", metavar="JSON",
                   help="model file with num/den[/noise_num] arrays")


def _add_bode_grid(p) -> None:
    p.add_argument("--points", type=int, default=800)
    p.add_argument("--omega-min", type=float, default=1e-5, dest="omega_min")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gobfid",
                     description="identification on orthonormal basis "
                                 "function models")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    p = sub.add_parser("basis", help="analyze a basis pole set")
    p.add_argument("--poles", required=True,
                   help="comma-separated poles; complex entries (a+bj) are "
                        "closed under conjugation")
    p.add_argument("--order", type=int, default=0,
                   help="total basis functions for the Gram check "
                        "(default: 2 per pole)")
    p.add_argument("--out", help="directory for chi.csv and basis.json")
    p.set_defaults(func=cmd_basis)

    p = sub.add_parser("spr", help="strict-positive-real check")
    p.add_argument("--num", required=True, help="comma-separated coefficients")
    p.add_argument("--den", required=True, help="comma-separated coefficients")
    p.add_argument("--lam2", type=float, default=1.0)
    p.add_argument("--grid", type=int, default=8192)
    p.add_argument("--out", help="directory for spr.json")
    p.set_defaults(func=cmd_spr)

    p = sub.add_parser("simulate", help="PRBS-excite a model, write t,u,y")
    _add_model_source(p)
    p.add_argument("--registers", type=int, default=11)
    p.add_argument("--samples", type=int, default=0,
                   help="record length (default: one PRBS period)")
    p.add_argument("--amplitude", type=float, default=1.0)
    p.add_argument("--snr", type=float, default=None,
                   help="output SNR in dB (default: noise-free)")
    p.add_argument("--seed", type=int, default=1234)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("identify", help="run one scheme over a record")
    p.add_argument("--record", required=True, help="CSV with t,u,y header")
    p.add_argument("--scheme", required=True, choices=list(SCHEMES))
    p.add_argument("--poles", required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--f0", type=float, default=1000.0,
                   help="initial adaptation-gain scale")
    p.add_argument("--lambda1", type=float, default=1.0)
    p.add_argument("--lambda2", type=float, default=1.0)
    _add_bode_grid(p)
    p.add_argument("--out", help="artifact directory")
    p.set_defaults(func=cmd_identify)

    p = sub.add_parser("experiment", help="run a scripted experiment")
    p.add_argument("--name", help="bundled experiment name")
    p.add_argument("--config", help="experiment JSON file")
    p.add_argument("--seed", type=int, default=None,
                   help="override the noise seed")
    p.add_argument("--out", help="artifact directory")
    p.add_argument("--list", action="store_true",
                   help="list bundled experiment names")
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("bode", help="frequency-response CSV for a model")
    _add_model_source(p)
    _add_bode_grid(p)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_bode)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except CliError as ex:
        _emit_error(ex.code, ex.kind, str(ex))
        return ex.code
    except jsonschema.ValidationError as ex:
        _emit_error(EXIT_CONFIG, "schema", ex.message)
        return EXIT_CONFIG
    except DivergenceError as ex:
        _emit_error(EXIT_DIVERGED, "divergence", str(ex))
        return EXIT_DIVERGED
    except OSError as ex:
        _emit_error(EXIT_IO, "io", str(ex))
        return EXIT_IO
    except (ArithmeticError, np.linalg.LinAlgError) as ex:
        _emit_error(EXIT_NUMERIC, "numeric", str(ex))
        return EXIT_NUMERIC
    except ValueError as ex:
        _emit_error(EXIT_CONFIG, "config", str(ex))
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
