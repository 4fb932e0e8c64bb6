"""Benchmark plants and scripted identification experiments.

The bundled plant is a ninth-order "stiff" system: two resonant and two
antiresonant modes near 1 rad/sample and a second such cluster three
decades lower, plus one fast real pole.  Time constants this far apart
make the plant a stress case for basis-pole placement: a fast-pole basis
captures the high cluster and shears off the low one, a slow-pole basis
does the opposite, and a mixed basis covers both.

All plant coefficients below are constants of this package, chosen so
the two clusters are cleanly visible on a Bode plot and so the closed
adaptation loop is well behaved at the bundled noise level.  Pole/zero
locations are given as (natural frequency, damping) pairs mapped through
``p = exp(-zeta*w0) * exp(i*sqrt(1-zeta^2)*w0)``.

``run_experiment`` turns an :class:`ExperimentConfig` into a fully
reproducible artifact directory: excitation, noisy simulation,
identification, per-band fit report, chi curve, SPR report, Bode and
trajectory CSVs, and a ``summary.json`` tying them together.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from . import io as gio
from .adaptation import AdaptationOptions, run_identification, scheme_structure, SCHEMES
from .analysis import band_fit
from .basis import BasisSpec, validate_basis
from .distortion import chi_curve
from .lti import (NoiseSpec, PRBS_TAPS, RationalModel, ZpkForm, bode, prbs,
                  prbs_period, simulate)
from .predictor import GobfResponse, PredictorConfig

__all__ = [
    "BenchmarkSystem", "stiff_benchmark", "BENCHMARKS",
    "ExperimentConfig", "EXPERIMENT_SCHEMA", "builtin_experiments",
    "run_experiment", "DEFAULT_BANDS",
]

# low band covers the slow cluster, high band the fast one
DEFAULT_BANDS: dict[str, tuple[float, float]] = {
    "low": (2e-4, 5e-3),
    "high": (0.2, float(np.pi)),
}


# ---------------------------------------------------------------------------
# bundled plants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BenchmarkSystem:
    id: str
    model: RationalModel
    description: str
    excitation: dict = field(default_factory=dict)
    noise: dict = field(default_factory=dict)


# (natural frequency rad/sample, damping ratio) for each conjugate pair
STIFF_POLE_MODES = ((5.0e-4, 0.30), (1.05e-3, 0.36),
                    (0.55, 0.24), (0.95, 0.30))
STIFF_ZERO_MODES = ((7.2e-4, 0.20), (1.5e-3, 0.20),
                    (0.70, 0.12), (1.20, 0.24))
STIFF_REAL_POLE = 0.2
STIFF_GAIN_REFERENCE_OMEGA = 1e-5  # |G| normalized to 1 here


def _modal_pair(omega_o: float, zeta: float) -> tuple[complex, complex]:
    rho = np.exp(-zeta * omega_o)
    sigma = np.sqrt(1.0 - zeta * zeta) * omega_o
    p = rho * np.exp(1j * sigma)
    return p, np.conj(p)


def stiff_benchmark() -> BenchmarkSystem:
    """Ninth-order plant with mode clusters three decades apart."""
    poles: list[complex] = []
    for w0, zeta in STIFF_POLE_MODES:
        poles.extend(_modal_pair(w0, zeta))
    poles.append(STIFF_REAL_POLE + 0j)
    zeros: list[complex] = []
    for w0, zeta in STIFF_ZERO_MODES:
        zeros.extend(_modal_pair(w0, zeta))

    zpk = ZpkForm(zeros=np.array(zeros), poles=np.array(poles), gain=1.0)
    ref = abs(zpk.eval_z(np.exp(1j * STIFF_GAIN_REFERENCE_OMEGA)))
    zpk = ZpkForm(zeros=zpk.zeros, poles=zpk.poles, gain=1.0 / ref)

    num, den = zpk.coeffs()
    model = RationalModel(num=num, den=den, zpk=zpk)
    return BenchmarkSystem(
        id="stiff",
        model=model,
        description="order-9 plant: resonant/antiresonant clusters near "
                    "1 rad/sample and 1e-3 rad/sample plus a real pole",
        excitation={"kind": "prbs", "registers": 11, "amplitude": 1.0},
        noise={"snr_db": 22.0, "seed": 1234},
    )


BENCHMARKS = {"stiff": stiff_benchmark}


# ---------------------------------------------------------------------------
# experiment configuration
# ---------------------------------------------------------------------------

EXPERIMENT_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["name", "predictor"],
    "additionalProperties": False,
    "properties": {
        "version": {"type": "integer", "minimum": 1},
        "name": {"type": "string", "minLength": 1},
        "source": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "benchmark": {"type": "string", "enum": sorted(BENCHMARKS)},
                "data": {"type": "string", "minLength": 1},
            },
        },
        "predictor": {
            "type": "object",
            "required": ["scheme", "poles", "order"],
            "additionalProperties": False,
            "properties": {
                "scheme": {"type": "string", "enum": list(SCHEMES)},
                "poles": {
                    "type": "array", "minItems": 1,
                    "items": {
                        "anyOf": [
                            {"type": "number"},
                            {"type": "array", "minItems": 2, "maxItems": 2,
                             "items": {"type": "number"}},
                        ],
                    },
                },
                "order": {"type": "integer", "minimum": 1},
            },
        },
        "adaptation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "f0_scale": {"type": "number", "exclusiveMinimum": 0},
                "lambda1": {"type": "number", "exclusiveMinimum": 0,
                            "maximum": 1},
                "lambda2": {"type": "number", "minimum": 0,
                            "exclusiveMaximum": 2},
            },
        },
        "excitation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "registers": {"type": "integer", "minimum": 2, "maximum": 32},
                "samples": {"type": ["integer", "null"], "minimum": 2},
                "amplitude": {"type": "number", "exclusiveMinimum": 0},
            },
        },
        "noise": {
            "type": ["object", "null"],
            "additionalProperties": False,
            "properties": {
                "snr_db": {"type": "number"},
                "seed": {"type": "integer", "minimum": 0},
            },
        },
        "bands": {
            "type": "object",
            "minProperties": 1,
            "additionalProperties": {
                "type": "array", "minItems": 2, "maxItems": 2,
                "items": {"type": "number"},
            },
        },
        "out_dir": {"type": ["string", "null"]},
    },
}


def _as_pole(entry) -> complex:
    if isinstance(entry, (list, tuple)):
        return complex(float(entry[0]), float(entry[1]))
    return complex(float(entry), 0.0)


@dataclass
class ExperimentConfig:
    """One scripted identification run; serializable to/from JSON."""

    name: str
    scheme: str
    basis_poles: tuple
    order: int
    benchmark: Optional[str] = "stiff"
    data_path: Optional[str] = None
    registers: int = 11
    samples: Optional[int] = None
    amplitude: float = 1.0
    snr_db: Optional[float] = 22.0
    noise_seed: int = 1234
    f0_scale: float = 1000.0
    lambda1: float = 1.0
    lambda2: float = 1.0
    bands: dict = field(default_factory=lambda: dict(DEFAULT_BANDS))
    out_dir: Optional[str] = None

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        self.basis_poles = tuple(complex(p) for p in self.basis_poles)
        if (self.benchmark is None) == (self.data_path is None):
            raise ValueError("exactly one of benchmark/data_path required")
        if self.benchmark is not None and self.benchmark not in BENCHMARKS:
            raise ValueError(f"unknown benchmark {self.benchmark!r}")
        if self.order % len(self.basis_poles):
            raise ValueError("order must be a multiple of the pole count")
        if self.registers not in PRBS_TAPS:
            raise ValueError("registers must be in 2..32")
        if self.samples is not None and self.samples < 2:
            raise ValueError("samples must be at least 2")
        for name, (lo, hi) in self.bands.items():
            if not 0.0 < lo < hi <= np.pi + 1e-12:
                raise ValueError(f"band {name!r} must satisfy 0 < lo < hi <= pi")

    # -- JSON round trip ----------------------------------------------------
    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        import jsonschema
        jsonschema.validate(doc, EXPERIMENT_SCHEMA)
        source = doc.get("source", {"benchmark": "stiff"})
        if ("benchmark" in source) == ("data" in source):
            raise ValueError("source needs exactly one of benchmark/data")
        pred = doc["predictor"]
        adapt = doc.get("adaptation", {})
        exc = doc.get("excitation", {})
        noise = doc.get("noise", {"snr_db": 22.0, "seed": 1234})
        return cls(
            name=doc["name"],
            scheme=pred["scheme"],
            basis_poles=tuple(_as_pole(p) for p in pred["poles"]),
            order=int(pred["order"]),
            benchmark=source.get("benchmark"),
            data_path=source.get("data"),
            registers=int(exc.get("registers", 11)),
            samples=exc.get("samples"),
            amplitude=float(exc.get("amplitude", 1.0)),
            snr_db=None if noise is None else float(noise.get("snr_db", 22.0)),
            noise_seed=1234 if noise is None else int(noise.get("seed", 1234)),
            f0_scale=float(adapt.get("f0_scale", 1000.0)),
            lambda1=float(adapt.get("lambda1", 1.0)),
            lambda2=float(adapt.get("lambda2", 1.0)),
            bands={k: (float(v[0]), float(v[1]))
                   for k, v in doc.get("bands", DEFAULT_BANDS).items()},
            out_dir=doc.get("out_dir"),
        )

    def to_dict(self) -> dict:
        poles = [[p.real, p.imag] if p.imag else p.real
                 for p in self.basis_poles]
        doc = {
            "version": gio.FORMAT_VERSION,
            "name": self.name,
            "source": ({"benchmark": self.benchmark}
                       if self.benchmark else {"data": self.data_path}),
            "predictor": {"scheme": self.scheme, "poles": poles,
                          "order": self.order},
            "adaptation": {"f0_scale": self.f0_scale,
                           "lambda1": self.lambda1, "lambda2": self.lambda2},
            "excitation": {"registers": self.registers,
                           "samples": self.samples,
                           "amplitude": self.amplitude},
            "noise": (None if self.snr_db is None
                      else {"snr_db": self.snr_db, "seed": self.noise_seed}),
            "bands": {k: [lo, hi] for k, (lo, hi) in self.bands.items()},
            "out_dir": self.out_dir,
        }
        return doc


def builtin_experiments() -> dict[str, ExperimentConfig]:
    """The three bundled runs on the stiff plant (H-ERLS throughout).

    short-fast-pole   Laguerre basis at 0.6, one short PRBS period; the
                      fast cluster fits, the slow one is ignored.
    long-slow-pole    Laguerre basis at 0.9996, full 20-register PRBS;
                      the slow cluster fits, the fast one degrades.
    long-two-pole     poles (0.6, 0.9996); both clusters fit.
    """
    common = dict(scheme="herls", benchmark="stiff", amplitude=1.0,
                  snr_db=22.0, noise_seed=1234)
    runs = [
        ExperimentConfig(name="short-fast-pole", basis_poles=(0.6,),
                         order=6, registers=11, **common),
        ExperimentConfig(name="long-slow-pole", basis_poles=(0.9996,),
                         order=6, registers=20, **common),
        ExperimentConfig(name="long-two-pole", basis_poles=(0.6, 0.9996),
                         order=10, registers=20, **common),
    ]
    return {cfg.name: cfg for cfg in runs}


# ---------------------------------------------------------------------------
# experiment driver
# ---------------------------------------------------------------------------

BODE_GRID_POINTS = 800
BODE_OMEGA_MIN = 1e-5


def _bode_grid() -> np.ndarray:
    return np.geomspace(BODE_OMEGA_MIN, np.pi, BODE_GRID_POINTS)


def _load_source(cfg: ExperimentConfig):
    """Returns (truth model or None, u, y, sigma of added noise)."""
    if cfg.data_path is not None:
        _, u, y = gio.read_record_csv(cfg.data_path)
        return None, u, y, None
    system = BENCHMARKS[cfg.benchmark]()
    n = cfg.samples if cfg.samples is not None else prbs_period(cfg.registers)
    u = prbs(cfg.registers, n, cfg.amplitude).samples
    clean = simulate(system.model, u).samples
    if cfg.snr_db is None:
        return system.model, u, clean, 0.0
    sigma = float(np.std(clean)) * 10.0 ** (-cfg.snr_db / 20.0)
    y = clean + NoiseSpec(sigma, cfg.noise_seed).realize(n)
    return system.model, u, y, sigma


def run_experiment(cfg: ExperimentConfig,
                   out_dir: Union[str, Path, None] = None) -> dict:
    """Run one configured experiment; write artifacts if a directory is set.

    Returns the summary dict (same content as ``summary.json``).  Artifact
    bytes are deterministic for a fixed config: rerunning overwrites each
    file with identical content.  On a failure partway through the write
    phase, files already written for this run are removed.
    """
    truth, u, y, sigma = _load_source(cfg)
    spec = validate_basis(cfg.basis_poles)
    pconfig = PredictorConfig(scheme_structure(cfg.scheme), spec, cfg.order)
    stride = max(1, (len(u) - 1) // 512)
    options = AdaptationOptions(
        f0_scale=cfg.f0_scale, lambda1=cfg.lambda1, lambda2=cfg.lambda2,
        trajectory_stride=stride, raise_on_divergence=False)
    res = run_identification(pconfig, u, y, options)

    report = None
    if truth is not None and not res.diverged:
        report = band_fit(truth, res.theta, cfg.bands)
    tail = res.eps[-max(100, res.steps // 10):]
    chi_w, chi_v = chi_curve(spec)

    summary = {
        "name": cfg.name,
        "config": cfg.to_dict(),
        "samples": int(len(u)),
        "noise_sigma": sigma,
        "scheme": cfg.scheme,
        "backend": res.backend,
        "diverged": res.diverged,
        "steps": res.steps,
        "residual_std_tail": float(np.std(tail)),
        "stationarity_norm": float(np.max(np.abs(res.stationarity))),
        "band_fit": None if report is None else report.as_dict(),
        "spr": None if res.spr is None else res.spr.as_dict(),
        "notes": dict(res.meta),
    }

    if out_dir is None:
        out_dir = cfg.out_dir
    if out_dir is None:
        return summary

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    try:
        w = _bode_grid()
        if truth is not None:
            mag, ph = bode(truth, w)
            written.append(gio.write_bode_csv(out / "bode_truth.csv",
                                              w, mag, ph))
        if not res.diverged:
            mag, ph = bode(GobfResponse(res.theta, "io"), w)
            written.append(gio.write_bode_csv(out / "bode_model.csv",
                                              w, mag, ph))
        written.append(gio.write_chi_csv(out / "chi.csv", chi_w, chi_v))
        if res.trajectory is not None:
            written.append(gio.write_trajectory_csv(
                out / "theta_trajectory.csv", res.trajectory_idx,
                res.trajectory))
        if report is not None:
            written.append(gio.write_json(out / "bandfit.json",
                                          report.as_dict()))
        if res.spr is not None:
            written.append(gio.write_json(out / "spr.json",
                                          res.spr.as_dict()))
        if res.model is not None:
            written.append(gio.write_model_json(out / "model.json",
                                                res.model))
        summary["artifacts"] = sorted(p.name for p in written) \
            + ["summary.json"]
        written.append(gio.write_json(out / "summary.json", summary))
    except BaseException:
        for p in written:
            p.unlink(missing_ok=True)
        raise
    return summary
