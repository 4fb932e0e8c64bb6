"""Artifact readers and writers (CSV columns, versioned JSON).

Every JSON document carries a ``version`` field and a tool stamp so that
artifact directories stay self-describing.  CSV files use full-precision
``%.17g`` floats and a plain comma-separated header line, which keeps
reruns byte-identical and the files trivially loadable from numpy,
pandas, or a spreadsheet.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ._version import __version__

FORMAT_VERSION = 1

PathLike = Union[str, Path]


def tool_stamp() -> dict:
    return {"name": "gobfid", "version": __version__}


def jsonify(obj):
    """Recursively convert numpy containers/scalars to plain Python."""
    if isinstance(obj, dict):
        return {str(k): jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonify(v) for v in obj]
    if isinstance(obj, np.ndarray):
        if np.iscomplexobj(obj):
            return [[float(v.real), float(v.imag)] for v in obj.ravel()]
        return [jsonify(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, complex):
        return [float(obj.real), float(obj.imag)]
    return obj


def write_json(path: PathLike, payload: dict) -> Path:
    """Write a JSON document, injecting ``version`` and ``tool`` fields."""
    doc = dict(jsonify(payload))
    doc.setdefault("version", FORMAT_VERSION)
    doc.setdefault("tool", tool_stamp())
    path = Path(path)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return path


def read_json(path: PathLike) -> dict:
    doc = json.loads(Path(path).read_text())
    if not isinstance(doc, dict):
        raise ValueError(f"{path}: expected a JSON object at top level")
    return doc


# ---------------------------------------------------------------------------
# column-oriented CSV
# ---------------------------------------------------------------------------

def write_columns_csv(path: PathLike, names: Sequence[str],
                      columns: Sequence) -> Path:
    """Write equal-length 1-d columns as CSV with a header line."""
    if len(names) != len(columns):
        raise ValueError("one name per column required")
    cols = [np.asarray(c, dtype=float).reshape(-1) for c in columns]
    n = cols[0].size
    if any(c.size != n for c in cols):
        raise ValueError("columns must have equal length")
    path = Path(path)
    np.savetxt(path, np.column_stack(cols), delimiter=",",
               header=",".join(names), comments="", fmt="%.17g")
    return path


def read_columns_csv(path: PathLike,
                     required: Sequence[str] = ()) -> dict[str, np.ndarray]:
    """Read a header-first CSV into a name -> column dict."""
    path = Path(path)
    with path.open() as fh:
        header = fh.readline().strip()
        if not header:
            raise ValueError(f"{path}: empty file")
        names = [h.strip() for h in header.split(",")]
        try:
            data = np.loadtxt(fh, delimiter=",", ndmin=2)
        except ValueError as ex:
            raise ValueError(f"{path}: malformed numeric data: {ex}") from ex
    if data.size == 0:
        data = data.reshape(0, len(names))
    if data.shape[1] != len(names):
        raise ValueError(f"{path}: header names {len(names)} columns, "
                         f"rows have {data.shape[1]}")
    missing = [r for r in required if r not in names]
    if missing:
        raise ValueError(f"{path}: missing required columns {missing} "
                         f"(header: {header!r})")
    return {name: data[:, j].copy() for j, name in enumerate(names)}


# ---------------------------------------------------------------------------
# specific artifact shapes
# ---------------------------------------------------------------------------

def write_record_csv(path: PathLike, t, u, y) -> Path:
    return write_columns_csv(path, ("t", "u", "y"), (t, u, y))


def read_record_csv(path: PathLike) -> tuple[np.ndarray, np.ndarray,
                                             np.ndarray]:
    """Read an input/output record; the ``t,u,y`` header is mandatory."""
    cols = read_columns_csv(path, required=("t", "u", "y"))
    return cols["t"], cols["u"], cols["y"]


def write_bode_csv(path: PathLike, omega, mag_db, phase_deg) -> Path:
    return write_columns_csv(path, ("omega", "mag_db", "phase_deg"),
                             (omega, mag_db, phase_deg))


def write_chi_csv(path: PathLike, omega, chi) -> Path:
    return write_columns_csv(path, ("omega", "chi"), (omega, chi))


def write_spectrum_csv(path: PathLike, omega, density) -> Path:
    return write_columns_csv(path, ("omega", "density"), (omega, density))


def write_trajectory_csv(path: PathLike, steps, theta: np.ndarray,
                         ) -> Path:
    """Parameter snapshots: one row per recorded step."""
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 2:
        raise ValueError("theta must be (n_snapshots, n_params)")
    names = ["step"] + [f"theta_{j}" for j in range(theta.shape[1])]
    cols = [np.asarray(steps, dtype=float)] + list(theta.T)
    return write_columns_csv(path, names, cols)


def model_to_dict(model) -> dict:
    """Serializable view of a rational model (coefficient arrays)."""
    doc = {
        "num": np.asarray(model.num, dtype=float),
        "den": np.asarray(model.den, dtype=float),
        "noise_num": None if model.noise_num is None
        else np.asarray(model.noise_num, dtype=float),
    }
    return doc


def write_model_json(path: PathLike, model,
                     extra: Optional[dict] = None) -> Path:
    doc = model_to_dict(model)
    if extra:
        doc.update(extra)
    return write_json(path, doc)
