"""Identification loop kernels: compiled extension with python fallback.

The compiled module is preferred when importable; GOBFID_FORCE_BACKEND
("py" or "cy") overrides the choice, and per-call ``backend`` overrides
both.  Both kernels implement the same contract; see _loop_py.run_loop.
"""
from __future__ import annotations

import os

from . import _loop_py

try:
    from . import _loop_cy
    HAVE_COMPILED = True
except ImportError:
    _loop_cy = None
    HAVE_COMPILED = False

ARX, ARMAX, OE = _loop_py.ARX, _loop_py.ARMAX, _loop_py.OE


def active_backend(backend: str | None = None) -> str:
    choice = backend or os.environ.get("GOBFID_FORCE_BACKEND")
    if choice is None:
        return "cy" if HAVE_COMPILED else "py"
    if choice not in ("py", "cy"):
        raise ValueError(f"unknown kernel backend {choice!r}")
    if choice == "cy" and not HAVE_COMPILED:
        raise RuntimeError("compiled kernel requested but not importable")
    return choice


def run_loop(*args, backend: str | None = None, **kwargs):
    if active_backend(backend) == "cy":
        return _loop_cy.run_loop(*args, **kwargs)
    return _loop_py.run_loop(*args, **kwargs)
