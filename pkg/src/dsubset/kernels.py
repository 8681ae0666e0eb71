"""Backend selection for the hot loops.

The compiled extension ``dsubset._kernels`` is used when it can be
imported; otherwise the numpy implementation in ``dsubset._kernels_py``
is used.  Setting ``DSUBSET_BACKEND=python`` forces the fallback.
"""
from __future__ import annotations

import contextlib
import os

from . import _kernels_py

_BACKENDS = {"python": _kernels_py}
try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None
else:
    _BACKENDS["compiled"] = _compiled

_active = _kernels_py
BACKEND = "python"


def available() -> list[str]:
    return sorted(_BACKENDS)


def use(name: str) -> None:
    """Switch the process-wide backend (``"compiled"`` or ``"python"``)."""
    global _active, BACKEND
    try:
        _active = _BACKENDS[name]
    except KeyError:
        raise ValueError(f"backend {name!r} unavailable; have {available()}") from None
    BACKEND = name


@contextlib.contextmanager
def using(name: str):
    previous = BACKEND
    use(name)
    try:
        yield
    finally:
        use(previous)


def project_out(W, pivot, v2, active):
    _active.project_out(W, pivot, v2, active)


def masked_argmax(v, active, rtol):
    return _active.masked_argmax(v, active, rtol)


def abs_dot(F, b, out):
    # a matrix-vector product: BLAS beats a compiled loop, so not compiled
    _kernels_py.abs_dot(F, b, out)


use("python" if os.environ.get("DSUBSET_BACKEND") == "python" or _compiled is None
    else "compiled")
