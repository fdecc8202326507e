"""Backend selection for the trial kernel.

The compiled extension is used when it imports; otherwise, or when the
environment variable ``JAMDETECT_BACKEND=python`` is set, the NumPy
implementation is used. Both compute the same statistic from the same
random streams.
"""
from __future__ import annotations

import os

from . import _kernel_py

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS = {"python": _kernel_py.trial_sums}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled.trial_sums


def _default_backend() -> str:
    requested = os.environ.get("JAMDETECT_BACKEND", "").strip().lower()
    if requested:
        if requested not in BACKENDS:
            raise ImportError(f"JAMDETECT_BACKEND={requested!r} is not available; have {sorted(BACKENDS)}")
        return requested
    return "compiled" if _compiled is not None else "python"


BACKEND = _default_backend()


def get_trial_sums(backend: str | None = None):
    name = backend or BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}") from None
