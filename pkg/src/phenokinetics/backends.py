"""Kernel backend selection: compiled extension if built, NumPy otherwise.

The environment variable ``PHENOKINETICS_BACKEND`` forces a choice
(``compiled`` or ``python``); by default the compiled extension is preferred
when importable.  Both backends expose ``kernel_apply``, ``pde_step`` and
``abm_resolve`` with identical semantics.
"""
from __future__ import annotations

import os

from . import _kernels_py


def _load_compiled():
    try:
        from . import _kernels
        return _kernels
    except ImportError:
        return None


def available_backends() -> dict:
    out = {"python": _kernels_py}
    compiled = _load_compiled()
    if compiled is not None:
        out["compiled"] = compiled
    return out


def get_backend(name: str):
    backends = available_backends()
    if name not in backends:
        raise ValueError(f"backend {name!r} not available; have {sorted(backends)}")
    return backends[name]


def _select():
    forced = os.environ.get("PHENOKINETICS_BACKEND")
    if forced:
        return forced, get_backend(forced)
    compiled = _load_compiled()
    if compiled is not None:
        return "compiled", compiled
    return "python", _kernels_py


BACKEND, _impl = _select()

kernel_apply = _impl.kernel_apply
pde_step = _impl.pde_step
abm_resolve = _impl.abm_resolve
