"""Kernel backend selection.

The compiled extension (``fd2k._kernels``) is preferred when it imported
cleanly; otherwise the NumPy implementation is used.  ``FD2K_BACKEND=numpy``
or ``FD2K_BACKEND=compiled`` forces the choice at import time, and ``use()``
switches it at runtime (the benchmark and the cross-backend tests rely on
this).  Both backends implement the same contract, documented in
``_kernels_np``.
"""

from __future__ import annotations

import os

from . import _kernels_np

OUT_LINEAR = _kernels_np.OUT_LINEAR
OUT_SIGMOID = _kernels_np.OUT_SIGMOID

_BACKENDS = {"numpy": _kernels_np}

try:  # the extension is optional; losing it only costs speed
    from . import _kernels as _kernels_ext

    _BACKENDS["compiled"] = _kernels_ext
except ImportError:  # pragma: no cover - depends on the build environment
    _kernels_ext = None

_active = _BACKENDS.get("compiled", _kernels_np)

_forced = os.environ.get("FD2K_BACKEND")
if _forced:
    if _forced not in _BACKENDS:
        raise ImportError(
            f"FD2K_BACKEND={_forced!r} not available; choices: {sorted(_BACKENDS)}"
        )
    _active = _BACKENDS[_forced]


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def active_backend() -> str:
    return _active.name


def use(name: str) -> None:
    """Switch the active kernel backend ('numpy' or 'compiled')."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; choices: {sorted(_BACKENDS)}")
    _active = _BACKENDS[name]


def mlp_forward(weights, biases, out_act, x):
    return _active.mlp_forward(weights, biases, out_act, x)


def mlp_backward(weights, biases, out_act, x, hs, g_out, gws=None, gbs=None):
    return _active.mlp_backward(weights, biases, out_act, x, hs, g_out, gws, gbs)
