"""NumPy implementation of the dense-network kernels.

This is the fallback backend and the reference semantics for the compiled
extension: batched forward/backward passes through a stack of fully connected
layers with ELU hidden units and a sigmoid or linear output layer.

Conventions shared by both backends:

* ``x`` is a C-contiguous ``(batch, d0)`` float64 array.
* ``weights[l]`` has shape ``(d_l, d_{l+1})``, ``biases[l]`` shape ``(d_{l+1},)``.
* ``out_act`` is ``OUT_LINEAR`` or ``OUT_SIGMOID``.
* ``mlp_forward`` returns ``(y, hs)`` where ``hs[l]`` is the post-activation
  output of layer ``l`` (``hs[-1] is y``); these activations are the cache
  consumed by ``mlp_backward``.
* ``mlp_backward`` propagates ``g_out`` (same shape as ``y``) back to the
  input, optionally filling preallocated per-layer parameter-gradient arrays
  ``gws``/``gbs``.  Parameter gradients are the exact reverse-mode derivative
  of ``sum(g_out * y)``; no batch scaling is applied here.
"""

from __future__ import annotations

import numpy as np

OUT_LINEAR = 0
OUT_SIGMOID = 1

name = "numpy"


def _elu(z: np.ndarray) -> np.ndarray:
    # exp only where z <= 0 to avoid overflow warnings on large activations
    out = np.where(z > 0.0, z, np.expm1(np.minimum(z, 0.0)))
    return out


def mlp_forward(weights, biases, out_act, x):
    h = x
    hs = []
    last = len(weights) - 1
    for l, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w
        z += b
        if l < last:
            h = _elu(z)
        elif out_act == OUT_SIGMOID:
            # sigmoid via the numerically stable tanh identity
            h = 0.5 * (np.tanh(0.5 * z) + 1.0)
        else:
            h = z
        hs.append(h)
    return hs[-1], hs


def mlp_backward(weights, biases, out_act, x, hs, g_out, gws=None, gbs=None):
    last = len(weights) - 1
    y = hs[last]
    if out_act == OUT_SIGMOID:
        delta = g_out * (y * (1.0 - y))
    else:
        delta = np.array(g_out, dtype=np.float64, copy=True)
    for l in range(last, -1, -1):
        inp = x if l == 0 else hs[l - 1]
        if gws is not None:
            np.matmul(inp.T, delta, out=gws[l])
            np.sum(delta, axis=0, out=gbs[l])
        g_in = delta @ weights[l].T
        if l > 0:
            h_prev = hs[l - 1]
            # d/dz elu(z) == 1 for z > 0, else exp(z) == h + 1
            delta = g_in * np.where(h_prev > 0.0, 1.0, h_prev + 1.0)
    return g_in
