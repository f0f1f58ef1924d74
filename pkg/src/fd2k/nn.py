"""Dense feed-forward networks with hand-written reverse-mode gradients.

Everything an actor or critic needs: Glorot-uniform initialisation, batched
forward/backward passes (ELU hidden layers, sigmoid or linear output), Adam
with bias correction, soft target-network tracking, and a binary model
format.  Parameters live in a single flat float64 vector with per-layer
views, so optimiser steps, federated averaging and serialization are all
plain vector operations.

Networks and optimiser states are value-like: operations return new objects
instead of mutating arrays in place.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np

from . import backend

_MAGIC = b"FD2K"
_FORMAT_VERSION = 1
_OUTPUT_ACTIVATIONS = ("linear", "sigmoid")  # index doubles as the wire tag
_HIDDEN_TAG = 2  # elu; fixed, stored for format completeness


class ModelFormatError(ValueError):
    """Raised when serialized model bytes cannot be decoded."""


def param_count(layer_dims) -> int:
    dims = tuple(layer_dims)
    return sum(dims[l] * dims[l + 1] + dims[l + 1] for l in range(len(dims) - 1))


def _param_views(flat: np.ndarray, dims: tuple[int, ...]):
    """Row-major [W0, b0, W1, b1, ...] views into ``flat``."""
    weights, biases, off = [], [], 0
    for l in range(len(dims) - 1):
        d_in, d_out = dims[l], dims[l + 1]
        weights.append(flat[off : off + d_in * d_out].reshape(d_in, d_out))
        off += d_in * d_out
        biases.append(flat[off : off + d_out])
        off += d_out
    return weights, biases


class Mlp:
    """Immutable-by-convention dense network.

    ``weights[l]`` has shape ``(dims[l], dims[l+1])``; hidden layers apply
    ELU (alpha=1), the output layer applies ``output_activation``.
    """

    __slots__ = ("layer_dims", "output_activation", "flat", "weights", "biases")

    def __init__(self, layer_dims, output_activation: str, flat: np.ndarray):
        dims = tuple(int(d) for d in layer_dims)
        if len(dims) < 2 or any(d < 1 for d in dims):
            raise ValueError(f"layer_dims must be >= 2 positive sizes, got {dims}")
        if output_activation not in _OUTPUT_ACTIVATIONS:
            raise ValueError(f"unknown output activation {output_activation!r}")
        flat = np.ascontiguousarray(flat, dtype=np.float64)
        if flat.shape != (param_count(dims),):
            raise ValueError(
                f"parameter vector has {flat.size} entries, dims {dims} need {param_count(dims)}"
            )
        if not np.all(np.isfinite(flat)):
            raise ValueError("network parameters must be finite")
        self.layer_dims = dims
        self.output_activation = output_activation
        self.flat = flat
        self.weights, self.biases = _param_views(flat, dims)

    @property
    def in_dim(self) -> int:
        return self.layer_dims[0]

    @property
    def out_dim(self) -> int:
        return self.layer_dims[-1]

    @property
    def _act_code(self) -> int:
        return backend.OUT_SIGMOID if self.output_activation == "sigmoid" else backend.OUT_LINEAR

    def copy(self) -> "Mlp":
        return Mlp(self.layer_dims, self.output_activation, self.flat.copy())

    def with_flat(self, flat: np.ndarray) -> "Mlp":
        """Same architecture, new parameter vector."""
        return Mlp(self.layer_dims, self.output_activation, flat)

    def forward(self, x):
        """Run the network on one vector or a batch.

        Returns ``(output, cache)``; the cache feeds :meth:`backward`.
        """
        x2, squeezed = _as_batch(x, self.in_dim, "input")
        y, hs = backend.mlp_forward(self.weights, self.biases, self._act_code, x2)
        cache = ForwardCache(x=x2, hs=hs, squeezed=squeezed)
        return (y[0] if squeezed else y), cache

    def backward(self, cache: "ForwardCache", output_gradient, *, param_grads: bool = True):
        """Exact reverse-mode derivatives of ``sum(output_gradient * forward(x))``.

        Returns ``(gradients, input_gradient)``; ``gradients`` is None when
        ``param_grads`` is False (the chained-critic path only needs the
        input gradient).
        """
        self._check_cache(cache)
        g2, _ = _as_batch(output_gradient, self.out_dim, "output gradient")
        if g2.shape[0] != cache.x.shape[0]:
            raise ValueError(
                f"output gradient batch {g2.shape[0]} != cache batch {cache.x.shape[0]}"
            )
        grads = None
        gws = gbs = None
        if param_grads:
            grads = Gradients.zeros(self.layer_dims)
            gws, gbs = grads.weights, grads.biases
        g_in = backend.mlp_backward(
            self.weights, self.biases, self._act_code, cache.x, cache.hs, g2, gws, gbs
        )
        return grads, (g_in[0] if cache.squeezed else g_in)

    def _check_cache(self, cache: "ForwardCache") -> None:
        dims = self.layer_dims
        if (
            not isinstance(cache, ForwardCache)
            or len(cache.hs) != len(dims) - 1
            or cache.x.shape[1] != dims[0]
            or any(h.shape != (cache.x.shape[0], dims[l + 1]) for l, h in enumerate(cache.hs))
        ):
            raise ValueError("forward cache does not match this network")


@dataclass(frozen=True)
class ForwardCache:
    """Per-layer activations captured by :meth:`Mlp.forward`."""

    x: np.ndarray
    hs: list
    squeezed: bool


class Gradients:
    """Parameter gradients, flat vector + views, congruent with an Mlp."""

    __slots__ = ("layer_dims", "flat", "weights", "biases")

    def __init__(self, layer_dims, flat: np.ndarray):
        self.layer_dims = tuple(layer_dims)
        self.flat = flat
        self.weights, self.biases = _param_views(flat, self.layer_dims)

    @classmethod
    def zeros(cls, layer_dims) -> "Gradients":
        return cls(layer_dims, np.zeros(param_count(layer_dims)))


def _as_batch(x, dim: int, what: str):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim == 1:
        if arr.shape[0] != dim:
            raise ValueError(f"{what} has length {arr.shape[0]}, expected {dim}")
        return arr.reshape(1, dim), True
    if arr.ndim == 2:
        if arr.shape[1] != dim:
            raise ValueError(f"{what} has width {arr.shape[1]}, expected {dim}")
        return arr, False
    raise ValueError(f"{what} must be a vector or a batch, got ndim={arr.ndim}")


def init_mlp(layer_dims, output_activation: str, seed) -> Mlp:
    """Glorot-uniform weights, zero biases; layer-by-layer draws under ``seed``."""
    dims = tuple(int(d) for d in layer_dims)
    flat = np.zeros(param_count(dims))
    net = Mlp(dims, output_activation, flat)
    rng = np.random.default_rng(seed)
    for w in net.weights:
        limit = np.sqrt(6.0 / (w.shape[0] + w.shape[1]))
        w[:] = rng.uniform(-limit, limit, size=w.shape)
    return net


@dataclass(frozen=True)
class AdamState:
    """Adam moments and step counter for one network."""

    learning_rate: float
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_net(cls, net: Mlp, learning_rate: float) -> "AdamState":
        n = net.flat.size
        return cls(learning_rate=learning_rate, m=np.zeros(n), v=np.zeros(n))


def adam_step(net: Mlp, grads: Gradients, state: AdamState):
    """One Adam update (bias-corrected). Returns ``(new_net, new_state)``."""
    g = grads.flat
    if g.shape != net.flat.shape or grads.layer_dims != net.layer_dims:
        raise ValueError("gradient layout does not match the network")
    if state.m.shape != net.flat.shape:
        raise ValueError("optimizer state does not match the network")
    bad = int(np.size(g) - np.sum(np.isfinite(g)))
    if bad:
        raise ValueError(f"rejecting update: {bad} non-finite gradient entries")
    t = state.step + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * (g * g)
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    flat = net.flat - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return net.with_flat(flat), replace(state, step=t, m=m, v=v)


def soft_update(target: Mlp, online: Mlp, rho: float) -> Mlp:
    """theta_target <- rho * theta_online + (1 - rho) * theta_target."""
    if target.layer_dims != online.layer_dims or target.output_activation != online.output_activation:
        raise ValueError("target and online networks are not shape-congruent")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must be in [0, 1], got {rho}")
    return target.with_flat(rho * online.flat + (1.0 - rho) * target.flat)


def serialize(net: Mlp) -> bytes:
    """Little-endian binary: magic, version, dims, activation tags, f64 params."""
    dims = net.layer_dims
    header = _MAGIC + struct.pack(
        "<II", _FORMAT_VERSION, len(dims)
    ) + struct.pack(f"<{len(dims)}I", *dims) + struct.pack(
        "<BB", _HIDDEN_TAG, _OUTPUT_ACTIVATIONS.index(net.output_activation)
    )
    return header + net.flat.astype("<f8").tobytes()


def deserialize(data: bytes) -> Mlp:
    if data[:4] != _MAGIC:
        raise ModelFormatError("bad magic: not a model file")
    off = 4
    try:
        version, n_dims = struct.unpack_from("<II", data, off)
        off += 8
        if version != _FORMAT_VERSION:
            raise ModelFormatError(f"unsupported format version {version}")
        dims = struct.unpack_from(f"<{n_dims}I", data, off)
        off += 4 * n_dims
        hidden_tag, out_tag = struct.unpack_from("<BB", data, off)
        off += 2
    except struct.error as exc:
        raise ModelFormatError(f"truncated header: {exc}") from None
    if hidden_tag != _HIDDEN_TAG or out_tag >= len(_OUTPUT_ACTIVATIONS):
        raise ModelFormatError(f"unknown activation tags ({hidden_tag}, {out_tag})")
    n_params = param_count(dims)
    body = data[off:]
    if len(body) != 8 * n_params:
        raise ModelFormatError(
            f"payload holds {len(body)} bytes, dims {tuple(dims)} need {8 * n_params}"
        )
    flat = np.frombuffer(body, dtype="<f8").astype(np.float64)
    return Mlp(dims, _OUTPUT_ACTIVATIONS[out_tag], flat)


def save(net: Mlp, path) -> None:
    with open(path, "wb") as fh:
        fh.write(serialize(net))


def load(path) -> Mlp:
    with open(path, "rb") as fh:
        return deserialize(fh.read())
