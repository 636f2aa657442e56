"""Dense feed-forward networks with hand-derived reverse-mode gradients.

Two network roles share one parameter container:

  * value network: maps (state, action) to a scalar value estimate; the
    action vector is withheld from the first layer and concatenated into the
    input of the injection layer (second layer by default); hidden layers are
    ReLU, the output unit is linear.
  * policy network: maps state to a bounded action; hidden layers are ReLU,
    the output layer is tanh scaled and shifted onto the actuator interval,
    so outputs always respect the bounds.

All math is float64. Gradients are exact reverse-mode accumulations (the
ReLU derivative at exactly 0 is taken as 0, consistently in forward and
backward). Forward passes are pure; apply_gradients mutates in place.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass, field

import numpy as np

CHECKPOINT_MAGIC = b"ADMLP1\n"


@dataclass
class Mlp:
    """Layered parameters plus structural metadata.

    weights[i] has shape (fan_in_i, fan_out_i); biases[i] has shape
    (fan_out_i,). If inject_at is not None, layer inject_at receives the
    action (inject_dim extra inputs) appended to its input. out_scale and
    out_offset, when present, apply an affine map to the final activation.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activations: tuple[str, ...]
    inject_at: int | None = None
    inject_dim: int = 0
    out_scale: np.ndarray | None = None
    out_offset: np.ndarray | None = None

    @property
    def state_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def out_dim(self) -> int:
        return self.weights[-1].shape[1]

    def copy(self) -> "Mlp":
        return Mlp(
            weights=[w.copy() for w in self.weights],
            biases=[b.copy() for b in self.biases],
            activations=self.activations,
            inject_at=self.inject_at,
            inject_dim=self.inject_dim,
            out_scale=None if self.out_scale is None else self.out_scale.copy(),
            out_offset=None if self.out_offset is None else self.out_offset.copy(),
        )


@dataclass
class GradientBundle:
    """Per-layer gradients mirroring an Mlp's weights and biases."""

    d_weights: list[np.ndarray]
    d_biases: list[np.ndarray]


def _uniform_init(rng: np.random.Generator, fan_in: int, fan_out: int,
                  bound: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    b = bound if bound is not None else 1.0 / np.sqrt(fan_in)
    w = rng.uniform(-b, b, size=(fan_in, fan_out))
    bias = rng.uniform(-b, b, size=fan_out)
    return w, bias


def init_critic(state_dim: int, action_dim: int = 2,
                hidden: tuple[int, ...] = (64, 64, 32),
                rng: np.random.Generator | None = None) -> Mlp:
    """Value network: state into layer 1, action concatenated into layer 2,
    scalar linear output. Hidden weights start uniform in +-1/sqrt(fan_in),
    the output layer in +-3e-3 so initial value estimates sit near zero."""
    rng = rng if rng is not None else np.random.default_rng()
    dims = [state_dim, *hidden, 1]
    weights, biases = [], []
    for i in range(len(dims) - 1):
        fan_in = dims[i] + (action_dim if i == 1 else 0)
        bound = 3e-3 if i == len(dims) - 2 else None
        w, b = _uniform_init(rng, fan_in, dims[i + 1], bound)
        weights.append(w)
        biases.append(b)
    acts = tuple(["relu"] * len(hidden) + ["linear"])
    return Mlp(weights, biases, acts, inject_at=1, inject_dim=action_dim)


def init_actor(state_dim: int, action_dim: int = 2,
               hidden: tuple[int, ...] = (64, 32),
               action_low: np.ndarray | None = None,
               action_high: np.ndarray | None = None,
               rng: np.random.Generator | None = None) -> Mlp:
    """Policy network: tanh output mapped affinely onto [low, high]."""
    rng = rng if rng is not None else np.random.default_rng()
    low = np.asarray(action_low if action_low is not None else -np.ones(action_dim), dtype=float)
    high = np.asarray(action_high if action_high is not None else np.ones(action_dim), dtype=float)
    if low.shape != (action_dim,) or high.shape != (action_dim,):
        raise ValueError("action bounds must match action_dim")
    if np.any(high < low):
        raise ValueError("action_high must dominate action_low")
    dims = [state_dim, *hidden, action_dim]
    weights, biases = [], []
    for i in range(len(dims) - 1):
        bound = 3e-3 if i == len(dims) - 2 else None
        w, b = _uniform_init(rng, dims[i], dims[i + 1], bound)
        weights.append(w)
        biases.append(b)
    acts = tuple(["relu"] * len(hidden) + ["tanh"])
    return Mlp(weights, biases, acts,
               out_scale=(high - low) / 2.0, out_offset=(high + low) / 2.0)


# ---------------------------------------------------------------------------
# Forward / backward
# ---------------------------------------------------------------------------

def _as_batch(x: np.ndarray, dim: int, what: str) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=float)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != dim:
        raise ValueError(f"{what} must have {dim} components, got shape {np.asarray(x).shape}")
    return arr, single


def _activate(name: str, z: np.ndarray) -> np.ndarray:
    if name == "relu":
        return np.maximum(z, 0.0)
    if name == "tanh":
        return np.tanh(z)
    return z


def _activation_grad(name: str, z: np.ndarray, h: np.ndarray) -> np.ndarray:
    # derivative expressed from the cached pre-activation z / activation h
    if name == "relu":
        return (z > 0.0).astype(float)
    if name == "tanh":
        return 1.0 - h * h
    return np.ones_like(z)


def _forward(net: Mlp, s: np.ndarray, u: np.ndarray | None):
    """Shared forward pass. Returns (output, cache); cache holds per-layer
    (input, pre-activation, activation) for the backward walk."""
    h = s
    cache = []
    for i, (w, b) in enumerate(zip(net.weights, net.biases)):
        if net.inject_at is not None and i == net.inject_at:
            if u is None:
                raise ValueError("this network requires an action input")
            h = np.concatenate([h, u], axis=1)
        if h.shape[1] != w.shape[0]:
            raise ValueError(
                f"layer {i} expects {w.shape[0]} inputs, got {h.shape[1]}")
        z = h @ w + b
        a = _activate(net.activations[i], z)
        cache.append((h, z, a))
        h = a
    if net.out_scale is not None:
        h = net.out_offset + net.out_scale * h
    return h, cache


def _backward(net: Mlp, cache, d_out: np.ndarray) -> tuple[GradientBundle, np.ndarray, np.ndarray | None]:
    """Reverse walk. d_out is the gradient of the scalar objective with
    respect to the network output (batch, out_dim). Returns (bundle,
    d_state_input, d_injected_input)."""
    if net.out_scale is not None:
        d_out = d_out * net.out_scale
    d_weights: list[np.ndarray] = [np.empty(0)] * len(net.weights)
    d_biases: list[np.ndarray] = [np.empty(0)] * len(net.biases)
    dh = d_out
    d_injected = None
    for i in range(len(net.weights) - 1, -1, -1):
        h_in, z, a = cache[i]
        dz = dh * _activation_grad(net.activations[i], z, a)
        d_weights[i] = h_in.T @ dz
        d_biases[i] = dz.sum(axis=0)
        dh = dz @ net.weights[i].T
        if net.inject_at is not None and i == net.inject_at:
            split = h_in.shape[1] - net.inject_dim
            d_injected = dh[:, split:]
            dh = dh[:, :split]
    return GradientBundle(d_weights, d_biases), dh, d_injected


def critic_forward(net: Mlp, s: np.ndarray, u: np.ndarray,
                   return_cache: bool = False):
    """Scalar value estimate; batched inputs give a 1-D array of values."""
    sb, single = _as_batch(s, net.state_dim, "state")
    ub, _ = _as_batch(u, net.inject_dim, "action")
    if sb.shape[0] != ub.shape[0]:
        raise ValueError("state and action batch sizes differ")
    out, cache = _forward(net, sb, ub)
    q = out[:, 0]
    result = float(q[0]) if single else q
    return (result, cache) if return_cache else result


def critic_backward(net: Mlp, s: np.ndarray, u: np.ndarray,
                    weight: np.ndarray | None = None,
                    cache=None) -> tuple[GradientBundle, np.ndarray]:
    """Gradients of sum_i weight_i * Q(s_i, u_i).

    Returns (parameter bundle, action gradient). The action gradient row i is
    weight_i * dQ_i/du_i. weight defaults to ones; pass the precomputed cache
    from critic_forward(..., return_cache=True) to skip the re-forward.
    """
    sb, single = _as_batch(s, net.state_dim, "state")
    ub, _ = _as_batch(u, net.inject_dim, "action")
    if cache is None:
        _, cache = _forward(net, sb, ub)
    n = sb.shape[0]
    w = np.ones(n) if weight is None else np.asarray(weight, dtype=float)
    bundle, _, du = _backward(net, cache, w[:, None])
    return bundle, (du[0] if single else du)


def actor_forward(net: Mlp, s: np.ndarray, return_cache: bool = False):
    """Bounded action; batched inputs give an (n, action_dim) array."""
    sb, single = _as_batch(s, net.state_dim, "state")
    out, cache = _forward(net, sb, None)
    result = out[0] if single else out
    return (result, cache) if return_cache else result


def actor_backward_chained(net: Mlp, s: np.ndarray, upstream: np.ndarray,
                           cache=None) -> GradientBundle:
    """Gradient of sum_i mu(s_i) . upstream_i with respect to the policy
    parameters: the policy Jacobian contracted with a downstream action
    gradient, accumulated over the batch."""
    sb, single = _as_batch(s, net.state_dim, "state")
    ub = np.asarray(upstream, dtype=float)
    if single:
        ub = ub[None, :]
    if ub.shape != (sb.shape[0], net.out_dim):
        raise ValueError(f"upstream must have shape ({sb.shape[0]}, {net.out_dim})")
    if cache is None:
        _, cache = _forward(net, sb, None)
    bundle, _, _ = _backward(net, cache, ub)
    return bundle


def apply_gradients(net: Mlp, g: GradientBundle, rate: float) -> Mlp:
    """In-place descent step: parameters minus rate times gradients."""
    for w, dw in zip(net.weights, g.d_weights):
        if w.shape != dw.shape:
            raise ValueError(f"weight gradient shape {dw.shape} does not match {w.shape}")
        w -= rate * dw
    for b, db in zip(net.biases, g.d_biases):
        if b.shape != db.shape:
            raise ValueError(f"bias gradient shape {db.shape} does not match {b.shape}")
        b -= rate * db
    return net


@dataclass
class AdaptiveMoments:
    """First/second moment accumulators for the optional adaptive optimizer."""

    m_w: list[np.ndarray] = field(default_factory=list)
    v_w: list[np.ndarray] = field(default_factory=list)
    m_b: list[np.ndarray] = field(default_factory=list)
    v_b: list[np.ndarray] = field(default_factory=list)
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_net(cls, net: Mlp, beta1: float = 0.9, beta2: float = 0.999) -> "AdaptiveMoments":
        return cls(
            m_w=[np.zeros_like(w) for w in net.weights],
            v_w=[np.zeros_like(w) for w in net.weights],
            m_b=[np.zeros_like(b) for b in net.biases],
            v_b=[np.zeros_like(b) for b in net.biases],
            beta1=beta1, beta2=beta2,
        )


def apply_gradients_adaptive(net: Mlp, g: GradientBundle,
                             state: AdaptiveMoments, rate: float) -> Mlp:
    """Adam-style update, kept behind config for stability experiments."""
    state.step += 1
    b1c = 1.0 - state.beta1 ** state.step
    b2c = 1.0 - state.beta2 ** state.step
    for w, dw, m, v in zip(net.weights, g.d_weights, state.m_w, state.v_w):
        m *= state.beta1
        m += (1.0 - state.beta1) * dw
        v *= state.beta2
        v += (1.0 - state.beta2) * dw * dw
        w -= rate * (m / b1c) / (np.sqrt(v / b2c) + state.eps)
    for b, db, m, v in zip(net.biases, g.d_biases, state.m_b, state.v_b):
        m *= state.beta1
        m += (1.0 - state.beta1) * db
        v *= state.beta2
        v += (1.0 - state.beta2) * db * db
        b -= rate * (m / b1c) / (np.sqrt(v / b2c) + state.eps)
    return net


# ---------------------------------------------------------------------------
# Checkpoint format
# ---------------------------------------------------------------------------
# Layout: magic, 8-byte little-endian header length, JSON header (layer
# dimensions, activations, injection metadata, output-affine flag), then the
# raw little-endian float64 payload: each layer's weight matrix (row-major)
# followed by its bias, then out_scale and out_offset when present. The
# header is serialized deterministically so write -> read -> write is
# byte-identical.

def save_checkpoint(net: Mlp, path: str) -> None:
    header = {
        "layer_dims": [[int(w.shape[0]), int(w.shape[1])] for w in net.weights],
        "activations": list(net.activations),
        "inject_at": net.inject_at,
        "inject_dim": int(net.inject_dim),
        "output_affine": net.out_scale is not None,
    }
    blob = json.dumps(header, sort_keys=True, separators=(",", ":")).encode("utf-8")
    buf = io.BytesIO()
    buf.write(CHECKPOINT_MAGIC)
    buf.write(len(blob).to_bytes(8, "little"))
    buf.write(blob)
    for w, b in zip(net.weights, net.biases):
        buf.write(np.ascontiguousarray(w, dtype="<f8").tobytes())
        buf.write(np.ascontiguousarray(b, dtype="<f8").tobytes())
    if net.out_scale is not None:
        buf.write(np.ascontiguousarray(net.out_scale, dtype="<f8").tobytes())
        buf.write(np.ascontiguousarray(net.out_offset, dtype="<f8").tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path: str) -> Mlp:
    with open(path, "rb") as fh:
        raw = fh.read()
    if not raw.startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"not a checkpoint file: {path}")
    off = len(CHECKPOINT_MAGIC)
    hlen = int.from_bytes(raw[off:off + 8], "little")
    off += 8
    header = json.loads(raw[off:off + hlen].decode("utf-8"))
    off += hlen

    def take(shape):
        nonlocal off
        count = int(np.prod(shape))
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off).reshape(shape)
        off += count * 8
        return arr.astype(float)

    weights, biases = [], []
    for fan_in, fan_out in header["layer_dims"]:
        weights.append(take((fan_in, fan_out)))
        biases.append(take((fan_out,)))
    out_scale = out_offset = None
    if header["output_affine"]:
        out_dim = header["layer_dims"][-1][1]
        out_scale = take((out_dim,))
        out_offset = take((out_dim,))
    if off != len(raw):
        raise ValueError(f"checkpoint has {len(raw) - off} trailing bytes: {path}")
    return Mlp(
        weights=weights,
        biases=biases,
        activations=tuple(header["activations"]),
        inject_at=header["inject_at"],
        inject_dim=header["inject_dim"],
        out_scale=out_scale,
        out_offset=out_offset,
    )
