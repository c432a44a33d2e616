"""Surrogate generator: a 4-layer ReLU MLP with layer norm and masked input/output
layers, trained with hand-written backpropagation and Adam.

The network maps a flattened graph state plus a scalar time to a flattened
generator action. States of ``n < n_max`` nodes use only the leading rows of
the first weight matrix and the leading columns of the last one, which is why
both flattening orders below put the leading ``n x n`` block first.
"""

from __future__ import annotations

import json
import struct
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Optional

import numpy as np

from ._io import atomic_write_bytes
from .errors import (
    CheckpointError,
    DimensionExceeded,
    DimensionMismatch,
    EmptyBatch,
    MixedSizes,
    NotSymmetric,
    ShapeMismatch,
)

PARAM_NAMES = ("W1", "b1", "W2", "b2", "g2", "o2", "W3", "b3", "g3", "o3", "W4", "b4")
LN_EPS = 1e-5
MAGIC = b"G3CKPT1"


# -- flattening ------------------------------------------------------------

@lru_cache(maxsize=64)
def _full_order(n: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = [], []
    for k in range(n):
        rows += [k] * k + list(range(k)) + [k]
        cols += list(range(k)) + [k] * k + [k]
    return np.array(rows), np.array(cols)


def flatten_lower(X: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Strict lower triangle in row-major order: (1,0), (2,0), (2,1), ..."""
    X = np.asarray(X)
    if not np.allclose(X, X.T, rtol=0.0, atol=tol):
        raise NotSymmetric("flatten_lower expects a symmetric matrix")
    return X[np.tril_indices(X.shape[0], -1)]


def unflatten_lower(v: np.ndarray, n: int) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[-1] != n * (n - 1) // 2:
        raise DimensionMismatch(f"vector of length {v.shape[-1]} does not fit n={n}")
    X = np.zeros(v.shape[:-1] + (n, n), dtype=v.dtype)
    i, j = np.tril_indices(n, -1)
    X[..., i, j] = v
    X[..., j, i] = v
    return X


def flatten_full(X: np.ndarray) -> np.ndarray:
    """All ``n^2`` entries, shell by shell: block ``k`` adds row ``k``, column
    ``k`` and the diagonal entry ``(k, k)``."""
    X = np.asarray(X)
    r, c = _full_order(X.shape[-1])
    return X[..., r, c]


def unflatten_full(v: np.ndarray, n: int) -> np.ndarray:
    v = np.asarray(v)
    if v.shape[-1] != n * n:
        raise DimensionMismatch(f"vector of length {v.shape[-1]} does not fit n={n}")
    r, c = _full_order(n)
    X = np.zeros(v.shape[:-1] + (n, n), dtype=v.dtype)
    X[..., r, c] = v
    return X


def feature_dim(n: int, full_matrix: bool = False) -> int:
    return n * n if full_matrix else n * (n - 1) // 2


def flatten_state(X: np.ndarray, full_matrix: bool = False) -> np.ndarray:
    """Like :func:`flatten_lower`/:func:`flatten_full` but without the symmetry
    check, and broadcasting over leading batch axes."""
    if full_matrix:
        return flatten_full(X)
    X = np.asarray(X)
    i, j = np.tril_indices(X.shape[-1], -1)
    return X[..., i, j]


def unflatten_state(v: np.ndarray, n: int, full_matrix: bool = False) -> np.ndarray:
    return unflatten_full(v, n) if full_matrix else unflatten_lower(v, n)


# -- model -------------------------------------------------------------------

@dataclass(frozen=True)
class MlpConfig:
    width: int = 4096
    n_max: int = 2
    layer_norm: bool = True
    full_matrix: bool = False
    dtype: str = "float64"
    # fixed multiplier on the last affine layer, so outputs start on the scale of the targets
    output_scale: float = 1.0
    # start from the zero generator (last layer all zeros)
    zero_init_output: bool = False
    layers: int = field(default=4, init=False)

    def __post_init__(self):
        if self.dtype not in ("float64", "float32"):
            raise ValueError(f"unsupported dtype {self.dtype!r}")
        if self.width < 1:
            raise ValueError("width must be >= 1")
        if self.n_max < 2:
            raise ValueError("n_max must be >= 2")
        if not (np.isfinite(self.output_scale) and self.output_scale > 0):
            raise ValueError("output_scale must be positive and finite")

    @property
    def dim(self) -> int:
        return feature_dim(self.n_max, self.full_matrix)

    def to_dict(self) -> dict:
        d = asdict(self)
        d.pop("layers")
        return d


class SurrogateGenerator:
    """Parameters of the MLP, keyed by name in :data:`PARAM_NAMES` order.

    ``W1`` has one extra final row holding the weights of the time input.
    """

    def __init__(self, cfg: MlpConfig, params: dict[str, np.ndarray]):
        self.cfg = cfg
        shapes = param_shapes(cfg)
        for name in PARAM_NAMES:
            if params[name].shape != shapes[name]:
                raise ShapeMismatch(f"{name}: {params[name].shape} != {shapes[name]}")
        self.params = {k: np.ascontiguousarray(params[k], dtype=cfg.dtype) for k in PARAM_NAMES}

    @classmethod
    def init(cls, cfg: MlpConfig, rng: np.random.Generator) -> "SurrogateGenerator":
        params = {}
        for name, shape in param_shapes(cfg).items():
            if name == "W4" and cfg.zero_init_output:
                params[name] = np.zeros(shape)
            elif name.startswith("W"):
                fan_in, fan_out = shape
                lim = np.sqrt(6.0 / (fan_in + fan_out))
                params[name] = rng.uniform(-lim, lim, size=shape)
            elif name.startswith("g"):
                params[name] = np.ones(shape)
            else:
                params[name] = np.zeros(shape)
        return cls(cfg, params)

    @classmethod
    def zeros(cls, cfg: MlpConfig) -> "SurrogateGenerator":
        return cls(cfg, {k: np.zeros(s) for k, s in param_shapes(cfg).items()})

    def copy(self) -> "SurrogateGenerator":
        return SurrogateGenerator(self.cfg, {k: v.copy() for k, v in self.params.items()})

    def num_parameters(self) -> int:
        return sum(v.size for v in self.params.values())

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.params.values())

    def forward(self, x: np.ndarray, t, n: int) -> np.ndarray:
        """Evaluate on one state vector (1-d) or a batch (2-d, rows are items)."""
        x = np.asarray(x, dtype=self.cfg.dtype)
        single = x.ndim == 1
        xb = np.atleast_2d(x)
        tb = np.broadcast_to(np.asarray(t, dtype=self.cfg.dtype), (xb.shape[0],))
        out, _ = _forward(self, xb, tb, n)
        return out[0] if single else out

    __call__ = forward


def param_shapes(cfg: MlpConfig) -> dict[str, tuple]:
    w, d = cfg.width, cfg.dim
    return {
        "W1": (d + 1, w), "b1": (w,),
        "W2": (w, w), "b2": (w,), "g2": (w,), "o2": (w,),
        "W3": (w, w), "b3": (w,), "g3": (w,), "o3": (w,),
        "W4": (w, d), "b4": (d,),
    }


def _check_size(model: SurrogateGenerator, x: np.ndarray, n: int) -> int:
    if n > model.cfg.n_max:
        raise DimensionExceeded(f"n={n} exceeds the model's n_max={model.cfg.n_max}")
    d = feature_dim(n, model.cfg.full_matrix)
    if x.shape[-1] != d:
        raise DimensionMismatch(f"state vector length {x.shape[-1]} != {d} for n={n}")
    return d


def _layer_norm(h):
    mu = h.mean(axis=1, keepdims=True)
    var = h.var(axis=1, keepdims=True)
    inv = 1.0 / np.sqrt(var + LN_EPS)
    return (h - mu) * inv, inv


def _forward(model: SurrogateGenerator, x, t, n):
    p = model.params
    d = _check_size(model, x, n)
    ln = model.cfg.layer_norm
    cache = {"x": x, "t": t, "d": d}
    h1 = x @ p["W1"][:d] + np.outer(t, p["W1"][-1]) + p["b1"]
    a1 = np.maximum(h1, 0.0)
    h2 = a1 @ p["W2"] + p["b2"]
    if ln:
        xh2, inv2 = _layer_norm(h2)
        z2 = xh2 * p["g2"] + p["o2"]
        cache.update(xh2=xh2, inv2=inv2)
    else:
        z2 = h2
    a2 = np.maximum(z2, 0.0)
    h3 = a2 @ p["W3"] + p["b3"]
    if ln:
        xh3, inv3 = _layer_norm(h3)
        z3 = xh3 * p["g3"] + p["o3"]
        cache.update(xh3=xh3, inv3=inv3)
    else:
        z3 = h3
    a3 = np.maximum(z3, 0.0)
    out = a3 @ p["W4"][:, :d] + p["b4"][:d]
    if model.cfg.output_scale != 1.0:
        out *= model.cfg.output_scale
    cache.update(h1=h1, a1=a1, z2=z2, a2=a2, z3=z3, a3=a3)
    return out, cache


def _layer_norm_backward(dz, xh, inv, gain):
    dxh = dz * gain
    return inv * (dxh - dxh.mean(axis=1, keepdims=True)
                  - xh * (dxh * xh).mean(axis=1, keepdims=True))


def _backward(model: SurrogateGenerator, cache, dout) -> dict[str, np.ndarray]:
    p = model.params
    d = cache["d"]
    if model.cfg.output_scale != 1.0:
        dout = dout * model.cfg.output_scale
    grads = {}
    grads["W4"] = np.zeros_like(p["W4"])
    grads["W4"][:, :d] = cache["a3"].T @ dout
    grads["b4"] = np.zeros_like(p["b4"])
    grads["b4"][:d] = dout.sum(axis=0)
    dz3 = (dout @ p["W4"][:, :d].T) * (cache["z3"] > 0)
    if model.cfg.layer_norm:
        grads["g3"] = (dz3 * cache["xh3"]).sum(axis=0)
        grads["o3"] = dz3.sum(axis=0)
        dh3 = _layer_norm_backward(dz3, cache["xh3"], cache["inv3"], p["g3"])
    else:
        grads["g3"] = np.zeros_like(p["g3"])
        grads["o3"] = np.zeros_like(p["o3"])
        dh3 = dz3
    grads["W3"] = cache["a2"].T @ dh3
    grads["b3"] = dh3.sum(axis=0)
    dz2 = (dh3 @ p["W3"].T) * (cache["z2"] > 0)
    if model.cfg.layer_norm:
        grads["g2"] = (dz2 * cache["xh2"]).sum(axis=0)
        grads["o2"] = dz2.sum(axis=0)
        dh2 = _layer_norm_backward(dz2, cache["xh2"], cache["inv2"], p["g2"])
    else:
        grads["g2"] = np.zeros_like(p["g2"])
        grads["o2"] = np.zeros_like(p["o2"])
        dh2 = dz2
    grads["W2"] = cache["a1"].T @ dh2
    grads["b2"] = dh2.sum(axis=0)
    dh1 = (dh2 @ p["W2"].T) * (cache["h1"] > 0)
    grads["W1"] = np.zeros_like(p["W1"])
    grads["W1"][:d] = cache["x"].T @ dh1
    grads["W1"][-1] = cache["t"] @ dh1
    grads["b1"] = dh1.sum(axis=0)
    return grads


def loss_and_gradients(model: SurrogateGenerator, states, times, targets, n: int,
                       sizes=None):
    """Mean over the batch of the squared Euclidean error, with exact gradients.

    ``states``/``targets`` are ``(B, dim(n))`` arrays (or lists of vectors),
    ``times`` has length ``B``. ``sizes``, when given, lists each item's node
    count and must be constant.
    """
    if sizes is not None:
        if len(sizes) == 0:
            raise EmptyBatch("empty batch")
        if len(set(int(s) for s in sizes)) > 1:
            raise MixedSizes(f"batch mixes node counts {sorted(set(sizes))}")
    dt = model.cfg.dtype
    x = np.asarray(states, dtype=dt)
    if x.size == 0 or x.shape[0] == 0:
        raise EmptyBatch("empty batch")
    x = np.atleast_2d(x)
    y = np.atleast_2d(np.asarray(targets, dtype=dt))
    t = np.asarray(times, dtype=dt).reshape(-1)
    if y.shape != x.shape or t.shape[0] != x.shape[0]:
        raise DimensionMismatch("states, times and targets disagree in shape")
    out, cache = _forward(model, x, t, n)
    err = out - y
    b = x.shape[0]
    loss = float(np.sum(err * err) / b)
    grads = _backward(model, cache, 2.0 * err / b)
    return loss, grads


# -- Adam --------------------------------------------------------------------

@dataclass
class AdamState:
    m: dict
    v: dict
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_model(cls, model: SurrogateGenerator) -> "AdamState":
        return cls({k: np.zeros_like(v) for k, v in model.params.items()},
                   {k: np.zeros_like(v) for k, v in model.params.items()})


def adam_step(model: SurrogateGenerator, grads: dict, state: AdamState, lr: float):
    """One bias-corrected Adam update, applied to ``model`` in place."""
    for k, p in model.params.items():
        if grads[k].shape != p.shape:
            raise ShapeMismatch(f"gradient for {k}: {grads[k].shape} != {p.shape}")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for k, p in model.params.items():
        g = grads[k]
        m, v = state.m[k], state.v[k]
        buf = np.multiply(g, 1.0 - b1)
        m *= b1
        m += buf
        np.multiply(g, g, out=buf)
        buf *= 1.0 - b2
        v *= b2
        v += buf
        # buf <- lr/c1 * m / (sqrt(v / c2) + eps)
        np.multiply(v, 1.0 / c2, out=buf)
        np.sqrt(buf, out=buf)
        buf += state.eps
        np.divide(m, buf, out=buf)
        buf *= lr / c1
        p -= buf
    return model, state


# -- checkpoints ---------------------------------------------------------------

def save_checkpoint(path, model: SurrogateGenerator, meta: Optional[dict] = None) -> None:
    header = {
        "format": MAGIC.decode(),
        "mlp": model.cfg.to_dict(),
        "params": [[k, list(model.params[k].shape)] for k in PARAM_NAMES],
        "meta": meta or {},
    }
    hbytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    blobs = [np.ascontiguousarray(model.params[k], dtype="<f8").tobytes() for k in PARAM_NAMES]
    atomic_write_bytes(path, b"".join([MAGIC, struct.pack("<Q", len(hbytes)), hbytes, *blobs]))


def load_checkpoint(path, expect: Optional[MlpConfig] = None):
    """Returns ``(model, meta)``; raises :class:`CheckpointError` on any mismatch."""
    data = Path(path).read_bytes()
    if not data.startswith(MAGIC):
        raise CheckpointError(f"{path}: missing {MAGIC.decode()} magic")
    off = len(MAGIC)
    try:
        (hlen,) = struct.unpack_from("<Q", data, off)
        header = json.loads(data[off + 8: off + 8 + hlen])
        cfg = MlpConfig(**header["mlp"])
    except (struct.error, ValueError, KeyError, TypeError) as exc:
        raise CheckpointError(f"{path}: bad header ({exc})") from None
    if expect is not None and expect != cfg:
        raise CheckpointError(f"{path}: checkpoint config {cfg} != requested {expect}")
    shapes = param_shapes(cfg)
    off += 8 + hlen
    params = {}
    for name, shape in header["params"]:
        if tuple(shape) != shapes.get(name):
            raise CheckpointError(f"{path}: parameter {name} has shape {shape}")
        count = int(np.prod(shape))
        buf = data[off: off + 8 * count]
        if len(buf) != 8 * count:
            raise CheckpointError(f"{path}: truncated at parameter {name}")
        params[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).astype(cfg.dtype)
        off += 8 * count
    if off != len(data):
        raise CheckpointError(f"{path}: {len(data) - off} trailing bytes")
    return SurrogateGenerator(cfg, params), header["meta"]
