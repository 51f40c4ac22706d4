"""Small float64 neural core: stacked bi-LSTMs, dense heads, Adam, gradient checking.

Parameters are plain ``dict[str, np.ndarray]`` bundles. Forward functions
return ``(output, cache)``; backward functions take the cache and an upstream
gradient and return ``(param_grads, input_grad)``. Sequences are time-major,
shape ``(T, B, features)``.

Gate blocks are stacked in the order input, forget, cell, output, so an LSTM
direction holds ``W`` (4H, in), ``U`` (4H, H) and ``b`` (4H,).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from swipegan.errors import ParseError, ShapeError

Params = dict[str, np.ndarray]

CHECKPOINT_VERSION = 1


def sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(x, dtype=np.float64)))


def softmax(x, axis: int = -1) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(x - x.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def log_softmax(x, axis: int = -1) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    z = x - x.max(axis=axis, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=axis, keepdims=True))


def mean_pool(seq: np.ndarray) -> np.ndarray:
    """Average a (T, B, F) sequence over time."""
    return np.asarray(seq).mean(axis=0)


def dense_forward(p: Params, x: np.ndarray, prefix: str = "") -> np.ndarray:
    W, b = p[prefix + "W"], p[prefix + "b"]
    if x.shape[-1] != W.shape[1]:
        raise ShapeError(f"dense input has {x.shape[-1]} features, expected {W.shape[1]}")
    return x @ W.T + b


def dense_backward(p: Params, x: np.ndarray, dy: np.ndarray, prefix: str = ""):
    W = p[prefix + "W"]
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    grads = {prefix + "W": dy2.T @ x2, prefix + "b": dy2.sum(axis=0)}
    return grads, dy @ W


# -- initialization --------------------------------------------------------


def init_dense(rng: np.random.Generator, n_in: int, n_out: int, prefix: str = "", scale: float = 1.0) -> Params:
    r = scale / np.sqrt(n_in)
    return {prefix + "W": rng.uniform(-r, r, size=(n_out, n_in)), prefix + "b": np.zeros(n_out)}


def init_lstm(rng: np.random.Generator, n_in: int, hidden: int, prefix: str = "") -> Params:
    rw, ru = 1.0 / np.sqrt(n_in), 1.0 / np.sqrt(hidden)
    b = np.zeros(4 * hidden)
    b[hidden : 2 * hidden] = 1.0  # forget gate
    return {
        prefix + "W": rng.uniform(-rw, rw, size=(4 * hidden, n_in)),
        prefix + "U": rng.uniform(-ru, ru, size=(4 * hidden, hidden)),
        prefix + "b": b,
    }


def init_bilstm_stack(rng: np.random.Generator, n_in: int, hidden: int, depth: int, prefix: str = "") -> Params:
    p: Params = {}
    for layer in range(depth):
        d_in = n_in if layer == 0 else 2 * hidden
        for direction in ("fwd", "bwd"):
            p.update(init_lstm(rng, d_in, hidden, f"{prefix}l{layer}.{direction}."))
    return p


def stack_depth(p: Params, prefix: str = "") -> int:
    depth = 0
    while f"{prefix}l{depth}.fwd.W" in p:
        depth += 1
    return depth


# -- LSTM ------------------------------------------------------------------


def lstm_forward(p: Params, x: np.ndarray, reverse: bool = False, prefix: str = ""):
    W, U, b = p[prefix + "W"], p[prefix + "U"], p[prefix + "b"]
    T, B, n_in = x.shape
    if n_in != W.shape[1]:
        raise ShapeError(f"LSTM input has {n_in} features, expected {W.shape[1]}")
    H = U.shape[1]
    xw = x @ W.T + b
    gates = np.empty((T, B, 4 * H))
    cs = np.empty((T, B, H))
    tcs = np.empty((T, B, H))
    hs = np.empty((T, B, H))
    h = np.zeros((B, H))
    c = np.zeros((B, H))
    order = range(T - 1, -1, -1) if reverse else range(T)
    UT = U.T
    for t in order:
        z = xw[t] + h @ UT
        g = gates[t]
        g[:] = sigmoid(z)
        g[:, 2 * H : 3 * H] = np.tanh(z[:, 2 * H : 3 * H])
        c = g[:, H : 2 * H] * c + g[:, :H] * g[:, 2 * H : 3 * H]
        tc = np.tanh(c)
        h = g[:, 3 * H :] * tc
        cs[t], tcs[t], hs[t] = c, tc, h
    cache = (x, gates, cs, tcs, hs, reverse)
    return hs, cache


def lstm_backward(p: Params, cache, dh: np.ndarray, prefix: str = ""):
    W, U = p[prefix + "W"], p[prefix + "U"]
    x, gates, cs, tcs, hs, reverse = cache
    T, B, H = hs.shape
    dz = np.empty((T, B, 4 * H))
    dh_next = np.zeros((B, H))
    dc_next = np.zeros((B, H))
    zero = np.zeros((B, H))
    if reverse:
        order, prev = range(T), lambda t: t + 1 if t + 1 < T else None
    else:
        order, prev = range(T - 1, -1, -1), lambda t: t - 1 if t > 0 else None
    for t in order:
        g = gates[t]
        gi, gf, gg, go = g[:, :H], g[:, H : 2 * H], g[:, 2 * H : 3 * H], g[:, 3 * H :]
        tp = prev(t)
        c_prev = cs[tp] if tp is not None else zero
        dht = dh[t] + dh_next
        tc = tcs[t]
        dc = dht * go * (1.0 - tc * tc) + dc_next
        d = dz[t]
        d[:, :H] = dc * gg * gi * (1.0 - gi)
        d[:, H : 2 * H] = dc * c_prev * gf * (1.0 - gf)
        d[:, 2 * H : 3 * H] = dc * gi * (1.0 - gg * gg)
        d[:, 3 * H :] = dht * tc * go * (1.0 - go)
        dc_next = dc * gf
        dh_next = d @ U
    h_prev = np.zeros_like(hs)
    if reverse:
        h_prev[:-1] = hs[1:]
    else:
        h_prev[1:] = hs[:-1]
    dz2 = dz.reshape(T * B, 4 * H)
    grads = {
        prefix + "W": dz2.T @ x.reshape(T * B, -1),
        prefix + "U": dz2.T @ h_prev.reshape(T * B, H),
        prefix + "b": dz2.sum(axis=0),
    }
    return grads, dz @ W


def bilstm_forward(p: Params, seq: np.ndarray, prefix: str = ""):
    """One bidirectional layer: concatenated forward/backward hidden states, (T, B, 2H)."""
    hf, cf = lstm_forward(p, seq, False, prefix + "fwd.")
    hb, cb = lstm_forward(p, seq, True, prefix + "bwd.")
    return np.concatenate([hf, hb], axis=-1), (cf, cb)


def bilstm_backward(p: Params, cache, dout: np.ndarray, prefix: str = ""):
    cf, cb = cache
    H = dout.shape[-1] // 2
    gf, dxf = lstm_backward(p, cf, dout[..., :H], prefix + "fwd.")
    gb, dxb = lstm_backward(p, cb, dout[..., H:], prefix + "bwd.")
    gf.update(gb)
    return gf, dxf + dxb


def stack_forward(p: Params, seq: np.ndarray, prefix: str = ""):
    if seq.ndim == 2:
        seq = seq[:, None, :]
    caches = []
    out = seq
    for layer in range(stack_depth(p, prefix)):
        out, cache = bilstm_forward(p, out, f"{prefix}l{layer}.")
        caches.append(cache)
    return out, caches


def stack_backward(p: Params, caches, dout: np.ndarray, prefix: str = ""):
    grads: Params = {}
    d = dout
    for layer in range(len(caches) - 1, -1, -1):
        g, d = bilstm_backward(p, caches[layer], d, f"{prefix}l{layer}.")
        grads.update(g)
    return grads, d


# -- optimizer -------------------------------------------------------------


@dataclass
class AdamState:
    m: Params = field(default_factory=dict)
    v: Params = field(default_factory=dict)
    t: int = 0


def adam_step(
    params: Params,
    grads: Params,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[Params, AdamState]:
    """In-place Adam update of every parameter that has a gradient."""
    state.t += 1
    bc1 = 1.0 - beta1**state.t
    bc2 = 1.0 - beta2**state.t
    for name, g in grads.items():
        p = params[name]
        if g.shape != p.shape:
            raise ShapeError(f"gradient for {name} has shape {g.shape}, expected {p.shape}")
        m = state.m.get(name)
        if m is None:
            m = state.m[name] = np.zeros_like(p)
            state.v[name] = np.zeros_like(p)
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        if lr != 0.0:
            p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)
    return params, state


def clip_grads(grads: Params, max_norm: float | None) -> float:
    """Scale ``grads`` in place so their global L2 norm is at most ``max_norm``; returns the norm."""
    norm = float(np.sqrt(sum(float(np.sum(g * g)) for g in grads.values())))
    if max_norm and norm > max_norm:
        s = max_norm / norm
        for g in grads.values():
            g *= s
    return norm


# -- gradient checking -----------------------------------------------------


def gradient_check(
    loss_fn: Callable[[Params], tuple[float, Params]],
    params: Params,
    eps: float = 1e-5,
    n_coords: int = 200,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    ``loss_fn(params)`` must return ``(loss, grads)`` and read ``params`` in
    place. Checks every coordinate when there are at most ``n_coords`` of them,
    otherwise a seeded random subsample of ``n_coords``. Relative error is
    ``|a - n| / max(1e-8, |a| + |n|)``.
    """
    _, grads = loss_fn(params)
    grads = {k: np.array(v, copy=True) for k, v in grads.items()}
    names = sorted(params)
    sizes = [params[k].size for k in names]
    total = sum(sizes)
    rng = np.random.default_rng(seed)
    flat_ids = np.arange(total) if total <= n_coords else rng.choice(total, size=n_coords, replace=False)
    offsets = np.cumsum([0] + sizes)
    worst = 0.0
    for fid in flat_ids:
        k = int(np.searchsorted(offsets, fid, side="right") - 1)
        name, local = names[k], int(fid - offsets[k])
        arr = params[name].reshape(-1)
        orig = arr[local]
        arr[local] = orig + eps
        lp, _ = loss_fn(params)
        arr[local] = orig - eps
        lm, _ = loss_fn(params)
        arr[local] = orig
        num = (lp - lm) / (2.0 * eps)
        ana = float(grads[name].reshape(-1)[local]) if name in grads else 0.0
        err = abs(ana - num) / max(1e-8, abs(ana) + abs(num))
        worst = max(worst, err)
    return worst


# -- checkpoints -----------------------------------------------------------


def params_to_json(params: Params, extra: dict | None = None) -> str:
    names = sorted(params)
    doc = {
        "version": CHECKPOINT_VERSION,
        "shapes": {k: list(params[k].shape) for k in names},
        "values": {k: params[k].reshape(-1).tolist() for k in names},
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, sort_keys=True, allow_nan=False)


def params_from_json(text: str, expected_shapes: dict[str, tuple] | None = None) -> tuple[Params, dict]:
    """Parse a checkpoint; returns (params, remaining top-level fields)."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"checkpoint is not valid JSON ({exc.msg})", exc.lineno) from exc
    if not isinstance(doc, dict) or doc.get("version") != CHECKPOINT_VERSION:
        raise ParseError(f"unsupported checkpoint version {doc.get('version') if isinstance(doc, dict) else None!r}")
    shapes, values = doc.get("shapes"), doc.get("values")
    if not isinstance(shapes, dict) or not isinstance(values, dict) or set(shapes) != set(values):
        raise ShapeError("checkpoint shapes/values tables are missing or disagree")
    params: Params = {}
    for name, shape in shapes.items():
        flat = np.asarray(values[name], dtype=np.float64)
        if flat.ndim != 1 or flat.size != int(np.prod(shape)):
            raise ShapeError(f"{name}: {flat.size} values do not fill shape {tuple(shape)}")
        if not np.all(np.isfinite(flat)):
            raise ShapeError(f"{name}: non-finite values")
        params[name] = flat.reshape(shape)
    if expected_shapes is not None:
        missing = sorted(set(expected_shapes) - set(params))
        extra = sorted(set(params) - set(expected_shapes))
        if missing or extra:
            raise ShapeError(f"checkpoint parameter names differ (missing {missing[:4]}, unexpected {extra[:4]})")
        for name, shape in expected_shapes.items():
            if tuple(params[name].shape) != tuple(shape):
                raise ShapeError(f"{name}: shape {params[name].shape} != expected {tuple(shape)}")
    rest = {k: v for k, v in doc.items() if k not in ("version", "shapes", "values")}
    return params, rest
