"""Minimal dense network engine for the actor-critic agent.

Two-hidden-layer perceptrons with batch normalization, exact analytic
backpropagation, bias-corrected adaptive-moment updates, and soft target
blending.  The critic variant accepts a side input (the action) joined
un-normalized at the second affine layer.

All parameters of a network live in one flat float64 vector; the per-layer
weights are reshaped views into it, so optimizer and target-blend updates
are single vector operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "ShapeMismatchError",
    "BatchStatsError",
    "StaleCacheError",
    "NonFiniteGradientError",
    "MlpConfig",
    "Mlp",
    "AdamState",
    "init_mlp",
    "forward",
    "backward",
    "adam_update",
    "soft_update",
    "save_mlp",
    "load_mlp",
]


class ShapeMismatchError(ValueError):
    pass


class BatchStatsError(ValueError):
    pass


class StaleCacheError(RuntimeError):
    pass


class NonFiniteGradientError(FloatingPointError):
    pass


@dataclass(frozen=True)
class MlpConfig:
    """Architecture description.

    sizes: (input, hidden1, hidden2, output).  ``side_input`` features are
    concatenated onto the first hidden activation before the second affine
    layer and bypass all normalization.  ``output`` is "tanh" (bounded
    symmetric) or "linear".
    """

    sizes: tuple[int, int, int, int]
    output: str = "tanh"
    side_input: int = 0
    normalize_input: bool = True
    normalize_hidden: tuple[bool, bool] = (True, True)
    bn_eps: float = 1e-7
    bn_momentum: float = 0.01

    def __post_init__(self) -> None:
        if len(self.sizes) != 4 or any(s < 1 for s in self.sizes):
            raise ValueError(f"sizes must be 4 positive ints, got {self.sizes}")
        if self.output not in ("tanh", "linear"):
            raise ValueError(f"output must be 'tanh' or 'linear', got {self.output}")
        if self.side_input < 0:
            raise ValueError("side_input must be nonnegative")

    @property
    def bn_widths(self) -> tuple[int, ...]:
        """Widths of the normalized stages, in forward order."""
        widths = []
        if self.normalize_input:
            widths.append(self.sizes[0])
        if self.normalize_hidden[0]:
            widths.append(self.sizes[1])
        if self.normalize_hidden[1]:
            widths.append(self.sizes[2])
        return tuple(widths)


def _param_layout(cfg: MlpConfig) -> list[tuple[str, tuple[int, ...]]]:
    d_in, h1, h2, d_out = cfg.sizes
    layout = [
        ("w1", (d_in, h1)),
        ("b1", (h1,)),
        ("w2", (h1 + cfg.side_input, h2)),
        ("b2", (h2,)),
        ("w3", (h2, d_out)),
        ("b3", (d_out,)),
    ]
    for i, w in enumerate(cfg.bn_widths):
        layout.append((f"bn{i}_gamma", (w,)))
        layout.append((f"bn{i}_beta", (w,)))
    return layout


def _views(flat: np.ndarray, layout) -> dict[str, np.ndarray]:
    views = {}
    pos = 0
    for name, shape in layout:
        size = int(np.prod(shape))
        views[name] = flat[pos : pos + size].reshape(shape)
        pos += size
    if pos != flat.size:
        raise ShapeMismatchError(f"flat vector has {flat.size} entries, layout needs {pos}")
    return views


@dataclass
class Mlp:
    """A network: config, flat parameters, flat running statistics.

    ``stats`` holds (mean, var) per normalized stage; inference-mode forward
    reads only these, so it is deterministic and batch-independent.
    """

    cfg: MlpConfig
    params: np.ndarray
    stats: np.ndarray
    p: dict[str, np.ndarray] = field(repr=False, default=None)
    _cache: dict | None = field(repr=False, default=None)

    def __post_init__(self) -> None:
        self.p = _views(self.params, _param_layout(self.cfg))
        widths = self.cfg.bn_widths
        if self.stats.size != 2 * sum(widths):
            raise ShapeMismatchError("running-stats vector does not match config")
        self.s = {}
        pos = 0
        for i, w in enumerate(widths):
            self.s[f"bn{i}_mean"] = self.stats[pos : pos + w]
            self.s[f"bn{i}_var"] = self.stats[pos + w : pos + 2 * w]
            pos += 2 * w

    def copy(self) -> "Mlp":
        return Mlp(self.cfg, self.params.copy(), self.stats.copy())


def init_mlp(cfg: MlpConfig, seed: int | np.random.Generator) -> Mlp:
    """Seeded initialization: fan-in-scaled uniform hidden layers, tiny uniform
    final layer, unit scale / zero shift normalization, unit running variance."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    layout = _param_layout(cfg)
    n_params = sum(int(np.prod(shape)) for _, shape in layout)
    net = Mlp(cfg, np.zeros(n_params), np.zeros(2 * sum(cfg.bn_widths)))
    for name in ("w1", "b1", "w2", "b2"):
        arr = net.p[name]
        fan_in = arr.shape[0] if arr.ndim == 2 else net.p["w" + name[1]].shape[0]
        bound = 1.0 / math.sqrt(fan_in)
        arr[...] = rng.uniform(-bound, bound, size=arr.shape)
    for name in ("w3", "b3"):
        net.p[name][...] = rng.uniform(-3e-3, 3e-3, size=net.p[name].shape)
    for i in range(len(cfg.bn_widths)):
        net.p[f"bn{i}_gamma"][...] = 1.0
        net.s[f"bn{i}_var"][...] = 1.0
    return net


def _bn_train(net: Mlp, i: int, x: np.ndarray, update_running: bool):
    mu = x.mean(axis=0)
    var = x.var(axis=0)
    inv = 1.0 / np.sqrt(var + net.cfg.bn_eps)
    xhat = (x - mu) * inv
    out = xhat * net.p[f"bn{i}_gamma"] + net.p[f"bn{i}_beta"]
    if update_running:
        mom = net.cfg.bn_momentum
        rm = net.s[f"bn{i}_mean"]
        rv = net.s[f"bn{i}_var"]
        rm += mom * (mu - rm)
        rv += mom * (var - rv)
    return out, (xhat, inv)


def _bn_infer(net: Mlp, i: int, x: np.ndarray) -> np.ndarray:
    scale = net.p[f"bn{i}_gamma"] / np.sqrt(net.s[f"bn{i}_var"] + net.cfg.bn_eps)
    return x * scale + (net.p[f"bn{i}_beta"] - net.s[f"bn{i}_mean"] * scale)


def forward(
    net: Mlp,
    x: np.ndarray,
    side: np.ndarray | None = None,
    mode: str = "infer",
    update_running: bool = True,
) -> np.ndarray:
    """Run the network on a batch.

    Train mode normalizes with batch statistics, caches intermediates for
    :func:`backward`, and (unless ``update_running`` is off) nudges the
    running statistics.  Infer mode uses only running statistics.
    """
    cfg = net.cfg
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != cfg.sizes[0]:
        raise ShapeMismatchError(f"input shape {x.shape}, expected (n, {cfg.sizes[0]})")
    if cfg.side_input:
        if side is None:
            raise ShapeMismatchError("network requires a side input")
        side = np.asarray(side, dtype=np.float64)
        if side.shape != (x.shape[0], cfg.side_input):
            raise ShapeMismatchError(
                f"side shape {side.shape}, expected ({x.shape[0]}, {cfg.side_input})"
            )
    elif side is not None:
        raise ShapeMismatchError("network takes no side input")
    train = mode == "train"
    if mode not in ("train", "infer"):
        raise ValueError(f"mode must be 'train' or 'infer', got {mode}")
    if train and x.shape[0] < 2:
        raise BatchStatsError("train mode needs a batch of at least 2 rows")

    p = net.p
    cache: dict = {"x": x, "side": side}
    bn = 0
    if cfg.normalize_input:
        if train:
            h, cache["bn0"] = _bn_train(net, bn, x, update_running)
        else:
            h = _bn_infer(net, bn, x)
        bn += 1
    else:
        h = x
    cache["x_in"] = h

    z1 = h @ p["w1"] + p["b1"]
    if cfg.normalize_hidden[0]:
        if train:
            z1, cache[f"bn{bn}"] = _bn_train(net, bn, z1, update_running)
        else:
            z1 = _bn_infer(net, bn, z1)
        cache["bn1_idx"] = bn
        bn += 1
    h1 = np.maximum(z1, 0.0)
    cache["h1"] = h1

    h1c = np.concatenate([h1, side], axis=1) if cfg.side_input else h1
    cache["h1c"] = h1c
    z2 = h1c @ p["w2"] + p["b2"]
    if cfg.normalize_hidden[1]:
        if train:
            z2, cache[f"bn{bn}"] = _bn_train(net, bn, z2, update_running)
        else:
            z2 = _bn_infer(net, bn, z2)
        cache["bn2_idx"] = bn
        bn += 1
    h2 = np.maximum(z2, 0.0)
    cache["h2"] = h2

    y = h2 @ p["w3"] + p["b3"]
    if cfg.output == "tanh":
        y = np.tanh(y)
    cache["y"] = y
    net._cache = cache if train else None
    return y


@dataclass
class Grads:
    """Backward outputs: flat parameter gradients plus input-side gradients."""

    flat: np.ndarray | None
    d_input: np.ndarray | None
    d_side: np.ndarray | None


def _bn_backward(net: Mlp, i: int, dout: np.ndarray, bn_cache, grads: dict | None):
    xhat, inv = bn_cache
    if grads is not None:
        grads[f"bn{i}_gamma"][...] = (dout * xhat).sum(axis=0)
        grads[f"bn{i}_beta"][...] = dout.sum(axis=0)
    dxhat = dout * net.p[f"bn{i}_gamma"]
    return (dxhat - dxhat.mean(axis=0) - xhat * (dxhat * xhat).mean(axis=0)) * inv


def backward(
    net: Mlp,
    dout: np.ndarray,
    need_param_grads: bool = True,
    need_input_grads: bool = False,
) -> Grads:
    """Exact gradients of the last train-mode forward pass.

    ``dout`` is the upstream gradient on the network output.  Set
    ``need_param_grads=False`` when only the input/side gradient is wanted
    (e.g. differentiating the critic with respect to the action).
    """
    cache = net._cache
    if cache is None:
        raise StaleCacheError("backward requires a preceding train-mode forward")
    cfg = net.cfg
    p = net.p
    dout = np.asarray(dout, dtype=np.float64)
    if dout.shape != cache["y"].shape:
        raise ShapeMismatchError(
            f"upstream gradient shape {dout.shape} != output shape {cache['y'].shape}"
        )

    g: dict | None = None
    flat = None
    if need_param_grads:
        flat = np.empty_like(net.params)
        g = _views(flat, _param_layout(cfg))

    dy = dout
    if cfg.output == "tanh":
        y = cache["y"]
        dy = dout * (1.0 - y * y)
    h2 = cache["h2"]
    if g is not None:
        np.matmul(h2.T, dy, out=g["w3"])
        g["b3"][...] = dy.sum(axis=0)
    dh2 = dy @ p["w3"].T
    dz2 = dh2 * (h2 > 0.0)
    if cfg.normalize_hidden[1]:
        dz2 = _bn_backward(net, cache["bn2_idx"], dz2, cache[f"bn{cache['bn2_idx']}"], g)
    h1c = cache["h1c"]
    if g is not None:
        np.matmul(h1c.T, dz2, out=g["w2"])
        g["b2"][...] = dz2.sum(axis=0)
    dh1c = dz2 @ p["w2"].T
    d_side = None
    if cfg.side_input:
        h1_width = cfg.sizes[1]
        d_side = dh1c[:, h1_width:]
        dh1 = dh1c[:, :h1_width]
    else:
        dh1 = dh1c
    dz1 = dh1 * (cache["h1"] > 0.0)
    if cfg.normalize_hidden[0]:
        dz1 = _bn_backward(net, cache["bn1_idx"], dz1, cache[f"bn{cache['bn1_idx']}"], g)
    x_in = cache["x_in"]
    if g is not None:
        np.matmul(x_in.T, dz1, out=g["w1"])
        g["b1"][...] = dz1.sum(axis=0)
    d_input = None
    if need_input_grads or (g is not None and cfg.normalize_input):
        dx_in = dz1 @ p["w1"].T
        if cfg.normalize_input:
            dx_in = _bn_backward(net, 0, dx_in, cache["bn0"], g)
        d_input = dx_in
    return Grads(flat, d_input if need_input_grads else None, d_side)


@dataclass
class AdamState:
    """Adaptive-moment accumulators for one flat parameter vector."""

    lr: float
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def for_params(cls, params: np.ndarray, lr: float) -> "AdamState":
        return cls(lr=lr, m=np.zeros_like(params), v=np.zeros_like(params))


def adam_update(params: np.ndarray, grads: np.ndarray, state: AdamState) -> np.ndarray:
    """Bias-corrected adaptive-moment step, in place on ``params``."""
    if grads.shape != params.shape:
        raise ShapeMismatchError(f"grads shape {grads.shape} != params {params.shape}")
    if not np.all(np.isfinite(grads)):
        bad = int(np.count_nonzero(~np.isfinite(grads)))
        raise NonFiniteGradientError(f"{bad} non-finite gradient entries; update refused")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    state.m *= b1
    state.m += (1.0 - b1) * grads
    state.v *= b2
    state.v += (1.0 - b2) * (grads * grads)
    bc1 = 1.0 - b1**state.step
    bc2 = 1.0 - b2**state.step
    denom = np.sqrt(state.v)
    denom /= math.sqrt(bc2)
    denom += state.eps
    step = state.m / denom
    step *= state.lr / bc1
    params -= step
    return params


def soft_update(target: Mlp, source: Mlp, blend: float) -> Mlp:
    """target <- (1-blend)*target + blend*source, running statistics included."""
    if target.cfg != source.cfg:
        raise ShapeMismatchError("target/source architectures differ")
    if not 0.0 < blend <= 1.0:
        raise ValueError(f"blend must be in (0, 1], got {blend}")
    target.params *= 1.0 - blend
    target.params += blend * source.params
    if target.stats.size:
        target.stats *= 1.0 - blend
        target.stats += blend * source.stats
    return target


def save_mlp(net: Mlp, path: str, extra_meta: dict | None = None) -> None:
    """Checkpoint to a self-describing bundle; round-trips bit-exactly."""
    from .configio import digest, to_jsonable
    from .serialize import save_bundle

    meta = {
        "kind": "mlp-checkpoint",
        "cfg": to_jsonable(net.cfg),
        "config_hash": digest(net.cfg),
    }
    if extra_meta:
        meta.update(extra_meta)
    save_bundle(path, {"params": net.params, "stats": net.stats}, meta)


def load_mlp(path: str) -> tuple[Mlp, dict]:
    from .serialize import load_bundle

    arrays, meta = load_bundle(path)
    if meta.get("kind") != "mlp-checkpoint":
        raise ValueError(f"{path} is not an MLP checkpoint")
    c = meta["cfg"]
    cfg = MlpConfig(
        sizes=tuple(c["sizes"]),
        output=c["output"],
        side_input=c["side_input"],
        normalize_input=c["normalize_input"],
        normalize_hidden=tuple(c["normalize_hidden"]),
        bn_eps=c["bn_eps"],
        bn_momentum=c["bn_momentum"],
    )
    return Mlp(cfg, arrays["params"], arrays["stats"]), meta
