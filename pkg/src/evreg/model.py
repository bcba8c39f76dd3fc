"""A small 1-D encoder-decoder (UNet-lite) in float64 numpy.

Forward, loss, and exact reverse-mode gradients are written by hand so the
whole training path is deterministic, dependency-free, and checkable
against finite differences.  The architecture per encoder level is
conv(same) -> ReLU -> maxpool(2); a conv+ReLU bottleneck; per decoder level
nearest upsample(2) -> concat skip -> conv -> ReLU; and a 1x1 conv head.
Regression heads are linear, the segmentation head applies a per-step
softmax over two classes.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import (
    DivergedLoss,
    InvalidConfig,
    IoError,
    NonFiniteGradient,
    NonFiniteParameters,
    ParseError,
    ShapeMismatch,
)

OUT_MODES = ("regression_2ch", "regression_1ch", "segmentation_2class")

_ADAM_BETA1 = 0.9
_ADAM_BETA2 = 0.999
_ADAM_EPS = 1e-8


@dataclass(frozen=True)
class ModelConfig:
    """Architecture description; seed fixes initialization and batch order."""

    in_channels: int
    hidden_channels: tuple[int, ...] = (16, 32, 64)
    kernel_size: int = 5
    out_mode: str = "regression_2ch"
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(
            self, "hidden_channels", tuple(int(h) for h in self.hidden_channels)
        )
        if self.in_channels < 1:
            raise InvalidConfig(f"in_channels={self.in_channels}, expected >= 1")
        if not self.hidden_channels or any(h < 1 for h in self.hidden_channels):
            raise InvalidConfig("hidden_channels must be a nonempty list of ints >= 1")
        if self.kernel_size < 1 or self.kernel_size % 2 == 0:
            raise InvalidConfig(f"kernel_size={self.kernel_size}, expected odd >= 1")
        if self.out_mode not in OUT_MODES:
            raise InvalidConfig(f"out_mode={self.out_mode!r}, expected one of {OUT_MODES}")

    @property
    def levels(self) -> int:
        return len(self.hidden_channels)

    @property
    def out_channels(self) -> int:
        return 1 if self.out_mode == "regression_1ch" else 2

    @property
    def is_segmentation(self) -> bool:
        return self.out_mode == "segmentation_2class"


@dataclass(frozen=True)
class TrainConfig:
    """Optimization settings; defaults follow the reference training recipe."""

    epochs: int = 20
    batch_size: int = 8
    learning_rate: float = 1e-3
    grad_clip_norm: float = 0.1
    sigma_start: float | None = None
    sigma_end: float | None = None

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise InvalidConfig("epochs and batch_size must be >= 1")
        if not (self.learning_rate > 0 and self.grad_clip_norm > 0):
            raise InvalidConfig("learning_rate and grad_clip_norm must be positive")
        if (self.sigma_start is None) != (self.sigma_end is None):
            raise InvalidConfig("sigma_start and sigma_end must be set together")
        if self.sigma_start is not None and not (
            self.sigma_start >= self.sigma_end > 0
        ):
            raise InvalidConfig("need sigma_start >= sigma_end > 0")


@dataclass
class Parameters:
    """Ordered name -> float64 tensor container."""

    tensors: dict[str, np.ndarray]

    def copy(self) -> "Parameters":
        return Parameters({k: v.copy() for k, v in self.tensors.items()})

    def zeros_like(self) -> "Parameters":
        return Parameters({k: np.zeros_like(v) for k, v in self.tensors.items()})

    def to_vector(self) -> np.ndarray:
        return np.concatenate([v.ravel() for v in self.tensors.values()])

    def from_vector(self, vec: np.ndarray) -> "Parameters":
        """New Parameters with this container's shapes filled from a flat vector."""
        out = {}
        pos = 0
        for k, v in self.tensors.items():
            out[k] = np.asarray(vec[pos : pos + v.size], dtype=np.float64).reshape(
                v.shape
            )
            pos += v.size
        if pos != len(vec):
            raise ShapeMismatch(f"vector length {len(vec)}, expected {pos}")
        return Parameters(out)

    @property
    def num_params(self) -> int:
        return sum(v.size for v in self.tensors.values())

    def global_norm(self) -> float:
        return math.sqrt(sum(float(np.sum(v * v)) for v in self.tensors.values()))

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for v in self.tensors.values())


def _layer_plan(config: ModelConfig) -> list[tuple[str, tuple[int, int, int]]]:
    """Names and (out_c, in_c, kernel) of every conv, in forward order."""
    k = config.kernel_size
    hidden = config.hidden_channels
    plan = []
    prev = config.in_channels
    for i, h in enumerate(hidden):
        plan.append((f"enc{i}", (h, prev, k)))
        prev = h
    plan.append(("bottleneck", (hidden[-1], hidden[-1], k)))
    for i in reversed(range(config.levels)):
        above = hidden[i + 1] if i + 1 < config.levels else hidden[-1]
        plan.append((f"dec{i}", (hidden[i], above + hidden[i], k)))
    plan.append(("head", (config.out_channels, hidden[0], 1)))
    return plan


def init_params(config: ModelConfig, rng: np.random.Generator | None = None) -> Parameters:
    """He-scaled normal weights, zero biases, drawn from the config seed."""
    if rng is None:
        rng = np.random.default_rng(config.seed)
    tensors: dict[str, np.ndarray] = {}
    for name, (out_c, in_c, k) in _layer_plan(config):
        scale = math.sqrt(2.0 / (in_c * k))
        tensors[f"{name}.w"] = rng.normal(0.0, scale, (out_c, in_c, k))
        tensors[f"{name}.b"] = np.zeros(out_c)
    return Parameters(tensors)


def zero_params(config: ModelConfig) -> Parameters:
    return Parameters(
        {
            f"{name}.{suffix}": np.zeros(shape if suffix == "w" else (shape[0],))
            for name, shape in _layer_plan(config)
            for suffix in ("w", "b")
        }
    )


# -- primitive layers (forward returns cache for the backward pass) ---------


def _conv_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray):
    k = w.shape[2]
    half = k // 2
    xp = np.pad(x, ((0, 0), (0, 0), (half, half))) if half else x
    windows = sliding_window_view(xp, k, axis=2)
    out = np.einsum("bctk,ock->bot", windows, w) + b[None, :, None]
    return out, (windows, w, x.shape)


def _conv_backward(dout: np.ndarray, cache):
    windows, w, x_shape = cache
    dw = np.einsum("bot,bctk->ock", dout, windows)
    db = dout.sum(axis=(0, 2))
    # dx is the same-padded conv of dout with the kernel flipped along its
    # taps and transposed in its channel axes
    w_t = np.ascontiguousarray(w[:, :, ::-1].transpose(1, 0, 2))
    dx, _ = _conv_forward(dout, w_t, np.zeros(w_t.shape[0]))
    return dx, dw, db


def _relu_forward(x: np.ndarray):
    mask = x > 0
    return x * mask, mask


def _relu_backward(dout: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return dout * mask


def _pool_forward(x: np.ndarray):
    b, c, t = x.shape
    pairs = x.reshape(b, c, t // 2, 2)
    idx = pairs.argmax(axis=3)
    out = np.take_along_axis(pairs, idx[..., None], axis=3)[..., 0]
    return out, (idx, x.shape)


def _pool_backward(dout: np.ndarray, cache) -> np.ndarray:
    idx, x_shape = cache
    b, c, t = x_shape
    dpairs = np.zeros((b, c, t // 2, 2))
    np.put_along_axis(dpairs, idx[..., None], dout[..., None], axis=3)
    return dpairs.reshape(b, c, t)


def _upsample_forward(x: np.ndarray) -> np.ndarray:
    return np.repeat(x, 2, axis=2)


def _upsample_backward(dout: np.ndarray) -> np.ndarray:
    b, c, t = dout.shape
    return dout.reshape(b, c, t // 2, 2).sum(axis=3)


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


# -- forward / loss / gradients ----------------------------------------------


def _check_input(x: np.ndarray, config: ModelConfig) -> np.ndarray:
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 3:
        raise ShapeMismatch(f"x must be (batch, channels, steps), got {arr.shape}")
    if arr.shape[1] != config.in_channels:
        raise ShapeMismatch(
            f"x has {arr.shape[1]} channels, config expects {config.in_channels}"
        )
    if arr.shape[2] < 1:
        raise ShapeMismatch("x must contain at least one step")
    return arr


def _forward_impl(params: Parameters, x: np.ndarray, config: ModelConfig):
    """Run the network, recording every cache needed by the backward pass."""
    arr = _check_input(x, config)
    if not params.all_finite():
        raise NonFiniteParameters("parameters contain NaN or Inf")
    t_in = arr.shape[2]
    block = 2**config.levels
    pad = (-t_in) % block
    h = np.pad(arr, ((0, 0), (0, 0), (0, pad)), mode="edge") if pad else arr

    p = params.tensors
    enc_caches = []
    skips = []
    for i in range(config.levels):
        z, conv_cache = _conv_forward(h, p[f"enc{i}.w"], p[f"enc{i}.b"])
        a, mask = _relu_forward(z)
        pooled, pool_cache = _pool_forward(a)
        enc_caches.append((conv_cache, mask, pool_cache))
        skips.append(a)
        h = pooled

    z, bott_cache = _conv_forward(h, p["bottleneck.w"], p["bottleneck.b"])
    cur, bott_mask = _relu_forward(z)

    dec_caches = []
    for i in reversed(range(config.levels)):
        up = _upsample_forward(cur)
        cat = np.concatenate([up, skips[i]], axis=1)
        z, conv_cache = _conv_forward(cat, p[f"dec{i}.w"], p[f"dec{i}.b"])
        cur, mask = _relu_forward(z)
        dec_caches.append((i, up.shape[1], conv_cache, mask))

    logits_full, head_cache = _conv_forward(cur, p["head.w"], p["head.b"])
    logits = logits_full[:, :, :t_in]
    if config.is_segmentation:
        out = _softmax(logits)
    else:
        out = logits
    cache = {
        "enc": enc_caches,
        "bottleneck": (bott_cache, bott_mask),
        "dec": dec_caches,
        "head": head_cache,
        "t_in": t_in,
        "t_pad": logits_full.shape[2],
        "logits": logits,
        "out": out,
    }
    return out, cache


def forward(params: Parameters, x: np.ndarray, config: ModelConfig) -> np.ndarray:
    """Batched forward pass: (B, in_channels, T) -> (B, out_channels, T)."""
    out, _ = _forward_impl(params, x, config)
    return out


def predict(params: Parameters, x: np.ndarray, config: ModelConfig) -> np.ndarray:
    """Single-series convenience wrapper: (in_channels, T) -> (out_channels, T)."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeMismatch(f"x must be (channels, steps), got {arr.shape}")
    return forward(params, arr[None], config)[0]


def _backward_impl(params: Parameters, cache: dict, dlogits: np.ndarray, config: ModelConfig):
    """Push dL/dlogits back through the tape; returns the gradient container."""
    p = params.tensors
    grads: dict[str, np.ndarray] = {}

    pad = cache["t_pad"] - cache["t_in"]
    if pad:
        dlogits_full = np.pad(dlogits, ((0, 0), (0, 0), (0, pad)))
    else:
        dlogits_full = dlogits
    dcur, grads["head.w"], grads["head.b"] = _conv_backward(
        dlogits_full, cache["head"]
    )

    dskips = [None] * config.levels
    for i, up_channels, conv_cache, mask in reversed(cache["dec"]):
        dz = _relu_backward(dcur, mask)
        dcat, grads[f"dec{i}.w"], grads[f"dec{i}.b"] = _conv_backward(dz, conv_cache)
        dup = dcat[:, :up_channels]
        dskips[i] = dcat[:, up_channels:]
        dcur = _upsample_backward(dup)

    bott_cache, bott_mask = cache["bottleneck"]
    dz = _relu_backward(dcur, bott_mask)
    dh, grads["bottleneck.w"], grads["bottleneck.b"] = _conv_backward(dz, bott_cache)

    for i in reversed(range(config.levels)):
        conv_cache, mask, pool_cache = cache["enc"][i]
        da = _pool_backward(dh, pool_cache) + dskips[i]
        dz = _relu_backward(da, mask)
        dh, grads[f"enc{i}.w"], grads[f"enc{i}.b"] = _conv_backward(dz, conv_cache)

    return Parameters({name: grads[name] for name in params.tensors})


def loss(pred: np.ndarray, target: np.ndarray, mode: str) -> float:
    """MSE for regression modes; mean per-step cross-entropy for segmentation.

    Segmentation expects pred as per-step class probabilities (B, 2, T) and
    integer labels (B, T) in {0, 1}.
    """
    pred = np.asarray(pred, dtype=np.float64)
    if mode in ("regression_2ch", "regression_1ch"):
        target = np.asarray(target, dtype=np.float64)
        if pred.shape != target.shape:
            raise ShapeMismatch(f"pred {pred.shape} vs target {target.shape}")
        # overflow to inf is fine here: the training loop turns it into
        # DivergedLoss instead of warning
        with np.errstate(over="ignore"):
            diff = pred - target
            return float(np.mean(diff * diff))
    if mode != "segmentation_2class":
        raise InvalidConfig(f"unknown loss mode {mode!r}")
    labels = np.asarray(target)
    if pred.ndim != 3 or pred.shape[1] != 2 or labels.shape != (
        pred.shape[0],
        pred.shape[2],
    ):
        raise ShapeMismatch(f"pred {pred.shape} vs labels {labels.shape}")
    idx = labels.astype(np.int64)
    picked = np.take_along_axis(pred, idx[:, None, :], axis=1)[:, 0, :]
    return float(-np.mean(np.log(picked)))


def _loss_and_gradients(
    params: Parameters, x: np.ndarray, y: np.ndarray, config: ModelConfig
) -> tuple[float, Parameters]:
    out, cache = _forward_impl(params, x, config)
    if config.is_segmentation:
        labels = np.asarray(y)
        if labels.shape != (out.shape[0], out.shape[2]):
            raise ShapeMismatch(f"labels {labels.shape} vs output {out.shape}")
        loss_value = loss(out, labels, config.out_mode)
        onehot = np.zeros_like(out)
        np.put_along_axis(onehot, labels.astype(np.int64)[:, None, :], 1.0, axis=1)
        dlogits = (out - onehot) / (out.shape[0] * out.shape[2])
    else:
        target = np.asarray(y, dtype=np.float64)
        if target.shape != out.shape:
            raise ShapeMismatch(f"target {target.shape} vs output {out.shape}")
        loss_value = loss(out, target, config.out_mode)
        dlogits = 2.0 * (out - target) / out.size
    grads = _backward_impl(params, cache, dlogits, config)
    if not grads.all_finite():
        raise NonFiniteGradient("gradients contain NaN or Inf")
    return loss_value, grads


def gradients(
    params: Parameters, batch: tuple[np.ndarray, np.ndarray], config: ModelConfig
) -> Parameters:
    """Exact gradients of the scalar batch loss with respect to every tensor."""
    x, y = batch
    _, grads = _loss_and_gradients(params, np.asarray(x), y, config)
    return grads


# -- optimization ------------------------------------------------------------


def cosine_lr(step: int, total_steps: int, base_lr: float) -> float:
    """Cosine decay from base_lr (step 0) toward 0 at step == total_steps."""
    if total_steps < 1:
        raise InvalidConfig(f"total_steps={total_steps}, expected >= 1")
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * step / total_steps))


def clip_gradients(grads: Parameters, max_norm: float) -> tuple[Parameters, float]:
    """Global-norm clipping; returns (possibly rescaled grads, original norm)."""
    norm = grads.global_norm()
    if norm > max_norm and norm > 0:
        scale = max_norm / norm
        grads = Parameters({k: v * scale for k, v in grads.tensors.items()})
    return grads, norm


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    train_loss: float
    val_score: float | None


@dataclass
class TrainResult:
    params: Parameters
    best_epoch: int
    trace: list[EpochStats] = field(default_factory=list)


def train(
    dataset: Sequence[tuple[np.ndarray, np.ndarray]],
    model_config: ModelConfig,
    train_config: TrainConfig,
    val_scorer: Callable[[Parameters], float] | None = None,
    refresh_targets: Callable[[int], Sequence[tuple[np.ndarray, np.ndarray]]] | None = None,
) -> TrainResult:
    """Adam + cosine decay + global-norm clipping, deterministic per seed.

    dataset items are (input (C, T), target) with a shared T.  val_scorer,
    when given, is evaluated on the running parameters after every epoch and
    the parameters of the best-scoring epoch are returned (ties keep the
    earlier epoch); without it the lowest-train-loss epoch wins.
    refresh_targets, when given, replaces the dataset at the start of each
    epoch (used for target schedules that vary over training).
    """
    items = list(dataset)
    if not items:
        raise InvalidConfig("dataset is empty")
    rng = np.random.default_rng(model_config.seed)
    params = init_params(model_config, rng)
    m = params.zeros_like()
    v = params.zeros_like()

    n = len(items)
    batch = train_config.batch_size
    n_batches = (n + batch - 1) // batch
    total_steps = train_config.epochs * n_batches
    step = 0

    best_params = params.copy()
    best_epoch = 0
    best_key: tuple | None = None
    trace: list[EpochStats] = []

    for epoch in range(train_config.epochs):
        if refresh_targets is not None:
            items = list(refresh_targets(epoch))
            if len(items) != n:
                raise InvalidConfig("refresh_targets changed the dataset size")
        order = rng.permutation(n)
        epoch_losses = []
        for bi in range(n_batches):
            sel = order[bi * batch : (bi + 1) * batch]
            x = np.stack([np.asarray(items[j][0], dtype=np.float64) for j in sel])
            if model_config.is_segmentation:
                y = np.stack([np.asarray(items[j][1]) for j in sel])
            else:
                y = np.stack([np.asarray(items[j][1], dtype=np.float64) for j in sel])
            loss_value, grads = _loss_and_gradients(params, x, y, model_config)
            if not np.isfinite(loss_value):
                raise DivergedLoss(f"loss {loss_value} at epoch {epoch}, batch {bi}")
            grads, _ = clip_gradients(grads, train_config.grad_clip_norm)
            lr = cosine_lr(step, total_steps, train_config.learning_rate)
            step += 1
            b1c = 1.0 - _ADAM_BETA1**step
            b2c = 1.0 - _ADAM_BETA2**step
            for name, g in grads.tensors.items():
                m.tensors[name] = _ADAM_BETA1 * m.tensors[name] + (1 - _ADAM_BETA1) * g
                v.tensors[name] = _ADAM_BETA2 * v.tensors[name] + (1 - _ADAM_BETA2) * (
                    g * g
                )
                params.tensors[name] = params.tensors[name] - lr * (
                    m.tensors[name] / b1c
                ) / (np.sqrt(v.tensors[name] / b2c) + _ADAM_EPS)
            epoch_losses.append(loss_value)

        train_loss = float(np.mean(epoch_losses))
        val_score = val_scorer(params) if val_scorer is not None else None
        trace.append(EpochStats(epoch, train_loss, val_score))
        # maximize validation score when available, else minimize train loss
        key = (-val_score,) if val_score is not None else (train_loss,)
        if best_key is None or key < best_key:
            best_key = key
            best_epoch = epoch
            best_params = params.copy()

    return TrainResult(params=best_params, best_epoch=best_epoch, trace=trace)


# -- checkpoints -------------------------------------------------------------

_MAGIC = b"EVRG"
_VERSION = 1


def save_params(path: str | Path, params: Parameters) -> None:
    """Binary checkpoint: magic, u16 version, then named little-endian tensors."""
    blob = bytearray()
    blob += _MAGIC
    blob += struct.pack("<HI", _VERSION, len(params.tensors))
    for name, tensor in params.tensors.items():
        encoded = name.encode("utf-8")
        blob += struct.pack("<H", len(encoded))
        blob += encoded
        blob += struct.pack("<B", tensor.ndim)
        blob += struct.pack(f"<{tensor.ndim}I", *tensor.shape)
        blob += np.ascontiguousarray(tensor, dtype="<f8").tobytes()
    try:
        Path(path).write_bytes(bytes(blob))
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def load_params(path: str | Path) -> Parameters:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    if blob[:4] != _MAGIC:
        raise ParseError("not a parameter checkpoint (bad magic)", line=1)
    version, count = struct.unpack_from("<HI", blob, 4)
    if version != _VERSION:
        raise ParseError(f"unsupported checkpoint version {version}", line=1)
    pos = 10
    tensors: dict[str, np.ndarray] = {}
    for _ in range(count):
        (name_len,) = struct.unpack_from("<H", blob, pos)
        pos += 2
        name = blob[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (ndim,) = struct.unpack_from("<B", blob, pos)
        pos += 1
        shape = struct.unpack_from(f"<{ndim}I", blob, pos)
        pos += 4 * ndim
        size = int(np.prod(shape)) if ndim else 1
        data = np.frombuffer(blob, dtype="<f8", count=size, offset=pos)
        pos += 8 * size
        tensors[name] = data.astype(np.float64).reshape(shape)
    if pos != len(blob):
        raise ParseError("trailing bytes in checkpoint", line=1)
    return Parameters(tensors)
