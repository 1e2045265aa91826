"""Desk-scale face-swap model: one shared encoder, two identity decoders.

Dense 256->64->16 encoder and 16->64->256 decoders over 16x16 grayscale
faces in [0,1], leaky-ReLU hidden layers and a logistic output. Training
is plain momentum SGD with hand-derived gradients, small enough to check
exhaustively against finite differences. Everything is deterministic
given a seed.
"""

from __future__ import annotations

import dataclasses

import numpy as np

from .errors import DataError

IMAGE_SIDE = 16
INPUT_DIM = IMAGE_SIDE * IMAGE_SIDE
HIDDEN_DIM = 64
LATENT_DIM = 16
LEAKY_SLOPE = 0.01
IDENTITIES = ("X", "Y")

# (name, fan_in, fan_out); biases share the layer's name with a _b suffix
_LAYERS = [
    ("enc1", INPUT_DIM, HIDDEN_DIM),
    ("enc2", HIDDEN_DIM, LATENT_DIM),
    ("dec_X1", LATENT_DIM, HIDDEN_DIM),
    ("dec_X2", HIDDEN_DIM, INPUT_DIM),
    ("dec_Y1", LATENT_DIM, HIDDEN_DIM),
    ("dec_Y2", HIDDEN_DIM, INPUT_DIM),
]

PARAM_NAMES = [n for name, _, _ in _LAYERS for n in (name + "_w", name + "_b")]

ENCODER_PARAMS = ("enc1_w", "enc1_b", "enc2_w", "enc2_b")


def decoder_params(identity: str) -> tuple[str, ...]:
    if identity not in IDENTITIES:
        raise DataError(f"unknown identity {identity!r}")
    return (f"dec_{identity}1_w", f"dec_{identity}1_b",
            f"dec_{identity}2_w", f"dec_{identity}2_b")


@dataclasses.dataclass
class TinyFaceSample:
    pixels: np.ndarray  # (16, 16) reals in [0, 1]
    identity: str
    params: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        self.pixels = np.asarray(self.pixels, dtype=np.float64)
        if self.pixels.shape != (IMAGE_SIDE, IMAGE_SIDE):
            raise DataError(f"sample pixels must be {IMAGE_SIDE}x{IMAGE_SIDE}")
        if self.pixels.min() < 0 or self.pixels.max() > 1:
            raise DataError("sample pixels must lie in [0, 1]")
        if self.identity not in IDENTITIES:
            raise DataError(f"identity must be one of {IDENTITIES}, got {self.identity!r}")


@dataclasses.dataclass
class SwapModel:
    params: dict[str, np.ndarray]
    seed: int


@dataclasses.dataclass
class TrainConfig:
    batch_size: int = 64
    learning_rate: float = 1.0
    momentum: float = 0.9
    steps: int = 500
    seed: int = 0

    def __post_init__(self):
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
        if self.learning_rate < 0:
            raise DataError("learning_rate must be >= 0")


def init_model(seed: int) -> SwapModel:
    """Uniform(-a, a) weights with a = sqrt(6/(fan_in+fan_out)); zero biases."""
    rng = np.random.default_rng(seed)
    params = {}
    for name, fan_in, fan_out in _LAYERS:
        a = np.sqrt(6.0 / (fan_in + fan_out))
        params[name + "_w"] = rng.uniform(-a, a, size=(fan_in, fan_out))
        params[name + "_b"] = np.zeros(fan_out)
    return SwapModel(params=params, seed=seed)


def _leaky(x):
    return np.where(x > 0, x, LEAKY_SLOPE * x)


def _leaky_grad(x):
    return np.where(x > 0, 1.0, LEAKY_SLOPE)


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def _as_batch(batch) -> np.ndarray:
    if isinstance(batch, np.ndarray):
        arr = batch.reshape(-1, INPUT_DIM).astype(np.float64)
    else:
        arr = np.stack([np.asarray(s.pixels, dtype=np.float64).reshape(INPUT_DIM)
                        for s in batch])
    if arr.shape[0] == 0:
        raise DataError("empty batch")
    return arr


def encode(model: SwapModel, sample) -> np.ndarray:
    """Latent codes, shape (16,) for one sample or (n, 16) for a batch."""
    single = isinstance(sample, TinyFaceSample) or (
        isinstance(sample, np.ndarray) and sample.size == INPUT_DIM
    )
    x = _as_batch([sample] if isinstance(sample, TinyFaceSample) else sample)
    p = model.params
    h = _leaky(x @ p["enc1_w"] + p["enc1_b"])
    z = h @ p["enc2_w"] + p["enc2_b"]
    return z[0] if single else z


def decode(model: SwapModel, latent: np.ndarray, identity: str) -> np.ndarray:
    """Reconstruct 16x16 rasters in (0, 1) from latent codes."""
    w1, b1, w2, b2 = (model.params[n] for n in decoder_params(identity))
    z = np.asarray(latent, dtype=np.float64)
    single = z.ndim == 1
    z2 = z.reshape(-1, LATENT_DIM)
    h = _leaky(z2 @ w1 + b1)
    out = _sigmoid(h @ w2 + b2).reshape(-1, IMAGE_SIDE, IMAGE_SIDE)
    return out[0] if single else out


def reconstruction_loss(model: SwapModel, batch, identity: str) -> float:
    """MSE between the batch and its encode->decode reconstruction, averaged
    over batch and pixels."""
    x = _as_batch(batch)
    recon = decode(model, encode(model, x), identity).reshape(-1, INPUT_DIM)
    return float(np.mean((recon - x) ** 2))


def _loss_and_grads(params: dict[str, np.ndarray], x: np.ndarray, identity: str):
    """Forward + backward for one identity's reconstruction path."""
    h1_pre = x @ params["enc1_w"] + params["enc1_b"]
    h1 = _leaky(h1_pre)
    z = h1 @ params["enc2_w"] + params["enc2_b"]
    d1w, d1b, d2w, d2b = decoder_params(identity)
    h2_pre = z @ params[d1w] + params[d1b]
    h2 = _leaky(h2_pre)
    out_pre = h2 @ params[d2w] + params[d2b]
    out = _sigmoid(out_pre)
    diff = out - x
    loss = float(np.mean(diff ** 2))

    n = x.shape[0]
    g_out_pre = (2.0 / (n * INPUT_DIM)) * diff * out * (1.0 - out)
    grads = {
        d2w: h2.T @ g_out_pre,
        d2b: g_out_pre.sum(axis=0),
    }
    g_h2 = (g_out_pre @ params[d2w].T) * _leaky_grad(h2_pre)
    grads[d1w] = z.T @ g_h2
    grads[d1b] = g_h2.sum(axis=0)
    g_z = g_h2 @ params[d1w].T
    grads["enc2_w"] = h1.T @ g_z
    grads["enc2_b"] = g_z.sum(axis=0)
    g_h1 = (g_z @ params["enc2_w"].T) * _leaky_grad(h1_pre)
    grads["enc1_w"] = x.T @ g_h1
    grads["enc1_b"] = g_h1.sum(axis=0)
    return loss, grads


def losses_and_grads(model: SwapModel, batch_x, batch_y):
    """(loss_X, loss_Y, grads): decoder grads stay per-identity, encoder
    grads accumulate both reconstruction paths."""
    x = _as_batch(batch_x)
    y = _as_batch(batch_y)
    loss_x, grads_x = _loss_and_grads(model.params, x, "X")
    loss_y, grads_y = _loss_and_grads(model.params, y, "Y")
    grads = {name: np.zeros_like(p) for name, p in model.params.items()}
    for g in (grads_x, grads_y):
        for name, val in g.items():
            grads[name] += val
    return loss_x, loss_y, grads


def path_grads(model: SwapModel, batch, identity: str):
    """(loss, grads) for one identity's reconstruction path alone; tensors
    the path never touches come back as exact zeros."""
    x = _as_batch(batch)
    loss, grads = _loss_and_grads(model.params, x, identity)
    full = {name: np.zeros_like(p) for name, p in model.params.items()}
    for name, val in grads.items():
        full[name] = val
    return loss, full


def zero_velocity(model: SwapModel) -> dict[str, np.ndarray]:
    return {name: np.zeros_like(p) for name, p in model.params.items()}


def train_step(model: SwapModel, batch_x, batch_y, cfg: TrainConfig,
               velocity: dict[str, np.ndarray] | None = None,
               step_index: int = 0) -> tuple[float, float]:
    """One momentum-SGD update over both reconstruction paths; returns the
    pre-update losses. Mutates model.params (and velocity) in place."""
    loss_x, loss_y, grads = losses_and_grads(model, batch_x, batch_y)
    if not (np.isfinite(loss_x) and np.isfinite(loss_y)):
        raise DataError(f"non-finite loss at step {step_index}: diverged")
    if velocity is None:
        velocity = zero_velocity(model)
    for name in model.params:
        velocity[name] = cfg.momentum * velocity[name] + grads[name]
        model.params[name] -= cfg.learning_rate * velocity[name]
    return loss_x, loss_y


class _BatchSampler:
    """Cycles through shuffled index permutations, reshuffling on wraparound."""

    def __init__(self, n: int, batch_size: int, rng: np.random.Generator):
        self.n = n
        self.batch_size = batch_size
        self.rng = rng
        self.order = rng.permutation(n)
        self.pos = 0

    def next_batch(self) -> np.ndarray:
        idx = []
        while len(idx) < self.batch_size:
            if self.pos >= self.n:
                self.order = self.rng.permutation(self.n)
                self.pos = 0
            take = min(self.batch_size - len(idx), self.n - self.pos)
            idx.extend(self.order[self.pos:self.pos + take])
            self.pos += take
        return np.array(idx)


def train(model: SwapModel, dataset, cfg: TrainConfig) -> list[tuple[float, float]]:
    """Run cfg.steps updates over seeded shuffled batches; returns the
    per-step (loss_X, loss_Y) history."""
    xs = _as_batch([s for s in dataset if s.identity == "X"]) if any(
        s.identity == "X" for s in dataset) else None
    ys = _as_batch([s for s in dataset if s.identity == "Y"]) if any(
        s.identity == "Y" for s in dataset) else None
    if xs is None or ys is None:
        raise DataError("dataset must contain samples of both identities")
    rng = np.random.default_rng(cfg.seed)
    sampler_x = _BatchSampler(xs.shape[0], cfg.batch_size, rng)
    sampler_y = _BatchSampler(ys.shape[0], cfg.batch_size, rng)
    velocity = zero_velocity(model)
    history = []
    for step in range(cfg.steps):
        bx = xs[sampler_x.next_batch()]
        by = ys[sampler_y.next_batch()]
        history.append(train_step(model, bx, by, cfg, velocity, step_index=step))
    return history


def swap(model: SwapModel, sample, to_identity: str = "Y") -> np.ndarray:
    """Encode with the shared encoder, decode with the other identity's
    decoder."""
    return decode(model, encode(model, sample), to_identity)
