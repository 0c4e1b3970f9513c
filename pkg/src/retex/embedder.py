"""Patch embedding: augmented convolutional autoencoder and a descriptor baseline.

The autoencoder reconstructs the original patch from an augmented view
(scale / translate / flip / crop jitter, no color changes), which pushes
the 64-dimensional bottleneck toward augmentation-invariant codes.
Everything is plain numpy with explicit backpropagation so training is
bit-deterministic for a given seed.
"""

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    DivergedTraining,
    TooFewCandidates,
    UnreadableFile,
    UnsupportedFormat,
    UntrainedModel,
)
from .raster import RasterImage, to_grayscale
from .sampler import Candidate

EMBED_DIM = 64

_PARAM_ORDER = (
    "conv1_w", "conv1_b",
    "conv2_w", "conv2_b",
    "enc_w", "enc_b",
    "dec_w", "dec_b",
    "tconv1_w", "tconv1_b",
    "tconv2_w", "tconv2_b",
    "head_w", "head_b",
)

_MODEL_MAGIC = b"RTEX"
_MODEL_VERSION = 1
_KIND_CODES = {"autoencoder": 0, "descriptor": 1}


@dataclass(frozen=True)
class AugmentationSpec:
    """Geometric augmentation ranges; color channels are never modified."""

    flip_prob: float = 0.5
    translate_max: float = 0.25
    scale_range: tuple[float, float] = (0.85, 1.15)
    crop_jitter: float = 0.15

    def __post_init__(self):
        lo, hi = self.scale_range
        if not 0.0 <= self.flip_prob <= 1.0:
            raise ValueError("flip_prob must be in [0, 1]")
        if not 0.0 <= self.translate_max < 0.5:
            raise ValueError("translate_max must be in [0, 0.5)")
        if not 0.0 < lo <= 1.0 <= hi:
            raise ValueError("scale_range must satisfy 0 < lo <= 1 <= hi")
        if not 0.0 <= self.crop_jitter < 0.5:
            raise ValueError("crop_jitter must be in [0, 0.5)")

    @classmethod
    def identity(cls) -> "AugmentationSpec":
        """Spec whose only transform is the canonical resize."""
        return cls(flip_prob=0.0, translate_max=0.0, scale_range=(1.0, 1.0),
                   crop_jitter=0.0)


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 1e-4
    canonical_size: int = 32

    def __post_init__(self):
        if self.canonical_size % 4 != 0 or self.canonical_size < 4:
            raise ValueError("canonical_size must be a positive multiple of 4")
        if self.epochs < 1 or self.batch_size < 1:
            raise ValueError("epochs and batch_size must be >= 1")


@dataclass(frozen=True, eq=False)
class AugmentedPair:
    augmented: RasterImage
    original: RasterImage


@dataclass(frozen=True, eq=False)
class EmbedderModel:
    """Trained autoencoder weights or the parameter-free descriptor."""

    kind: str
    canonical_size: int
    embed_dim: int
    params: dict[str, np.ndarray] | None = None
    loss_history: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in _KIND_CODES:
            raise ValueError(f"unknown embedder kind {self.kind!r}")
        if self.kind == "autoencoder" and self.embed_dim != EMBED_DIM:
            raise ValueError(f"autoencoder embed_dim must be {EMBED_DIM}")
        if self.params is not None:
            for name, value in self.params.items():
                if not np.all(np.isfinite(value)):
                    raise ValueError(f"non-finite parameter tensor {name}")

    @property
    def parameters(self) -> np.ndarray:
        """All weights as one flat float32 vector, in fixed layer order."""
        if self.params is None:
            return np.zeros(0, dtype=np.float32)
        return np.concatenate(
            [np.asarray(self.params[n], dtype=np.float32).ravel()
             for n in _PARAM_ORDER]
        )


# --------------------------------------------------------------------------
# Geometric resampling
#
# Scale, translate, flip and crop jitter are all axis-aligned affine maps,
# so the whole chain composes into one separable coordinate transform and
# the source patch is sampled exactly once (bilinear, symmetric reflection
# at the borders).
# --------------------------------------------------------------------------

def _reflect_indices(idx: np.ndarray, n: int) -> np.ndarray:
    period = 2 * n
    r = np.mod(idx, period)
    return np.where(r < n, r, period - 1 - r)


def _sample_axis(coords: np.ndarray, n: int):
    i0 = np.floor(coords).astype(np.int64)
    frac = (coords - i0).astype(np.float32)
    return _reflect_indices(i0, n), _reflect_indices(i0 + 1, n), frac


def _resample(src: np.ndarray, ys: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Bilinear gather of an (h, w, 3) float32 array at separable coords."""
    h, w = src.shape[0], src.shape[1]
    y0, y1, fy = _sample_axis(ys, h)
    x0, x1, fx = _sample_axis(xs, w)
    rows = src[y0] * (1.0 - fy[:, None, None]) + src[y1] * fy[:, None, None]
    out = rows[:, x0] * (1.0 - fx[None, :, None]) + rows[:, x1] * fx[None, :, None]
    return out


def _transform_patch(
    src: np.ndarray,
    out_size: int,
    scale: float = 1.0,
    dx: float = 0.0,
    dy: float = 0.0,
    flip: bool = False,
    crop_frac: float = 0.0,
    off_x: float = 0.0,
    off_y: float = 0.0,
) -> np.ndarray:
    """Apply scale -> translate -> flip -> crop jitter, sampled at out_size."""
    side = src.shape[0]
    canvas = side * scale
    window = canvas * (1.0 - crop_frac)
    ox = off_x * (canvas - window)
    oy = off_y * (canvas - window)
    t = (np.arange(out_size) + 0.5) * (window / out_size) - 0.5
    xs = ox + t
    ys = oy + t
    if flip:
        xs = (canvas - 1.0) - xs
    xs = xs - dx
    ys = ys - dy
    xs = (xs + 0.5) / scale - 0.5
    ys = (ys + 0.5) / scale - 0.5
    return _resample(src, ys, xs)


def _patch_float(patch: RasterImage) -> np.ndarray:
    return patch.pixels.astype(np.float32)


def canonicalize(patch: RasterImage, canonical_size: int) -> RasterImage:
    """Resize a patch to canonical_size x canonical_size (bilinear)."""
    out = _transform_patch(_patch_float(patch), canonical_size)
    return RasterImage(np.clip(np.rint(out), 0, 255).astype(np.uint8))


def _draw_augment_params(rng: np.random.Generator, spec: AugmentationSpec,
                         sides: np.ndarray):
    """Per-sample transform parameters; one fixed-order draw per field."""
    n = len(sides)
    lo, hi = spec.scale_range
    scale = rng.uniform(lo, hi, n)
    shift = rng.uniform(-1.0, 1.0, (n, 2)) * (spec.translate_max * sides[:, None])
    flip = rng.random(n) < spec.flip_prob
    crop_frac = rng.uniform(0.0, spec.crop_jitter, n) if spec.crop_jitter > 0 \
        else np.zeros(n)
    offs = rng.random((n, 2))
    return scale, shift, flip, crop_frac, offs


def make_augmented_pair(
    patch: RasterImage,
    spec: AugmentationSpec,
    rng_stream: np.random.Generator,
    canonical_size: int = 32,
) -> AugmentedPair:
    """Build one (augmented, original) training pair at canonical size."""
    src = _patch_float(patch)
    scale, shift, flip, crop_frac, offs = _draw_augment_params(
        rng_stream, spec, np.array([patch.width], dtype=np.float64)
    )
    original = _transform_patch(src, canonical_size)
    augmented = _transform_patch(
        src, canonical_size,
        scale=float(scale[0]), dx=float(shift[0, 0]), dy=float(shift[0, 1]),
        flip=bool(flip[0]), crop_frac=float(crop_frac[0]),
        off_x=float(offs[0, 0]), off_y=float(offs[0, 1]),
    )
    to_raster = lambda a: RasterImage(np.clip(np.rint(a), 0, 255).astype(np.uint8))
    return AugmentedPair(augmented=to_raster(augmented), original=to_raster(original))


# --------------------------------------------------------------------------
# Convolution primitives (im2col / col2im), forward and backward
#
# Activations are channels-last (n, h, w, c) and every layer reduces to a
# single fat GEMM over all batch positions, which is where BLAS is fast.
# --------------------------------------------------------------------------

def _im2col(x: np.ndarray, k: int, stride: int, pad: int):
    n, h, w, c = x.shape
    hp, wp = h + 2 * pad, w + 2 * pad
    xp = np.zeros((n, hp, wp, c), dtype=x.dtype)
    xp[:, pad:pad + h, pad:pad + w, :] = x
    oh = (hp - k) // stride + 1
    ow = (wp - k) // stride + 1
    s0, s1, s2, s3 = xp.strides
    view = np.lib.stride_tricks.as_strided(
        xp, (n, oh, ow, k, k, c),
        (s0, s1 * stride, s2 * stride, s1, s2, s3),
    )
    cols = np.ascontiguousarray(view).reshape(n * oh * ow, k * k * c)
    return cols, (oh, ow)


def _col2im(cols: np.ndarray, xshape, k: int, stride: int, pad: int) -> np.ndarray:
    n, h, w, c = xshape
    hp, wp = h + 2 * pad, w + 2 * pad
    oh = (hp - k) // stride + 1
    ow = (wp - k) // stride + 1
    xp = np.zeros((n, hp, wp, c), dtype=cols.dtype)
    cols6 = cols.reshape(n, oh, ow, k, k, c)
    for ki in range(k):
        for kj in range(k):
            xp[:, ki:ki + stride * oh:stride, kj:kj + stride * ow:stride, :] += \
                cols6[:, :, :, ki, kj, :]
    return xp[:, pad:pad + h, pad:pad + w, :]


def _conv_fwd(x, w, b, stride, pad):
    """w has shape (k, k, c_in, f)."""
    k, f = w.shape[0], w.shape[3]
    cols, (oh, ow) = _im2col(x, k, stride, pad)
    out = cols @ w.reshape(-1, f) + b
    return out.reshape(x.shape[0], oh, ow, f), cols


def _conv_bwd(dout, cols, x_shape, w, stride, pad):
    f = w.shape[3]
    dflat = dout.reshape(-1, f)
    dw = (cols.T @ dflat).reshape(w.shape)
    db = dflat.sum(axis=0)
    dcols = dflat @ w.reshape(-1, f).T
    dx = _col2im(dcols, x_shape, w.shape[0], stride, pad)
    return dx, dw, db


def _tconv_fwd(x, w, b, stride=2, pad=1):
    """Transposed conv doubling spatial size; w has shape (c_in, k, k, c_out)."""
    n, h, wd, c_in = x.shape
    k, c_out = w.shape[1], w.shape[3]
    cols = x.reshape(-1, c_in) @ w.reshape(c_in, -1)
    out = _col2im(cols, (n, h * stride, wd * stride, c_out), k, stride, pad)
    return out + b


def _tconv_bwd(dout, x, w, stride=2, pad=1):
    c_in, k = w.shape[0], w.shape[1]
    cols_dy, _ = _im2col(dout, k, stride, pad)
    dw = (x.reshape(-1, c_in).T @ cols_dy).reshape(w.shape)
    db = dout.sum(axis=(0, 1, 2))
    dx = (cols_dy @ w.reshape(c_in, -1).T).reshape(x.shape)
    return dx, dw, db


def _init_params(seed: int, canonical_size: int, embed_dim: int,
                 dtype=np.float32) -> dict[str, np.ndarray]:
    flat = 32 * (canonical_size // 4) ** 2
    shapes = {
        "conv1_w": ((3, 3, 3, 16), 27),
        "conv1_b": ((16,), None),
        "conv2_w": ((3, 3, 16, 32), 144),
        "conv2_b": ((32,), None),
        "enc_w": ((flat, embed_dim), flat),
        "enc_b": ((embed_dim,), None),
        "dec_w": ((embed_dim, flat), embed_dim),
        "dec_b": ((flat,), None),
        "tconv1_w": ((32, 3, 3, 32), 288),
        "tconv1_b": ((32,), None),
        "tconv2_w": ((32, 3, 3, 16), 288),
        "tconv2_b": ((16,), None),
        "head_w": ((16, 3), 16),
        "head_b": ((3,), None),
    }
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 1]))
    params = {}
    for name in _PARAM_ORDER:
        shape, fan_in = shapes[name]
        if fan_in is None:
            params[name] = np.zeros(shape, dtype=dtype)
        else:
            bound = 1.0 / np.sqrt(fan_in)
            params[name] = rng.uniform(-bound, bound, shape).astype(dtype)
    return params


def _forward(params, x):
    """Full autoencoder forward pass on (n, h, w, 3) input."""
    p = params
    n = x.shape[0]
    a1, cols1 = _conv_fwd(x, p["conv1_w"], p["conv1_b"], 2, 1)
    h1 = np.maximum(a1, 0)
    a2, cols2 = _conv_fwd(h1, p["conv2_w"], p["conv2_b"], 2, 1)
    h2 = np.maximum(a2, 0)
    flat = h2.reshape(n, -1)
    z = flat @ p["enc_w"] + p["enc_b"]
    a3 = z @ p["dec_w"] + p["dec_b"]
    h3 = np.maximum(a3, 0)
    d0 = h3.reshape(h2.shape)
    a4 = _tconv_fwd(d0, p["tconv1_w"], p["tconv1_b"])
    h4 = np.maximum(a4, 0)
    a5 = _tconv_fwd(h4, p["tconv2_w"], p["tconv2_b"])
    h5 = np.maximum(a5, 0)
    y = h5 @ p["head_w"] + p["head_b"]
    cache = (x, cols1, a1, h1, cols2, a2, h2, flat, z, a3, h3, d0, a4, h4,
             a5, h5)
    return y, cache


def _backward(params, cache, dy):
    p = params
    (x, cols1, a1, h1, cols2, a2, h2, flat, z, a3, h3, d0, a4, h4,
     a5, h5) = cache
    grads = {}
    n = x.shape[0]

    dy2 = dy.reshape(-1, dy.shape[-1])
    grads["head_w"] = h5.reshape(-1, h5.shape[-1]).T @ dy2
    grads["head_b"] = dy2.sum(axis=0)
    dh5 = dy @ p["head_w"].T

    da5 = dh5 * (a5 > 0)
    dh4, grads["tconv2_w"], grads["tconv2_b"] = _tconv_bwd(da5, h4, p["tconv2_w"])
    da4 = dh4 * (a4 > 0)
    dd0, grads["tconv1_w"], grads["tconv1_b"] = _tconv_bwd(da4, d0, p["tconv1_w"])

    dh3 = dd0.reshape(n, -1)
    da3 = dh3 * (a3 > 0)
    grads["dec_w"] = z.T @ da3
    grads["dec_b"] = da3.sum(axis=0)
    dz = da3 @ p["dec_w"].T

    grads["enc_w"] = flat.T @ dz
    grads["enc_b"] = dz.sum(axis=0)
    dflat = dz @ p["enc_w"].T

    dh2 = dflat.reshape(h2.shape)
    da2 = dh2 * (a2 > 0)
    dh1, grads["conv2_w"], grads["conv2_b"] = _conv_bwd(
        da2, cols2, h1.shape, p["conv2_w"], 2, 1)
    da1 = dh1 * (a1 > 0)
    _, grads["conv1_w"], grads["conv1_b"] = _conv_bwd(
        da1, cols1, x.shape, p["conv1_w"], 2, 1)
    return grads


def _encode(params, x):
    a1, _ = _conv_fwd(x, params["conv1_w"], params["conv1_b"], 2, 1)
    h1 = np.maximum(a1, 0)
    a2, _ = _conv_fwd(h1, params["conv2_w"], params["conv2_b"], 2, 1)
    h2 = np.maximum(a2, 0)
    return h2.reshape(x.shape[0], -1) @ params["enc_w"] + params["enc_b"]


def loss_and_grads(params, x, target):
    """Mean-squared reconstruction loss and its parameter gradients."""
    y, cache = _forward(params, x)
    diff = y - target
    loss = float(np.mean(diff * diff))
    dy = (2.0 / diff.size) * diff
    return loss, _backward(params, cache, dy)


def gradient_check(canonical_size: int = 4, embed_dim: int = 8, batch: int = 2,
                   seed: int = 0, step: float = 1e-6) -> float:
    """Max relative error between backprop and central finite differences.

    Runs in float64 on a tiny configuration. Inputs are re-drawn until no
    ReLU pre-activation sits within 50 steps of its kink, where finite
    differences would be invalid.
    """
    params = _init_params(seed, canonical_size, embed_dim, dtype=np.float64)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 3]))
    # Freshly initialized biases are zero, which parks many pre-activations
    # on the ReLU kink; spread them so both branches occur with margin.
    for name in _PARAM_ORDER:
        if name.endswith("_b"):
            params[name] = rng.uniform(-0.05, 0.25, params[name].shape)
    for _ in range(200):
        x = rng.random((batch, canonical_size, canonical_size, 3))
        target = rng.random((batch, canonical_size, canonical_size, 3))
        _, cache = _forward(params, x)
        margin = min(np.abs(cache[i]).min() for i in (2, 5, 9, 12, 14))
        if margin > 50 * step:
            break
    else:
        raise RuntimeError("could not find inputs clear of ReLU kinks")

    def loss_at(p):
        y, _ = _forward(p, x)
        return float(np.mean((y - target) ** 2))

    _, grads = loss_and_grads(params, x, target)
    max_rel = 0.0
    for name in _PARAM_ORDER:
        p = params[name]
        analytic = grads[name]
        for i in range(p.size):
            orig = p.flat[i]
            p.flat[i] = orig + step
            loss_p = loss_at(params)
            p.flat[i] = orig - step
            loss_m = loss_at(params)
            p.flat[i] = orig
            numeric = (loss_p - loss_m) / (2 * step)
            a = float(analytic.flat[i])
            # The 1e-6 floor keeps finite-difference roundoff (~1e-11 on
            # this loss scale) from dominating near-zero gradients.
            rel = abs(numeric - a) / max(abs(numeric), abs(a), 1e-6)
            max_rel = max(max_rel, rel)
    return max_rel


class _Adam:
    def __init__(self, params, lr, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        bc1 = 1.0 - self.b1 ** self.t
        bc2 = 1.0 - self.b2 ** self.t
        for k, g in grads.items():
            g = g.astype(params[k].dtype, copy=False)
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * (g * g)
            mhat = self.m[k] / bc1
            vhat = self.v[k] / bc2
            params[k] -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def _canonical_batch(sources: list[np.ndarray], size: int) -> np.ndarray:
    out = np.empty((len(sources), size, size, 3), dtype=np.float32)
    for i, src in enumerate(sources):
        out[i] = _transform_patch(src, size)
    return out / 255.0


def train_autoencoder(
    candidates: list[Candidate],
    spec: AugmentationSpec,
    hyper: TrainingConfig = TrainingConfig(),
    seed: int = 0,
) -> EmbedderModel:
    """Train the augmented autoencoder on the candidates' patches.

    Deterministic for a given seed: parameter init, shuffling and
    augmentation draws all come from seed-derived streams, and training
    is single-threaded.
    """
    if len(candidates) < 32:
        raise TooFewCandidates(f"need >= 32 candidates, got {len(candidates)}")
    size = hyper.canonical_size
    sources = [_patch_float(c.patch) for c in candidates]
    sides = np.array([c.side for c in candidates], dtype=np.float64)
    targets = _canonical_batch(sources, size)

    params = _init_params(seed, size, EMBED_DIM, dtype=np.float32)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 2]))
    adam = _Adam(params, hyper.learning_rate)

    n = len(candidates)
    history = []
    batch_x = np.empty((hyper.batch_size, size, size, 3), dtype=np.float32)
    for _epoch in range(hyper.epochs):
        order = rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, hyper.batch_size):
            idx = order[start:start + hyper.batch_size]
            scale, shift, flip, crop_frac, offs = _draw_augment_params(
                rng, spec, sides[idx])
            x = batch_x[: len(idx)]
            for j, i in enumerate(idx):
                x[j] = _transform_patch(
                    sources[i], size,
                    scale=float(scale[j]), dx=float(shift[j, 0]),
                    dy=float(shift[j, 1]), flip=bool(flip[j]),
                    crop_frac=float(crop_frac[j]),
                    off_x=float(offs[j, 0]), off_y=float(offs[j, 1]),
                ) / 255.0
            loss, grads = loss_and_grads(params, x, targets[idx])
            if not np.isfinite(loss):
                raise DivergedTraining(f"loss became {loss}")
            adam.step(params, grads)
            epoch_loss += loss * len(idx)
        history.append(epoch_loss / n)

    return EmbedderModel(
        kind="autoencoder", canonical_size=size, embed_dim=EMBED_DIM,
        params=params, loss_history=tuple(history),
    )


def embed(model: EmbedderModel, patch: RasterImage) -> np.ndarray:
    """Map one patch to its embedding vector."""
    return embed_batch(model, [patch])[0]


def embed_batch(model: EmbedderModel, patches: list[RasterImage]) -> np.ndarray:
    """Map patches to an (n, embed_dim) float64 embedding matrix."""
    if model.kind == "descriptor":
        return np.stack([descriptor_embed(p) for p in patches])
    if model.params is None:
        raise UntrainedModel("autoencoder model has no parameters")
    out = np.empty((len(patches), model.embed_dim), dtype=np.float64)
    chunk = 512
    for start in range(0, len(patches), chunk):
        group = patches[start:start + chunk]
        x = _canonical_batch([_patch_float(p) for p in group],
                             model.canonical_size)
        out[start:start + len(group)] = _encode(model.params, x)
    return out


# --------------------------------------------------------------------------
# Descriptor baseline: 64 deterministic texture statistics
# --------------------------------------------------------------------------

def descriptor_embed(patch: RasterImage) -> np.ndarray:
    """Training-free 64-d descriptor.

    Blocks: 16-bin luminance histogram, 3 x 8-bin channel histograms,
    16 radially averaged magnitude-spectrum bins, 8 cyclic co-occurrence
    statistics. Histogram blocks are normalized to unit sum, the other
    blocks to unit norm. Every block is exactly invariant under cyclic
    translation of a periodic patch.
    """
    px = patch.pixels
    gray = to_grayscale(patch).values

    lum = np.histogram(gray, bins=16, range=(0.0, 1.0))[0].astype(np.float64)
    lum /= lum.sum()

    chans = []
    for c in range(3):
        h = np.histogram(px[:, :, c], bins=8, range=(0, 256))[0].astype(np.float64)
        chans.append(h / h.sum())

    spectrum = _radial_spectrum(gray)
    cooc = _cooccurrence_stats(gray)
    return np.concatenate([lum, *chans, spectrum, cooc])


def _radial_spectrum(gray: np.ndarray, bins: int = 16) -> np.ndarray:
    h, w = gray.shape
    centered = gray - gray.mean()
    mag = np.abs(np.fft.fft2(centered))
    fy = np.fft.fftfreq(h)[:, None]
    fx = np.fft.fftfreq(w)[None, :]
    radius = np.hypot(fy, fx)
    rmax = np.hypot(0.5, 0.5)
    keep = radius.ravel() > 0
    which = np.minimum((radius.ravel()[keep] / rmax * bins).astype(np.int64),
                       bins - 1)
    sums = np.bincount(which, weights=mag.ravel()[keep], minlength=bins)
    counts = np.bincount(which, minlength=bins)
    out = sums / np.maximum(counts, 1)
    norm = np.linalg.norm(out)
    return out / norm if norm > 0 else out


def _cooccurrence_stats(gray: np.ndarray, levels: int = 8) -> np.ndarray:
    q = np.minimum((gray * levels).astype(np.int64), levels - 1)
    i_idx, j_idx = np.meshgrid(np.arange(levels), np.arange(levels),
                               indexing="ij")
    stats = []
    for axis in (1, 0):
        neighbor = np.roll(q, -1, axis=axis)
        table = np.bincount(
            (q * levels + neighbor).ravel(), minlength=levels * levels
        ).astype(np.float64).reshape(levels, levels)
        table /= table.sum()
        contrast = float((table * (i_idx - j_idx) ** 2).sum())
        energy = float((table * table).sum())
        homogeneity = float((table / (1.0 + np.abs(i_idx - j_idx))).sum())
        nz = table[table > 0]
        entropy = float(-(nz * np.log(nz)).sum())
        stats.extend([contrast, energy, homogeneity, entropy])
    out = np.array(stats)
    norm = np.linalg.norm(out)
    return out / norm if norm > 0 else out


# --------------------------------------------------------------------------
# Model serialization: small header + little-endian float32 parameters
# --------------------------------------------------------------------------

def save_model(model: EmbedderModel, path: str | Path) -> None:
    parts = [
        _MODEL_MAGIC,
        struct.pack("<IBII", _MODEL_VERSION, _KIND_CODES[model.kind],
                    model.canonical_size, model.embed_dim),
    ]
    tensors = [] if model.params is None else \
        [np.asarray(model.params[n], dtype="<f4") for n in _PARAM_ORDER]
    parts.append(struct.pack("<I", len(tensors)))
    for t in tensors:
        parts.append(struct.pack("<I", t.ndim))
        parts.append(struct.pack(f"<{t.ndim}I", *t.shape))
    for t in tensors:
        parts.append(np.ascontiguousarray(t).tobytes())
    Path(path).write_bytes(b"".join(parts))


def load_model(path: str | Path) -> EmbedderModel:
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise UnreadableFile(f"cannot read {path}: {exc}") from exc
    if blob[:4] != _MODEL_MAGIC:
        raise UnsupportedFormat(f"{path} is not an embedder model file")
    version, kind_code, size, dim = struct.unpack("<IBII", blob[4:17])
    if version != _MODEL_VERSION:
        raise UnsupportedFormat(f"unsupported model version {version}")
    kinds = {v: k for k, v in _KIND_CODES.items()}
    (n_tensors,) = struct.unpack("<I", blob[17:21])
    offset = 21
    shapes = []
    for _ in range(n_tensors):
        (ndim,) = struct.unpack("<I", blob[offset:offset + 4])
        offset += 4
        shape = struct.unpack(f"<{ndim}I", blob[offset:offset + 4 * ndim])
        offset += 4 * ndim
        shapes.append(shape)
    params = None
    if n_tensors:
        params = {}
        for name, shape in zip(_PARAM_ORDER, shapes):
            count = int(np.prod(shape))
            arr = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
            params[name] = arr.reshape(shape).astype(np.float32)
            offset += 4 * count
    return EmbedderModel(kind=kinds[kind_code], canonical_size=size,
                         embed_dim=dim, params=params)
