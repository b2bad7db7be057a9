"""Image augmentation for rank-4 batches [B x C x H x W].

Train mode: random-resized crop (area fraction and aspect ratio sampled,
crop resized to ``crop_size``), then a horizontal flip with probability
``flip_prob``. Eval mode: resize the short side to ``resize_short`` and take
the center crop. Both modes finish with per-channel normalization.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from gtn.errors import AugmentationError
from gtn.layers.base import Mode
from gtn.tensor import Rng, Tensor


@dataclass(frozen=True)
class AugmentationPolicy:
    resize_short: int = 36
    crop_size: int = 32
    flip_prob: float = 0.5
    scale: tuple[float, float] = (0.08, 1.0)
    ratio: tuple[float, float] = (3 / 4, 4 / 3)
    mean: tuple[float, ...] = (0.0,)
    std: tuple[float, ...] = (1.0,)

    def __post_init__(self) -> None:
        if self.crop_size > self.resize_short:
            raise AugmentationError(
                f"crop_size {self.crop_size} is larger than resize_short {self.resize_short}"
            )
        if not 0.0 <= self.flip_prob <= 1.0:
            raise AugmentationError(f"flip_prob must be in [0, 1], got {self.flip_prob}")
        if not 0.0 < self.scale[0] <= self.scale[1] <= 1.0:
            raise AugmentationError(f"invalid crop area range {self.scale}")
        if not 0.0 < self.ratio[0] <= self.ratio[1]:
            raise AugmentationError(f"invalid aspect ratio range {self.ratio}")
        if len(self.mean) != len(self.std) or any(s <= 0 for s in self.std):
            raise AugmentationError("mean and std need one entry per channel and std > 0")


def resize_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Bilinear resize of a [C x h x w] array with half-pixel centers."""
    _, h, w = image.shape
    ys = np.clip((np.arange(out_h) + 0.5) * h / out_h - 0.5, 0.0, h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * w / out_w - 0.5, 0.0, w - 1)
    y0 = np.floor(ys).astype(np.int64)
    x0 = np.floor(xs).astype(np.int64)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    wy = (ys - y0)[None, :, None]
    wx = (xs - x0)[None, None, :]
    top = image[:, y0][:, :, x0] * (1 - wx) + image[:, y0][:, :, x1] * wx
    bottom = image[:, y1][:, :, x0] * (1 - wx) + image[:, y1][:, :, x1] * wx
    return top * (1 - wy) + bottom * wy


def crop_offsets(
    rng: Rng, n: int, height: int, width: int, crop_h: np.ndarray | int, crop_w: np.ndarray | int
) -> tuple[np.ndarray, np.ndarray]:
    """Uniform top/left offsets so each crop lies inside the image."""
    if np.any(crop_h > height) or np.any(crop_w > width):
        raise AugmentationError(f"crop larger than the {height}x{width} image")
    u = rng.uniform((2, n))
    top = np.floor(u[0] * (height - crop_h + 1)).astype(np.int64)
    left = np.floor(u[1] * (width - crop_w + 1)).astype(np.int64)
    return top, left


def sample_crop_boxes(
    rng: Rng,
    n: int,
    height: int,
    width: int,
    scale: tuple[float, float] = (0.08, 1.0),
    ratio: tuple[float, float] = (3 / 4, 4 / 3),
) -> np.ndarray:
    """Random-resized-crop boxes as an [n x 4] int array of (top, left, h, w).

    The aspect ratio is log-uniform in ``ratio``; boxes that would not fit are
    clamped to the image.
    """
    u = rng.uniform((2, n))
    area = height * width * (scale[0] + (scale[1] - scale[0]) * u[0])
    log_lo, log_hi = math.log(ratio[0]), math.log(ratio[1])
    aspect = np.exp(log_lo + (log_hi - log_lo) * u[1])
    crop_w = np.clip(np.round(np.sqrt(area * aspect)), 1, width).astype(np.int64)
    crop_h = np.clip(np.round(np.sqrt(area / aspect)), 1, height).astype(np.int64)
    top, left = crop_offsets(rng, n, height, width, crop_h, crop_w)
    return np.stack([top, left, crop_h, crop_w], axis=1)


def flip_horizontal(batch: np.ndarray, mask: np.ndarray) -> np.ndarray:
    out = batch.copy()
    chosen = np.asarray(mask, dtype=bool)
    out[chosen] = batch[chosen][..., ::-1]
    return out


def center_crop(batch: np.ndarray, size: int) -> np.ndarray:
    _, _, h, w = batch.shape
    if size > h or size > w:
        raise AugmentationError(f"crop {size} larger than the {h}x{w} image")
    top, left = (h - size) // 2, (w - size) // 2
    return batch[:, :, top : top + size, left : left + size]


def resize_short_side(batch: np.ndarray, short: int) -> np.ndarray:
    _, _, h, w = batch.shape
    if h <= w:
        out_h, out_w = short, max(short, int(round(w * short / h)))
    else:
        out_h, out_w = max(short, int(round(h * short / w))), short
    return np.stack([resize_bilinear(img, out_h, out_w) for img in batch])


def normalize(batch: np.ndarray, policy: AugmentationPolicy) -> np.ndarray:
    channels = batch.shape[1]
    mean = np.resize(np.asarray(policy.mean, dtype=np.float64), channels)
    std = np.resize(np.asarray(policy.std, dtype=np.float64), channels)
    return (batch - mean[None, :, None, None]) / std[None, :, None, None]


def augment(batch: Tensor, policy: AugmentationPolicy, rng: Rng | None, mode: Mode) -> Tensor:
    if batch.ndim != 4:
        raise AugmentationError(
            f"augment needs image batches [B, C, H, W], got shape {batch.shape}"
        )
    x = batch.array
    b, _, h, w = x.shape
    if mode is Mode.TRAIN:
        if rng is None:
            raise AugmentationError("train-mode augmentation needs a random stream")
        boxes = sample_crop_boxes(rng, b, h, w, policy.scale, policy.ratio)
        size = policy.crop_size
        crops = np.stack(
            [
                resize_bilinear(img[:, top : top + ch, left : left + cw], size, size)
                for img, (top, left, ch, cw) in zip(x, boxes, strict=True)
            ]
        )
        crops = flip_horizontal(crops, rng.bernoulli(b, policy.flip_prob))
    else:
        crops = center_crop(resize_short_side(x, policy.resize_short), policy.crop_size)
    return Tensor.wrap(normalize(crops, policy), "augment")
