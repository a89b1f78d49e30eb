"""Spatio-temporal adaptive fusion of high-frequency detail into content features.

The fusion is purely residual: the output is the content feature map plus a
globally gated detail increment, so the content path is untouched whenever
either gate is zero.  The increment is the aligned high-frequency map, masked
by a sigmoid spatial-attention map and scaled by a composite weight that
decays with layer depth and grows with the diffusion timestep:

    fused  = f_c + alpha_global * detail
    detail = composite_weight(l, t) * (aligned_hf * attention)

Feature maps are (channels, height, width) float64 arrays.  Alignment
bilinearly resizes each high-frequency channel to the content's spatial size
and averages across channels, which needs no learned parameters; the
attention map is a 3x3 convolution of that aligned map plus a bias, squashed
by a sigmoid.  Fusion here is forward-only, the gates are not trained.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .image_core import convolve, resize_bilinear
from .soft_morph import sigmoid

__all__ = [
    "StafParams",
    "as_feature_map",
    "layer_factor",
    "time_factor",
    "composite_weight",
    "spatial_attention",
    "fuse",
]

_IDENTITY_TAPS = ((0.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 0.0))


@dataclass(frozen=True)
class StafParams:
    """Gates, modulation factors, and attention parameters for fusion."""

    alpha_global: float = 1.0
    alpha_base: float = 1.0
    gamma_layer: float = 0.15
    gamma_time: float = 0.2
    attention_taps: tuple = _IDENTITY_TAPS
    attention_bias: float = 0.0
    total_timesteps: int = 1000

    def __post_init__(self):
        if self.gamma_layer < 0 or self.gamma_time < 0:
            raise ValueError("gamma_layer and gamma_time must be >= 0")
        if self.total_timesteps < 1:
            raise ValueError("total_timesteps must be >= 1")
        taps = np.asarray(self.attention_taps, dtype=np.float64)
        if taps.shape != (3, 3):
            raise ValueError(f"attention_taps must be 3x3, got shape {taps.shape}")
        object.__setattr__(self, "attention_taps", tuple(map(tuple, taps.tolist())))

    @property
    def attention_kernel(self) -> np.ndarray:
        return np.asarray(self.attention_taps, dtype=np.float64)

    def to_json(self) -> str:
        doc = {
            "alpha_global": self.alpha_global,
            "alpha_base": self.alpha_base,
            "gamma_layer": self.gamma_layer,
            "gamma_time": self.gamma_time,
            "attention_taps": [t for row in self.attention_taps for t in row],
            "attention_bias": self.attention_bias,
            "total_timesteps": self.total_timesteps,
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "StafParams":
        doc = json.loads(text)
        taps = doc.get("attention_taps", [t for row in _IDENTITY_TAPS for t in row])
        if len(taps) != 9:
            raise ValueError(f"attention_taps must hold 9 values, got {len(taps)}")
        return cls(
            alpha_global=float(doc.get("alpha_global", 1.0)),
            alpha_base=float(doc.get("alpha_base", 1.0)),
            gamma_layer=float(doc.get("gamma_layer", 0.15)),
            gamma_time=float(doc.get("gamma_time", 0.2)),
            attention_taps=tuple(tuple(taps[r * 3 + c] for c in range(3)) for r in range(3)),
            attention_bias=float(doc.get("attention_bias", 0.0)),
            total_timesteps=int(doc.get("total_timesteps", 1000)),
        )


def as_feature_map(f, name: str = "feature map") -> np.ndarray:
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim != 3 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty (C, H, W) array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def layer_factor(l: int, gamma_layer: float) -> float:
    """Depth attenuation max(0.1, 1 - l*gamma_layer); shallow layers get more detail."""
    if l < 0:
        raise ValueError("layer index must be >= 0")
    return max(0.1, 1.0 - l * gamma_layer)


def time_factor(t: int, total_timesteps: int, gamma_time: float) -> float:
    """Timestep boost 1 + (t/T)*gamma_time; high-noise steps get more guidance."""
    if t < 0 or t > total_timesteps:
        raise ValueError(f"timestep {t} outside [0, {total_timesteps}]")
    return 1.0 + (t / total_timesteps) * gamma_time


def composite_weight(p: StafParams, l: int, t: int) -> float:
    """Base gate times layer and time factors, clamped to [0, 1]."""
    w = p.alpha_base * layer_factor(l, p.gamma_layer) * time_factor(t, p.total_timesteps, p.gamma_time)
    return min(1.0, max(0.0, w))


def _align(f_hf: np.ndarray, target_h: int, target_w: int) -> np.ndarray:
    """Bilinear-resize every channel to the target size and average to one channel."""
    resized = [resize_bilinear(channel, target_h, target_w) for channel in f_hf]
    return np.mean(resized, axis=0)


def spatial_attention(f_hf, p: StafParams, target_h: int, target_w: int) -> np.ndarray:
    """Pixel-wise attention in (0, 1): sigmoid of a 3x3 conv of the aligned map."""
    hf = as_feature_map(f_hf, "f_hf")
    aligned = _align(hf, target_h, target_w)
    response = convolve(aligned, p.attention_kernel) + p.attention_bias
    return sigmoid(response)[None, :, :]


def fuse(f_c, f_hf, p: StafParams, l: int, t: int) -> np.ndarray:
    """Residual fusion of attended high-frequency detail into the content map.

    Returns ``f_c`` bit-exactly when the global gate or the composite weight
    is zero.  The increment never depends on ``f_c`` itself, so adding g to
    the content adds exactly g to the output.
    """
    content = as_feature_map(f_c, "f_c")
    hf = as_feature_map(f_hf, "f_hf")
    weight = composite_weight(p, l, t)
    if p.alpha_global == 0.0 or weight == 0.0:
        return content.copy()

    _, h, w = content.shape
    attention = spatial_attention(hf, p, h, w)[0]
    aligned = _align(hf, h, w)
    detail = weight * (aligned * attention)
    return content + p.alpha_global * detail[None, :, :]
