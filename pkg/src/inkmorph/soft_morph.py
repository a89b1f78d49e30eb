"""Differentiable soft morphology and its hard-thresholded counterpart.

Soft erosion and dilation replace the neighborhood min/max of classical
morphology with a temperature-scaled logistic sigmoid of a normalized disk
convolution:

    soft_erosion(x)  = -sigmoid(-conv(x, disk) / tau) * tau
    soft_dilation(x) =  sigmoid( conv(x, disk) / tau) * tau

Both are smooth everywhere, so exact reverse-mode gradients exist; the VJP
functions here take the upstream sensitivity explicitly instead of keeping a
tape.  As tau shrinks the sigmoid sharpens toward a step, and the outputs
(which carry a factor of tau) vanish; ``dilation_response`` exposes the
tau-normalized sigmoid for studying that limit.  Note the two operators obey
dilation - erosion == tau identically, so a boundary band cannot be built
from their difference; use :func:`hard_morph` for masks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image_core import as_image, check_same_shape, convolve, convolve_adjoint, disk_footprint, disk_kernel

__all__ = [
    "MorphConfig",
    "sigmoid",
    "sigmoid_deriv",
    "soft_erosion",
    "soft_dilation",
    "dilation_response",
    "soft_erosion_vjp",
    "soft_dilation_vjp",
    "hard_morph",
]


@dataclass(frozen=True)
class MorphConfig:
    """Temperature and structuring-element radius for the soft operators."""

    tau: float = 0.5
    radius: int = 2

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be > 0")
        if self.radius < 1:
            raise ValueError("radius must be >= 1")


def sigmoid(z) -> np.ndarray:
    """Numerically stable logistic sigmoid (no overflow for |z| up to 1e6)."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def sigmoid_deriv(z) -> np.ndarray:
    """sigmoid'(z) = s(z)(1 - s(z)), evaluated on the underflow-safe side."""
    s = sigmoid(-np.abs(np.asarray(z, dtype=np.float64)))
    return s * (1.0 - s)


def _neighborhood(x: np.ndarray, cfg: MorphConfig) -> np.ndarray:
    return convolve(x, disk_kernel(cfg.radius))


def soft_erosion(x, cfg: MorphConfig) -> np.ndarray:
    """Smooth neighborhood-min relaxation; output lies in (-tau, 0)."""
    c = _neighborhood(as_image(x), cfg)
    return -sigmoid(-c / cfg.tau) * cfg.tau


def soft_dilation(x, cfg: MorphConfig) -> np.ndarray:
    """Smooth neighborhood-max relaxation; output lies in (0, tau)."""
    c = _neighborhood(as_image(x), cfg)
    return sigmoid(c / cfg.tau) * cfg.tau


def dilation_response(x, cfg: MorphConfig) -> np.ndarray:
    """The tau-normalized dilation sigmoid(conv/tau), in (0, 1).

    Helper for examining the small-tau limit, where the response converges to
    the indicator of a positive neighborhood mean.  Not a loss ingredient.
    """
    c = _neighborhood(as_image(x), cfg)
    return sigmoid(c / cfg.tau)


def _soft_vjp(x, cfg: MorphConfig, upstream, sign: float) -> np.ndarray:
    img = as_image(x)
    up = as_image(upstream, "upstream")
    check_same_shape(img, up)
    kernel = disk_kernel(cfg.radius)
    c = convolve(img, kernel)
    local = sigmoid_deriv(sign * c / cfg.tau)
    return convolve_adjoint(up * local, kernel)


def soft_erosion_vjp(x, cfg: MorphConfig, upstream) -> np.ndarray:
    """Gradient of <upstream, soft_erosion(x)> with respect to x.

    The local derivative sigmoid'(-c/tau) scales the upstream field, which is
    then pushed back through the disk convolution's exact transpose
    (including the replicate-padding fold).
    """
    return _soft_vjp(x, cfg, upstream, -1.0)


def soft_dilation_vjp(x, cfg: MorphConfig, upstream) -> np.ndarray:
    """Gradient of <upstream, soft_dilation(x)> with respect to x.

    Equal to :func:`soft_erosion_vjp` pointwise, since sigmoid' is even.
    """
    return _soft_vjp(x, cfg, upstream, 1.0)


def hard_morph(x, radius: int, mode: str) -> np.ndarray:
    """Classical min/max morphology on the image binarized at 0.

    Pixels with x > 0 count as ink (+1), the rest as paper (-1); the min or
    max is then taken over the unnormalized disk support with replicated
    edges, so the result stays in {-1, +1}.
    """
    if mode not in ("erode", "dilate"):
        raise ValueError(f"mode must be 'erode' or 'dilate', got {mode!r}")
    img = as_image(x)
    binary = np.where(img > 0.0, 1.0, -1.0)
    footprint = disk_footprint(radius)
    op = ndimage.grey_erosion if mode == "erode" else ndimage.grey_dilation
    return op(binary, footprint=footprint, mode="nearest")
