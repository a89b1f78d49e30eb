"""Image and kernel primitives: the 2-D substrate everything else computes on.

Images are plain 2-D float64 arrays in (height, width) row-major layout with
the ink-signed value convention: ink = +1, paper = -1.  Values loaded from
files lie in [-1, +1]; intermediate results may leave that range and are
never clamped here.  Kernels are odd-sized 2-D float64 arrays anchored at
their center, applied in the correlation convention (no kernel flip) with
edge-replicate padding.  The flip-free convention only matters for the Sobel
pair; disk and Laplacian kernels are symmetric.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import ndimage

__all__ = [
    "LAPLACIAN_KERNEL",
    "SOBEL_X",
    "SOBEL_Y",
    "SOBEL_SCALE",
    "as_image",
    "as_kernel",
    "check_same_shape",
    "convolve",
    "convolve_adjoint",
    "disk_kernel",
    "disk_footprint",
    "laplacian",
    "resize_bilinear",
    "sobel_magnitude",
]

# Responds positively to a left-to-right increase (column index growing).
SOBEL_X = np.array([[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]])
# Responds positively to a top-to-bottom increase (row index growing).
SOBEL_Y = np.array([[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]])
LAPLACIAN_KERNEL = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])

# A height-1 step yields |G| = 4 and the worst diagonal case 4*sqrt(2), so this
# bounds the magnitude of unit steps by 1.
SOBEL_SCALE = 1.0 / (4.0 * math.sqrt(2.0))


def as_image(x, name: str = "image") -> np.ndarray:
    """Validate and return ``x`` as a 2-D float64 image array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def as_kernel(k, name: str = "kernel") -> np.ndarray:
    """Validate and return ``k`` as an odd-sized square float64 kernel."""
    arr = np.asarray(k, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
        raise ValueError(f"{name} must be a square 2-D array, got shape {arr.shape}")
    if arr.shape[0] % 2 == 0:
        raise ValueError(f"{name} size must be odd, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    return arr


def check_same_shape(a: np.ndarray, b: np.ndarray, what: str = "images") -> None:
    if a.shape != b.shape:
        raise ValueError(f"{what} must have identical dimensions, got {a.shape} vs {b.shape}")


def disk_kernel(radius: int) -> np.ndarray:
    """Normalized circular structuring element of the given pixel radius.

    Taps are 1 on the lattice points with dx^2 + dy^2 <= radius^2 and 0
    elsewhere, then divided by their count so the kernel sums to 1.  The
    normalization keeps convolution outputs on the scale of the input, so a
    single sigmoid temperature behaves uniformly across radii.
    """
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")
    coords = np.arange(-radius, radius + 1)
    dy, dx = np.meshgrid(coords, coords, indexing="ij")
    taps = (dx * dx + dy * dy <= radius * radius).astype(np.float64)
    return taps / taps.sum()


def disk_footprint(radius: int) -> np.ndarray:
    """Boolean disk support (unnormalized), for hard min/max neighborhoods."""
    return disk_kernel(radius) > 0.0


def _check_kernel_fits(image: np.ndarray, kernel: np.ndarray) -> None:
    limit = 2 * min(image.shape)
    if kernel.shape[0] >= limit:
        raise ValueError(
            f"kernel of size {kernel.shape[0]} too large for {image.shape} image"
        )


def convolve(image, kernel) -> np.ndarray:
    """Correlate ``image`` with ``kernel`` under edge-replicate padding.

    Output dimensions equal the input's.  No kernel flip is applied; for the
    symmetric disk and Laplacian kernels the distinction is moot, and the
    Sobel orientation convention is documented on ``SOBEL_X``/``SOBEL_Y``.
    """
    img = as_image(image)
    ker = as_kernel(kernel)
    _check_kernel_fits(img, ker)
    return ndimage.correlate(img, ker, mode="nearest")


def _fold_replicate(padded: np.ndarray, pad: int) -> np.ndarray:
    """Adjoint of edge-replicate padding: collapse border slabs onto edges.

    Replicate padding clips each axis independently, so folding rows then
    columns reproduces the exact transpose.
    """
    if pad == 0:
        return padded
    rows = padded[pad:-pad, :].copy()
    rows[0, :] += padded[:pad, :].sum(axis=0)
    rows[-1, :] += padded[-pad:, :].sum(axis=0)
    out = rows[:, pad:-pad].copy()
    out[:, 0] += rows[:, :pad].sum(axis=1)
    out[:, -1] += rows[:, -pad:].sum(axis=1)
    return out


def convolve_adjoint(upstream, kernel) -> np.ndarray:
    """Transpose of :func:`convolve` applied to an upstream sensitivity.

    Satisfies <convolve(x, k), u> == <x, convolve_adjoint(u, k)> for all x, u:
    the upstream field is spread by the 180-degree-rotated kernel under zero
    padding, then the replicate-padding contributions are folded back onto
    the edge pixels they were cloned from.
    """
    up = as_image(upstream, "upstream")
    ker = as_kernel(kernel)
    _check_kernel_fits(up, ker)
    pad = ker.shape[0] // 2
    if pad == 0:
        return up * ker[0, 0]
    spread = ndimage.correlate(
        np.pad(up, pad, mode="constant"), ker[::-1, ::-1], mode="constant", cval=0.0
    )
    return _fold_replicate(spread, pad)


def sobel_magnitude(image) -> np.ndarray:
    """Sobel gradient magnitude, rescaled so unit steps stay within [0, 1]."""
    img = as_image(image)
    gx = convolve(img, SOBEL_X)
    gy = convolve(img, SOBEL_Y)
    return np.hypot(gx, gy) * SOBEL_SCALE


def laplacian(image) -> np.ndarray:
    """Discrete 5-point Laplacian under edge-replicate padding."""
    return convolve(image, LAPLACIAN_KERNEL)


def _axis_coords(n_in: int, n_out: int) -> np.ndarray:
    # Corner-aligned sampling; a single output sample reads coordinate 0.
    if n_out == 1:
        return np.zeros(1)
    return np.arange(n_out) * ((n_in - 1) / (n_out - 1))


def resize_bilinear(image, new_height: int, new_width: int) -> np.ndarray:
    """Corner-aligned bilinear resampling.

    Interpolation uses the lerp form v0 + f*(v1 - v0), which reproduces
    constant images exactly for any target size.  Resizing to the source
    dimensions returns a bit-identical copy.
    """
    img = as_image(image)
    if new_height < 1 or new_width < 1:
        raise ValueError(f"target dimensions must be >= 1, got {new_height}x{new_width}")
    h, w = img.shape
    if (new_height, new_width) == (h, w):
        return img.copy()

    ys = _axis_coords(h, new_height)
    xs = _axis_coords(w, new_width)
    y0 = np.minimum(ys.astype(np.int64), h - 1)
    x0 = np.minimum(xs.astype(np.int64), w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (ys - y0)[:, None]
    fx = (xs - x0)[None, :]

    v00 = img[np.ix_(y0, x0)]
    v01 = img[np.ix_(y0, x1)]
    v10 = img[np.ix_(y1, x0)]
    v11 = img[np.ix_(y1, x1)]
    left = v00 + fy * (v10 - v00)
    right = v01 + fy * (v11 - v01)
    return left + fx * (right - left)
