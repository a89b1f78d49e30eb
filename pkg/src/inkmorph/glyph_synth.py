"""Deterministic synthetic glyph fixtures: stroke cores with diffusion halos.

Each glyph is a handful of seeded random polylines rasterized at full ink
intensity, surrounded by rings of geometrically decaying intensity produced
by successive hard dilations.  That gives fixtures a known core/boundary
decomposition without any font data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image_core import disk_footprint
from .rng import RandomStream

__all__ = ["GlyphSpec", "glyph_strokes", "synth_glyph"]


@dataclass(frozen=True)
class GlyphSpec:
    size: int = 96
    stroke_count: int = 3
    stroke_width: float = 3.0
    halo_radius: int = 2
    halo_decay: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.size < 8:
            raise ValueError("size must be >= 8")
        if self.stroke_count < 1:
            raise ValueError("stroke_count must be >= 1")
        if self.stroke_width < 1.0:
            raise ValueError("stroke_width must be >= 1")
        if not 0 <= self.halo_radius <= self.size / 4:
            raise ValueError("halo_radius must lie in [0, size/4]")
        if not 0.0 < self.halo_decay <= 1.0:
            raise ValueError("halo_decay must lie in (0, 1]")

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "stroke_count": self.stroke_count,
            "stroke_width": self.stroke_width,
            "halo_radius": self.halo_radius,
            "halo_decay": self.halo_decay,
            "seed": self.seed,
        }


def glyph_strokes(spec: GlyphSpec) -> list[np.ndarray]:
    """The seeded polylines (one (V, 2) array of x,y vertices per stroke).

    Exposed so tests can reason about stroke length and vertex placement
    independently of rasterization.
    """
    stream = RandomStream(spec.seed)
    margin = 2.0 + spec.stroke_width / 2.0 + spec.halo_radius
    span = spec.size - 1 - 2.0 * margin
    strokes = []
    for _ in range(spec.stroke_count):
        vertex_count = 3 + int(stream.uniform(1)[0] * 3.0)  # 3, 4, or 5
        coords = stream.uniform(2 * vertex_count).reshape(vertex_count, 2)
        strokes.append(margin + coords * span)
    return strokes


def _paint_polyline(mask: np.ndarray, xx: np.ndarray, yy: np.ndarray, pts: np.ndarray, half_width: float) -> None:
    for (x0, y0), (x1, y1) in zip(pts[:-1], pts[1:]):
        dx, dy = x1 - x0, y1 - y0
        seg_len2 = dx * dx + dy * dy
        if seg_len2 == 0.0:
            d2 = (xx - x0) ** 2 + (yy - y0) ** 2
        else:
            tt = np.clip(((xx - x0) * dx + (yy - y0) * dy) / seg_len2, 0.0, 1.0)
            d2 = (xx - (x0 + tt * dx)) ** 2 + (yy - (y0 + tt * dy)) ** 2
        mask |= d2 <= half_width * half_width


def synth_glyph(spec: GlyphSpec) -> np.ndarray:
    """Render the glyph: +1 stroke core, decaying halo rings, -1 background.

    Ring i (i = 1..halo_radius) is the set of pixels newly reached by the
    i-th hard dilation of the core and carries intensity 2*decay^i - 1, the
    [-1, 1] image of a geometrically fading ink amount.
    """
    cols = np.arange(spec.size, dtype=np.float64)
    xx, yy = np.meshgrid(cols, cols.copy())
    core = np.zeros((spec.size, spec.size), dtype=bool)
    for pts in glyph_strokes(spec):
        _paint_polyline(core, xx, yy, pts, spec.stroke_width / 2.0)

    img = np.where(core, 1.0, -1.0)
    reached = core
    footprint = disk_footprint(1)
    for i in range(1, spec.halo_radius + 1):
        grown = ndimage.binary_dilation(reached, structure=footprint)
        ring = grown & ~reached
        img[ring] = 2.0 * spec.halo_decay**i - 1.0
        reached = grown
    return img
