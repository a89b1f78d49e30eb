"""Image quality metrics: L1, RMSE, PSNR, and SSIM.

Inputs use the ink-signed [-1, 1] convention and are linearly remapped to
[0, 1] (no clamping) before any statistic, so the PSNR peak and the SSIM
dynamic range are both 1.  PSNR of identical images is reported as +inf
("inf" in JSON) rather than an error, since comparison tables need
identical-image rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import correlate2d

from .image_core import as_image, check_same_shape

__all__ = ["MetricReport", "evaluate"]


@dataclass(frozen=True)
class MetricReport:
    l1: float
    rmse: float
    psnr: float
    ssim: float

    def to_json_dict(self) -> dict:
        return {
            "l1": self.l1,
            "rmse": self.rmse,
            "psnr": "inf" if math.isinf(self.psnr) else self.psnr,
            "ssim": self.ssim,
        }


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    coords = np.arange(size) - (size - 1) / 2.0
    g = np.exp(-(coords**2) / (2.0 * sigma * sigma))
    window = np.outer(g, g)
    return window / window.sum()


def _ssim(a: np.ndarray, b: np.ndarray, window: int, sigma: float, k1: float, k2: float) -> float:
    if min(a.shape) < window:
        raise ValueError(f"image {a.shape} smaller than the {window}x{window} SSIM window")
    w = _gaussian_window(window, sigma)
    mu_a = correlate2d(a, w, mode="valid")
    mu_b = correlate2d(b, w, mode="valid")
    e_aa = correlate2d(a * a, w, mode="valid")
    e_bb = correlate2d(b * b, w, mode="valid")
    e_ab = correlate2d(a * b, w, mode="valid")
    var_a = e_aa - mu_a * mu_a
    var_b = e_bb - mu_b * mu_b
    cov = e_ab - mu_a * mu_b

    c1 = k1 * k1  # (k1 * L)^2 with dynamic range L = 1
    c2 = k2 * k2
    num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)
    den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


def evaluate(
    a,
    b,
    *,
    ssim_window: int = 11,
    ssim_sigma: float = 1.5,
    ssim_k1: float = 0.01,
    ssim_k2: float = 0.03,
) -> MetricReport:
    """Compare two ink-signed images; SSIM averages over valid window positions."""
    a = as_image(a, "a")
    b = as_image(b, "b")
    check_same_shape(a, b)
    ya = (a + 1.0) / 2.0
    yb = (b + 1.0) / 2.0

    diff = ya - yb
    l1 = float(np.mean(np.abs(diff)))
    mse = float(np.mean(diff * diff))
    rmse = math.sqrt(mse)
    psnr = math.inf if mse == 0.0 else 10.0 * math.log10(1.0 / mse)
    ssim = _ssim(ya, yb, ssim_window, ssim_sigma, ssim_k1, ssim_k2)
    return MetricReport(l1=l1, rmse=rmse, psnr=psnr, ssim=ssim)
