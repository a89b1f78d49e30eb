"""DDPM machinery: variance schedule, closed-form noising, ancestral sampling.

The denoiser is a pluggable callable ``(x_t, t, condition) -> predicted
noise`` so exact test oracles (zero, stored-noise, offset) stand in for a
trained network; the condition payload is opaque and passed through
untouched.  Timesteps are 1-based: schedule arrays are indexed ``t - 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .image_core import as_image, check_same_shape
from .rng import RandomStream

__all__ = [
    "DiffusionSchedule",
    "Denoiser",
    "linear_schedule",
    "schedule_from_betas",
    "forward_sample",
    "training_loss",
    "reverse_step",
    "sample",
    "zero_denoiser",
    "make_exact_denoiser",
    "make_offset_denoiser",
]

Denoiser = Callable[[np.ndarray, int, object], np.ndarray]


@dataclass(frozen=True, eq=False)
class DiffusionSchedule:
    """Per-timestep noise levels and their precomputed cumulative products.

    ``beta[i]`` is the variance added at timestep i+1; ``alpha = 1 - beta``
    and ``alpha_bar`` is the running product of alpha, the fraction of signal
    variance surviving up to each step.
    """

    beta: np.ndarray
    alpha: np.ndarray
    alpha_bar: np.ndarray

    def __post_init__(self):
        for name in ("beta", "alpha", "alpha_bar"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.float64))
        if self.beta.ndim != 1 or self.beta.size < 1:
            raise ValueError("beta must be a non-empty 1-D array")
        if self.alpha.shape != self.beta.shape or self.alpha_bar.shape != self.beta.shape:
            raise ValueError("beta, alpha, alpha_bar must have matching lengths")
        if np.any(self.beta <= 0.0) or np.any(self.beta >= 1.0):
            raise ValueError("all beta values must lie strictly in (0, 1)")
        if np.any(np.diff(self.alpha_bar) >= 0.0):
            raise ValueError("alpha_bar must be strictly decreasing")

    @property
    def total_timesteps(self) -> int:
        return int(self.beta.size)

    def check_timestep(self, t: int) -> int:
        if not 1 <= t <= self.total_timesteps:
            raise ValueError(f"timestep {t} outside [1, {self.total_timesteps}]")
        return t


def schedule_from_betas(betas) -> DiffusionSchedule:
    beta = np.asarray(betas, dtype=np.float64)
    alpha = 1.0 - beta
    return DiffusionSchedule(beta=beta, alpha=alpha, alpha_bar=np.cumprod(alpha))


def linear_schedule(total_timesteps: int, beta_start: float = 1e-4, beta_end: float = 0.02) -> DiffusionSchedule:
    """Linearly spaced beta from ``beta_start`` (t=1) to ``beta_end`` (t=T)."""
    if total_timesteps < 1:
        raise ValueError("total_timesteps must be >= 1")
    if not 0.0 < beta_start <= beta_end < 1.0:
        raise ValueError("need 0 < beta_start <= beta_end < 1")
    return schedule_from_betas(np.linspace(beta_start, beta_end, total_timesteps))


def forward_sample(x0, t: int, eps, s: DiffusionSchedule) -> np.ndarray:
    """Jump straight to x_t: sqrt(abar_t)*x0 + sqrt(1 - abar_t)*eps."""
    x0 = as_image(x0, "x0")
    eps = as_image(eps, "eps")
    check_same_shape(x0, eps)
    s.check_timestep(t)
    abar = s.alpha_bar[t - 1]
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps


def _call_denoiser(denoiser: Denoiser, x_t: np.ndarray, t: int, condition) -> np.ndarray:
    eps_hat = np.asarray(denoiser(x_t, t, condition), dtype=np.float64)
    if eps_hat.shape != x_t.shape:
        raise ValueError(
            f"denoiser contract violation: returned shape {eps_hat.shape} for input {x_t.shape}"
        )
    return eps_hat


def training_loss(x0, t: int, eps, denoiser: Denoiser, condition, s: DiffusionSchedule) -> float:
    """Mean squared error between the true noise and the denoiser's prediction."""
    x_t = forward_sample(x0, t, eps, s)
    eps_hat = _call_denoiser(denoiser, x_t, t, condition)
    return float(np.mean((np.asarray(eps, dtype=np.float64) - eps_hat) ** 2))


def reverse_step(x_t, t: int, eps_hat, z, s: DiffusionSchedule, sigma_mode: str = "beta") -> np.ndarray:
    """One ancestral denoising step from x_t to x_{t-1}.

    Computes (x_t - (1-alpha_t)/sqrt(1-abar_t) * eps_hat) / sqrt(alpha_t),
    plus sigma_t * z where sigma_t^2 = beta_t in "beta" mode and 0 in "zero"
    mode.  No noise is ever injected at t = 1 so the final step returns the
    clean estimate.
    """
    if sigma_mode not in ("beta", "zero"):
        raise ValueError(f"sigma_mode must be 'beta' or 'zero', got {sigma_mode!r}")
    x_t = as_image(x_t, "x_t")
    eps_hat = as_image(eps_hat, "eps_hat")
    check_same_shape(x_t, eps_hat)
    s.check_timestep(t)

    alpha = s.alpha[t - 1]
    abar = s.alpha_bar[t - 1]
    mean = (x_t - (1.0 - alpha) / np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(alpha)
    if sigma_mode == "zero" or t == 1:
        return mean
    if z is None:
        raise ValueError("z is required when sigma_mode='beta' and t > 1")
    z = as_image(z, "z")
    check_same_shape(x_t, z)
    return mean + np.sqrt(s.beta[t - 1]) * z


def sample(
    denoiser: Denoiser,
    condition,
    shape: tuple[int, int],
    s: DiffusionSchedule,
    seed: int,
    sigma_mode: str = "beta",
    on_step=None,
) -> np.ndarray:
    """Ancestral sampling from seeded Gaussian noise down to x_0.

    All randomness (x_T and every z) comes from one :class:`RandomStream`
    keyed by ``seed``, so identical seeds give bit-identical outputs.  An
    optional ``on_step(t, x)`` callback observes each intermediate state.
    """
    height, width = shape
    stream = RandomStream(seed)
    x = stream.gaussian_field(height, width)
    for t in range(s.total_timesteps, 0, -1):
        eps_hat = _call_denoiser(denoiser, x, t, condition)
        z = stream.gaussian_field(height, width) if (sigma_mode == "beta" and t > 1) else None
        x = reverse_step(x, t, eps_hat, z, s, sigma_mode)
        if on_step is not None:
            on_step(t, x)
    return x


def zero_denoiser(x_t: np.ndarray, t: int, condition) -> np.ndarray:
    """Predicts no noise; sampling with it just rescales the initial draw."""
    return np.zeros_like(x_t)


def make_exact_denoiser(eps: np.ndarray) -> Denoiser:
    """Oracle that always answers with the stored true noise."""
    fixed = np.asarray(eps, dtype=np.float64)

    def denoiser(x_t: np.ndarray, t: int, condition) -> np.ndarray:
        return fixed

    return denoiser


def make_offset_denoiser(eps: np.ndarray, offset: float) -> Denoiser:
    """Oracle answering the true noise shifted by a constant."""
    fixed = np.asarray(eps, dtype=np.float64) + offset

    def denoiser(x_t: np.ndarray, t: int, condition) -> np.ndarray:
        return fixed

    return denoiser
