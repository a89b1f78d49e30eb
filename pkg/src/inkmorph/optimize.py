"""Pixel-space gradient descent against MSE + weighted ink-structure loss.

This is the differentiability demonstrator: no network, just an image being
refined by the exact analytic gradients, plus the central-difference oracle
every gradient test uses.  ``total_loss_grad`` is the true gradient of the
mean-reduced objective (what the oracle checks); ``run_descent`` scales that
gradient by the pixel count when stepping, i.e. the learning rate applies to
each pixel's own loss term, so convergence speed does not degrade as images
grow.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import ndimage

from .dis_loss import DisBreakdown, DisWeights, boundary_loss, boundary_mask, core_loss, dis_loss, dis_loss_grad, smooth_loss
from .image_core import as_image, check_same_shape, laplacian
from .rng import RandomStream
from .soft_morph import soft_dilation, soft_dilation_vjp, soft_erosion, soft_erosion_vjp

__all__ = [
    "NumericalError",
    "OptimizeConfig",
    "TraceRecord",
    "OptimizeTrace",
    "total_loss",
    "total_loss_grad",
    "finite_diff_grad",
    "run_descent",
    "gradient_check",
]

KINK_MARGIN = 1e-6


class NumericalError(RuntimeError):
    """A computation produced NaN/Inf where a finite value was required."""


@dataclass(frozen=True)
class OptimizeConfig:
    steps: int = 200
    learning_rate: float = 0.1
    lambda_dis: float = 0.02
    dis_weights: DisWeights = field(default_factory=DisWeights)
    seed: int = 0
    log_every: int = 1

    def __post_init__(self):
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.lambda_dis < 0:
            raise ValueError("lambda_dis must be >= 0")
        if self.log_every < 1:
            raise ValueError("log_every must be >= 1")


@dataclass(frozen=True)
class TraceRecord:
    step: int
    mse: float
    dis: DisBreakdown
    total: float

    def to_dict(self) -> dict:
        return {"step": self.step, "mse": self.mse, "dis": self.dis.to_dict(), "total": self.total}


@dataclass
class OptimizeTrace:
    records: list[TraceRecord]
    final_image: np.ndarray


def _evaluate(x: np.ndarray, target: np.ndarray, cfg: OptimizeConfig) -> tuple[float, DisBreakdown, float]:
    mse = float(np.mean((x - target) ** 2))
    breakdown = dis_loss(x, target, cfg.dis_weights)
    return mse, breakdown, mse + cfg.lambda_dis * breakdown.total


def total_loss(x, target, cfg: OptimizeConfig) -> tuple[float, DisBreakdown]:
    """Mean squared pixel error plus lambda_dis times the structure loss total."""
    x = as_image(x)
    target = as_image(target, "target")
    check_same_shape(x, target)
    _, breakdown, total = _evaluate(x, target, cfg)
    return total, breakdown


def total_loss_grad(x, target, cfg: OptimizeConfig) -> np.ndarray:
    """Exact gradient of the mean-reduced total: 2(x-t)/N + lambda_dis * dis grad."""
    x = as_image(x)
    target = as_image(target, "target")
    check_same_shape(x, target)
    grad = 2.0 * (x - target) / x.size
    if cfg.lambda_dis != 0.0:
        grad = grad + cfg.lambda_dis * dis_loss_grad(x, target, cfg.dis_weights)
    return grad


def finite_diff_grad(
    loss: Callable[[np.ndarray], float],
    x,
    h: float,
    probes: Sequence[tuple[int, int]],
) -> np.ndarray:
    """Central-difference estimates of d loss/d x at the probed pixels."""
    if not h > 0:
        raise ValueError("h must be > 0")
    x = as_image(x)
    estimates = np.empty(len(probes))
    work = x.copy()
    for i, (row, col) in enumerate(probes):
        base = work[row, col]
        work[row, col] = base + h
        plus = loss(work)
        work[row, col] = base - h
        minus = loss(work)
        work[row, col] = base
        estimates[i] = (plus - minus) / (2.0 * h)
    return estimates


def run_descent(init, target, cfg: OptimizeConfig) -> OptimizeTrace:
    """Plain gradient descent on the combined objective, recording a trace.

    The per-step update is x <- x - lr * N * total_loss_grad(x), which is the
    gradient of the per-pixel (unaveraged) objective; the reported losses stay
    mean-reduced.  Records are kept at step 0, every ``log_every`` steps, and
    the final step.  Aborts with :class:`NumericalError` if the loss goes
    non-finite, naming the offending step.
    """
    x = as_image(init, "init").copy()
    target = as_image(target, "target")
    check_same_shape(x, target)

    records: list[TraceRecord] = []

    def log(step: int) -> None:
        mse, breakdown, total = _evaluate(x, target, cfg)
        if not np.isfinite(total):
            raise NumericalError(f"non-finite loss at step {step}")
        records.append(TraceRecord(step=step, mse=mse, dis=breakdown, total=total))

    log(0)
    scale = cfg.learning_rate * x.size
    for step in range(1, cfg.steps + 1):
        x -= scale * total_loss_grad(x, target, cfg)
        if step % cfg.log_every == 0 or step == cfg.steps:
            log(step)
    return OptimizeTrace(records=records, final_image=x)


def _kink_free(generated: np.ndarray, target: np.ndarray, w: DisWeights, active: tuple[bool, bool, bool]) -> np.ndarray:
    """Pixels whose perturbation cannot cross an absolute-value kink.

    A probe is tainted when any |.| argument it influences is within
    KINK_MARGIN of zero; influence regions are dilated by each operator's
    reach (disk radius for the core term, one pixel for the Laplacian).
    """
    tainted = np.zeros(generated.shape, dtype=bool)
    if active[0]:
        diff = soft_erosion(generated, w.morph) - soft_erosion(target, w.morph)
        near = np.abs(diff) < KINK_MARGIN
        size = 2 * w.morph.radius + 1
        tainted |= ndimage.maximum_filter(near, size=size, mode="constant")
    if active[1]:
        mask = boundary_mask(target, w.effective_mask_radius) > 0
        tainted |= mask & (np.abs(generated - target) < KINK_MARGIN)
    if active[2]:
        near = np.abs(laplacian(generated) - laplacian(target)) < KINK_MARGIN
        tainted |= ndimage.maximum_filter(near, size=3, mode="constant")
    return ~tainted


def _sample_probes(ok: np.ndarray, count: int, stream: RandomStream) -> list[tuple[int, int]]:
    rows, cols = np.nonzero(ok)
    if rows.size == 0:
        return []
    order = np.argsort(stream.uniform(rows.size))
    picked = order[: min(count, rows.size)]
    return [(int(rows[i]), int(cols[i])) for i in picked]


def gradient_check(
    seed: int = 0,
    size: int = 16,
    probes: int = 100,
    h: float = 1e-4,
    weights: DisWeights | None = None,
    lambda_dis: float = 0.02,
) -> dict:
    """Compare every analytic gradient in the library against central differences.

    Returns per-function worst relative errors plus the overall maximum; the
    relative error at a probe is |analytic - numeric| / max(|analytic|,
    |numeric|, 1e-10).  Kink-adjacent pixels are excluded for the L1-based
    losses since central differences are invalid across a kink.
    """
    w = weights if weights is not None else DisWeights()
    stream = RandomStream(seed)
    generated = stream.uniform_field(size, size)
    target = stream.uniform_field(size, size)
    upstream = stream.uniform_field(size, size)
    cfg_all = OptimizeConfig(dis_weights=w, lambda_dis=lambda_dis)

    smooth_ok = np.ones((size, size), dtype=bool)
    checks: dict[str, tuple[Callable[[np.ndarray], float], np.ndarray, np.ndarray]] = {
        "soft_erosion": (
            lambda img: float(np.sum(upstream * soft_erosion(img, w.morph))),
            soft_erosion_vjp(generated, w.morph, upstream),
            smooth_ok,
        ),
        "soft_dilation": (
            lambda img: float(np.sum(upstream * soft_dilation(img, w.morph))),
            soft_dilation_vjp(generated, w.morph, upstream),
            smooth_ok,
        ),
        "core_loss": _component_check(generated, target, w, "core"),
        "boundary_loss": _component_check(generated, target, w, "boundary"),
        "smooth_loss": _component_check(generated, target, w, "smooth"),
        "dis_total": (
            lambda img: dis_loss(img, target, w).total,
            dis_loss_grad(generated, target, w),
            _kink_free(generated, target, w, (True, True, True)),
        ),
        "total_loss": (
            lambda img: total_loss(img, target, cfg_all)[0],
            total_loss_grad(generated, target, cfg_all),
            _kink_free(generated, target, w, (True, True, True)),
        ),
    }

    per_function: dict[str, float] = {}
    probe_counts: dict[str, int] = {}
    for name, (loss_fn, analytic, ok) in checks.items():
        pts = _sample_probes(ok, probes, stream)
        numeric = finite_diff_grad(loss_fn, generated, h, pts)
        exact = np.array([analytic[p] for p in pts])
        denom = np.maximum(np.maximum(np.abs(exact), np.abs(numeric)), 1e-10)
        rel = np.abs(exact - numeric) / denom
        per_function[name] = float(rel.max()) if rel.size else 0.0
        probe_counts[name] = len(pts)

    return {
        "max_rel_error": max(per_function.values()),
        "per_function": per_function,
        "probes": probe_counts,
        "h": h,
        "seed": seed,
        "size": size,
    }


def _component_check(generated, target, w: DisWeights, which: str):
    if which == "core":
        one_hot = DisWeights(1.0, 0.0, 0.0, morph=w.morph, mask_radius=w.mask_radius)
        loss_fn = lambda img: core_loss(img, target, w.morph)
        ok = _kink_free(generated, target, w, (True, False, False))
    elif which == "boundary":
        one_hot = DisWeights(0.0, 1.0, 0.0, morph=w.morph, mask_radius=w.mask_radius)
        loss_fn = lambda img: boundary_loss(img, target, w.effective_mask_radius)
        ok = _kink_free(generated, target, w, (False, True, False))
    else:
        one_hot = DisWeights(0.0, 0.0, 1.0, morph=w.morph, mask_radius=w.mask_radius)
        loss_fn = lambda img: smooth_loss(img, target)
        ok = _kink_free(generated, target, w, (False, False, True))
    analytic = dis_loss_grad(generated, target, one_hot)
    return loss_fn, analytic, ok
