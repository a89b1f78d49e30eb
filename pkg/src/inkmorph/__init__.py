"""Differentiable ink morphology toolkit.

Soft morphological operators with analytic gradients, structure losses for
ink rendering, spatio-temporal detail fusion, DDPM scheduling/sampling,
image metrics, and a deterministic glyph synthesizer, all on plain float64
arrays with the ink-signed convention (ink = +1, paper = -1).
"""

from .diffusion import (
    DiffusionSchedule,
    forward_sample,
    linear_schedule,
    make_exact_denoiser,
    reverse_step,
    sample,
    schedule_from_betas,
    training_loss,
    zero_denoiser,
)
from .dis_loss import (
    DisBreakdown,
    DisWeights,
    boundary_loss,
    boundary_mask,
    core_loss,
    dis_loss,
    dis_loss_grad,
    smooth_loss,
)
from .glyph_synth import GlyphSpec, synth_glyph
from .image_core import (
    convolve,
    convolve_adjoint,
    disk_kernel,
    laplacian,
    resize_bilinear,
    sobel_magnitude,
)
from .metrics import MetricReport, evaluate
from .optimize import (
    NumericalError,
    OptimizeConfig,
    OptimizeTrace,
    finite_diff_grad,
    gradient_check,
    run_descent,
    total_loss,
    total_loss_grad,
)
from .pgm import PgmError, load_pgm, save_pgm
from .rng import RandomStream, derive_seed
from .soft_morph import (
    MorphConfig,
    dilation_response,
    hard_morph,
    soft_dilation,
    soft_dilation_vjp,
    soft_erosion,
    soft_erosion_vjp,
)
from .staf import StafParams, composite_weight, fuse, layer_factor, spatial_attention, time_factor

__version__ = "0.1.0"
