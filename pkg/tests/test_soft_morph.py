import math

import numpy as np
import pytest

from inkmorph.image_core import convolve, disk_kernel
from inkmorph.optimize import finite_diff_grad
from inkmorph.rng import RandomStream
from inkmorph.soft_morph import (
    MorphConfig,
    dilation_response,
    hard_morph,
    soft_dilation,
    soft_dilation_vjp,
    soft_erosion,
    soft_erosion_vjp,
)


def logistic(z):
    # independent scalar oracle
    return 1.0 / (1.0 + math.exp(-z))


class TestConfig:
    def test_defaults(self):
        cfg = MorphConfig()
        assert cfg.tau == 0.5 and cfg.radius == 2

    def test_bad_tau(self):
        with pytest.raises(ValueError, match="tau must be > 0"):
            MorphConfig(tau=0.0)
        with pytest.raises(ValueError):
            MorphConfig(tau=-1.0)

    def test_bad_radius(self):
        with pytest.raises(ValueError):
            MorphConfig(radius=0)


class TestSoftOperators:
    def test_balanced_neighborhood_gives_half_tau(self):
        for tau in (0.1, 0.5, 2.0):
            cfg = MorphConfig(tau=tau, radius=1)
            zeros = np.zeros((6, 6))
            assert np.allclose(soft_erosion(zeros, cfg), -0.5 * tau, atol=1e-15)
            assert np.allclose(soft_dilation(zeros, cfg), 0.5 * tau, atol=1e-15)

    def test_all_ink_erosion(self):
        cfg = MorphConfig(tau=0.1, radius=1)
        out = soft_erosion(np.ones((5, 5)), cfg)
        expected = -0.1 / (1.0 + math.exp(10.0))  # -tau * logistic(-1/tau)
        assert np.allclose(out, expected, rtol=1e-12)
        assert abs(expected + 4.5398e-6) < 1e-9

    def test_all_paper_dilation(self):
        cfg = MorphConfig(tau=0.1, radius=1)
        out = soft_dilation(-np.ones((5, 5)), cfg)
        expected = 0.1 / (1.0 + math.exp(10.0))
        assert np.allclose(out, expected, rtol=1e-12)

    def test_dilation_minus_erosion_is_tau(self):
        stream = RandomStream(2)
        cfg = MorphConfig(tau=0.37, radius=2)
        x = stream.uniform_field(40, 40)  # 1600 pixels > 10^3
        gap = soft_dilation(x, cfg) - soft_erosion(x, cfg)
        assert np.abs(gap - cfg.tau).max() <= 1e-12

    def test_dilation_monotone(self):
        stream = RandomStream(4)
        cfg = MorphConfig(tau=0.5, radius=1)
        for _ in range(5):
            x = stream.uniform_field(9, 9)
            y = x + np.abs(stream.uniform_field(9, 9))
            assert np.all(soft_dilation(x, cfg) <= soft_dilation(y, cfg))

    def test_strict_output_ranges(self):
        stream = RandomStream(6)
        cfg = MorphConfig(tau=0.25, radius=2)
        x = stream.uniform_field(16, 16)
        ero = soft_erosion(x, cfg)
        dil = soft_dilation(x, cfg)
        assert np.all(ero > -cfg.tau) and np.all(ero < 0.0)
        assert np.all(dil > 0.0) and np.all(dil < cfg.tau)

    def test_no_overflow_at_extreme_ratio(self):
        cfg = MorphConfig(tau=1e-6, radius=1)
        out = soft_dilation(np.ones((4, 4)), cfg)  # |c/tau| = 1e6
        assert np.all(np.isfinite(out))


class TestVjps:
    def test_zero_upstream_gives_zero(self):
        x = RandomStream(1).uniform_field(8, 8)
        cfg = MorphConfig()
        zero = np.zeros_like(x)
        assert np.all(soft_erosion_vjp(x, cfg, zero) == 0.0)
        assert np.all(soft_dilation_vjp(x, cfg, zero) == 0.0)

    @pytest.mark.parametrize("seed", range(4))
    def test_matches_finite_differences(self, seed):
        stream = RandomStream(seed)
        cfg = MorphConfig(tau=0.5, radius=1)
        x = stream.uniform_field(16, 16)
        upstream = np.ones_like(x)
        grad = soft_erosion_vjp(x, cfg, upstream)
        probes = [(int(r), int(c)) for r, c in zip(stream.uniform(30) * 16, stream.uniform(30) * 16)]
        fd = finite_diff_grad(lambda img: float(np.sum(soft_erosion(img, cfg))), x, 1e-4, probes)
        analytic = np.array([grad[p] for p in probes])
        rel = np.abs(analytic - fd) / np.maximum(np.maximum(np.abs(analytic), np.abs(fd)), 1e-10)
        assert rel.max() <= 1e-5

    def test_erosion_and_dilation_vjps_coincide(self):
        stream = RandomStream(13)
        cfg = MorphConfig(tau=0.3, radius=2)
        x = stream.uniform_field(12, 12)
        u = stream.uniform_field(12, 12)
        assert np.array_equal(soft_erosion_vjp(x, cfg, u), soft_dilation_vjp(x, cfg, u))

    def test_saturated_gradient_vanishes_cleanly(self):
        cfg = MorphConfig(tau=0.01, radius=1)  # |c/tau| = 100 on constant ink
        grad = soft_erosion_vjp(np.ones((6, 6)), cfg, np.ones((6, 6)))
        assert np.all(np.isfinite(grad))
        assert np.abs(grad).max() < 1e-20

    def test_dimension_mismatch_rejected(self):
        with pytest.raises(ValueError):
            soft_erosion_vjp(np.zeros((4, 4)), MorphConfig(), np.zeros((3, 4)))


class TestTemperatureLimit:
    def test_response_sharpens_as_tau_shrinks(self):
        img = np.full((8, 12), -1.0)
        img[:, 6:] = 1.0
        c = convolve(img, disk_kernel(1))
        off_boundary = np.abs(c) > 0.5
        indicator = (c > 0.0).astype(float)
        errs = []
        for tau in (1.0, 0.1, 0.01):
            resp = dilation_response(img, MorphConfig(tau=tau, radius=1))
            errs.append(np.abs(resp - indicator)[off_boundary].max())
        assert errs[0] > errs[1] > errs[2]


class TestHardMorph:
    def test_constant_ink_fixed_point(self):
        ink = np.ones((5, 5))
        assert np.array_equal(hard_morph(ink, 1, "erode"), ink)
        assert np.array_equal(hard_morph(ink, 1, "dilate"), ink)

    def test_single_pixel_dilate_is_cross(self):
        img = np.full((5, 5), -1.0)
        img[2, 2] = 1.0
        out = hard_morph(img, 1, "dilate")
        expected = np.full((5, 5), -1.0)
        for r, c in [(2, 2), (1, 2), (3, 2), (2, 1), (2, 3)]:
            expected[r, c] = 1.0
        assert np.array_equal(out, expected)

    def test_single_pixel_erode_vanishes(self):
        img = np.full((5, 5), -1.0)
        img[2, 2] = 1.0
        assert np.all(hard_morph(img, 1, "erode") == -1.0)

    def test_values_stay_binary(self):
        x = RandomStream(5).uniform_field(10, 10)
        out = hard_morph(x, 2, "dilate")
        assert set(np.unique(out)) <= {-1.0, 1.0}

    def test_bad_mode(self):
        with pytest.raises(ValueError):
            hard_morph(np.zeros((4, 4)), 1, "open")
