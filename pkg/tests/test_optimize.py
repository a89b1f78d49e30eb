import numpy as np
import pytest

from inkmorph.dis_loss import DisWeights
from inkmorph.glyph_synth import GlyphSpec, synth_glyph
from inkmorph.optimize import (
    NumericalError,
    OptimizeConfig,
    finite_diff_grad,
    gradient_check,
    run_descent,
    total_loss,
    total_loss_grad,
)
from inkmorph.rng import RandomStream


class TestTotalLoss:
    def test_identical_images(self):
        img = synth_glyph(GlyphSpec(size=20, seed=1))
        total, breakdown = total_loss(img, img, OptimizeConfig())
        assert total == 0.0
        assert breakdown.total == 0.0

    def test_zero_weight_reduces_to_mse(self):
        stream = RandomStream(2)
        x, t = stream.uniform_field(10, 10), stream.uniform_field(10, 10)
        cfg = OptimizeConfig(lambda_dis=0.0)
        total, _ = total_loss(x, t, cfg)
        assert total == float(np.mean((x - t) ** 2))

    def test_constant_offset_mse(self):
        t = RandomStream(3).uniform_field(12, 12) * 0.5
        total, _ = total_loss(t + 0.1, t, OptimizeConfig(lambda_dis=0.0))
        assert abs(total - 0.01) <= 1e-12


class TestTotalLossGrad:
    def test_zero_at_minimum(self):
        img = synth_glyph(GlyphSpec(size=20, seed=4))
        assert np.all(total_loss_grad(img, img, OptimizeConfig()) == 0.0)

    def test_mse_only_gradient(self):
        stream = RandomStream(5)
        x, t = stream.uniform_field(9, 9), stream.uniform_field(9, 9)
        grad = total_loss_grad(x, t, OptimizeConfig(lambda_dis=0.0))
        assert np.array_equal(grad, 2.0 * (x - t) / x.size)

    def test_matches_finite_differences(self):
        result = gradient_check(seed=123, size=16, probes=40)
        assert result["per_function"]["total_loss"] <= 1e-4


class TestFiniteDiffGrad:
    def test_linear_functional(self):
        x = RandomStream(6).uniform_field(8, 8)
        probes = [(0, 0), (3, 4), (7, 7)]
        est = finite_diff_grad(lambda img: float(np.sum(img)), x, 1e-4, probes)
        assert np.abs(est - 1.0).max() <= 1e-10

    def test_quadratic(self):
        x = RandomStream(7).uniform_field(8, 8)
        probes = [(1, 1), (5, 2)]
        est = finite_diff_grad(lambda img: 0.5 * float(np.sum(img * img)), x, 1e-4, probes)
        expected = np.array([x[p] for p in probes])
        assert np.abs(est - expected).max() <= 1e-8

    def test_input_not_mutated(self):
        x = RandomStream(8).uniform_field(6, 6)
        before = x.copy()
        finite_diff_grad(lambda img: float(np.sum(img)), x, 1e-4, [(2, 2)])
        assert np.array_equal(x, before)

    def test_bad_h(self):
        with pytest.raises(ValueError):
            finite_diff_grad(lambda img: 0.0, np.zeros((4, 4)), 0.0, [(0, 0)])


class TestGradientCheck:
    def test_full_suite_within_tolerance(self):
        result = gradient_check(seed=0, size=16, probes=60)
        assert result["max_rel_error"] <= 1e-4
        assert result["per_function"]["soft_erosion"] <= 1e-5
        assert result["per_function"]["soft_dilation"] <= 1e-5
        assert all(count > 0 for count in result["probes"].values())


class TestRunDescent:
    def test_fixed_point_at_target(self):
        img = synth_glyph(GlyphSpec(size=24, seed=9))
        trace = run_descent(img, img, OptimizeConfig(steps=5))
        assert all(r.total == 0.0 for r in trace.records)
        assert np.array_equal(trace.final_image, img)

    def test_deterministic(self):
        target = synth_glyph(GlyphSpec(size=24, seed=10))
        init = target + RandomStream(11).uniform_field(24, 24, amplitude=0.3)
        cfg = OptimizeConfig(steps=15)
        a = run_descent(init, target, cfg)
        b = run_descent(init, target, cfg)
        assert np.array_equal(a.final_image, b.final_image)
        assert [r.to_dict() for r in a.records] == [r.to_dict() for r in b.records]

    def test_trace_composition_identity(self):
        target = synth_glyph(GlyphSpec(size=24, seed=12))
        init = target + RandomStream(13).uniform_field(24, 24, amplitude=0.2)
        cfg = OptimizeConfig(steps=10, lambda_dis=0.02)
        trace = run_descent(init, target, cfg)
        for r in trace.records:
            assert abs(r.total - (r.mse + cfg.lambda_dis * r.dis.total)) <= 1e-12

    def test_monotone_under_small_learning_rate(self):
        target = synth_glyph(GlyphSpec(size=16, stroke_count=1, stroke_width=2.0, halo_radius=1, seed=3))
        init = target + RandomStream(1).uniform_field(16, 16, amplitude=0.3)
        trace = run_descent(init, target, OptimizeConfig(steps=10, learning_rate=1e-3))
        totals = [r.total for r in trace.records]
        assert all(b <= a for a, b in zip(totals, totals[1:]))

    def test_log_every_keeps_first_and_last(self):
        target = synth_glyph(GlyphSpec(size=16, seed=2))
        init = target + RandomStream(0).uniform_field(16, 16, amplitude=0.1)
        trace = run_descent(init, target, OptimizeConfig(steps=7, log_every=3))
        assert [r.step for r in trace.records] == [0, 3, 6, 7]

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")
    def test_divergence_aborts_with_step_number(self):
        target = synth_glyph(GlyphSpec(size=16, seed=5))
        init = target + RandomStream(4).uniform_field(16, 16, amplitude=0.3)
        cfg = OptimizeConfig(steps=500, learning_rate=1e6)
        with pytest.raises(NumericalError, match=r"step \d+"):
            run_descent(init, target, cfg)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            OptimizeConfig(steps=0)
        with pytest.raises(ValueError):
            OptimizeConfig(learning_rate=0.0)
        with pytest.raises(ValueError):
            OptimizeConfig(lambda_dis=-0.1)


def test_dis_weights_flow_through():
    target = synth_glyph(GlyphSpec(size=16, seed=6))
    init = target + RandomStream(7).uniform_field(16, 16, amplitude=0.2)
    w = DisWeights(0.0, 1.0, 0.0)
    cfg = OptimizeConfig(steps=3, dis_weights=w)
    trace = run_descent(init, target, cfg)
    assert trace.records[-1].dis.total == trace.records[-1].dis.boundary
