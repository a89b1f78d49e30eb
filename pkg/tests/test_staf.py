import numpy as np
import pytest

from inkmorph.rng import RandomStream
from inkmorph.staf import (
    StafParams,
    as_feature_map,
    composite_weight,
    fuse,
    layer_factor,
    spatial_attention,
    time_factor,
)

ZERO_TAPS = tuple((0.0, 0.0, 0.0) for _ in range(3))


class TestLayerFactor:
    def test_layer_zero_is_one(self):
        assert layer_factor(0, 0.15) == 1.0

    def test_layer_two(self):
        value = layer_factor(2, 0.15)
        assert value == max(0.1, 1.0 - 2 * 0.15)
        assert abs(value - 0.7) <= 1e-12

    def test_floor(self):
        assert abs(layer_factor(6, 0.15) - 0.1) <= 1e-12
        assert layer_factor(7, 0.15) == 0.1
        assert layer_factor(40, 0.15) == 0.1

    def test_monotone_and_bounded(self):
        for gamma in (0.0, 0.15, 0.5, 1.0):
            values = [layer_factor(l, gamma) for l in range(12)]
            assert all(0.1 <= v <= 1.0 for v in values)
            assert all(b <= a for a, b in zip(values, values[1:]))

    def test_negative_layer_rejected(self):
        with pytest.raises(ValueError):
            layer_factor(-1, 0.15)


class TestTimeFactor:
    def test_zero_timestep(self):
        assert time_factor(0, 1000, 0.2) == 1.0

    def test_final_timestep(self):
        assert abs(time_factor(1000, 1000, 0.2) - 1.2) <= 1e-12

    def test_midpoint(self):
        assert abs(time_factor(500, 1000, 0.2) - 1.1) <= 1e-12

    def test_monotone(self):
        values = [time_factor(t, 100, 0.2) for t in range(0, 101, 10)]
        assert all(a <= b for a, b in zip(values, values[1:]))

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            time_factor(1001, 1000, 0.2)
        with pytest.raises(ValueError):
            time_factor(-1, 1000, 0.2)


class TestCompositeWeight:
    def test_clamped_at_one(self):
        p = StafParams(alpha_base=1.0)
        assert composite_weight(p, 0, 1000) == 1.0

    def test_hand_table_value(self):
        p = StafParams(alpha_base=0.8)
        value = composite_weight(p, 2, 1000)
        assert value == 0.8 * max(0.1, 1.0 - 2 * 0.15) * (1.0 + 0.2)
        assert abs(value - 0.672) <= 1e-12

    def test_zero_base(self):
        p = StafParams(alpha_base=0.0)
        for l, t in [(0, 0), (3, 500), (8, 1000)]:
            assert composite_weight(p, l, t) == 0.0

    def test_always_in_unit_interval(self):
        stream = RandomStream(4)
        for _ in range(50):
            base = float(stream.uniform_signed(1, 3.0)[0])
            p = StafParams(alpha_base=base)
            l = int(stream.uniform(1)[0] * 10)
            t = int(stream.uniform(1)[0] * 1000)
            assert 0.0 <= composite_weight(p, l, t) <= 1.0


class TestSpatialAttention:
    def test_zero_taps_give_half(self):
        f_hf = RandomStream(1).uniform_field(6, 6)[None, :, :]
        p = StafParams(attention_taps=ZERO_TAPS, attention_bias=0.0)
        out = spatial_attention(f_hf, p, 6, 6)
        assert out.shape == (1, 6, 6)
        assert np.all(out == 0.5)

    def test_large_bias_saturates(self):
        f_hf = RandomStream(2).uniform_field(5, 5)[None, :, :]
        p = StafParams(attention_taps=ZERO_TAPS, attention_bias=20.0)
        out = spatial_attention(f_hf, p, 5, 5)
        assert np.all(np.abs(out - 1.0) < 1e-8)

    def test_open_unit_interval(self):
        f_hf = RandomStream(3).uniform_field(8, 8)[None, :, :] * 3.0
        out = spatial_attention(f_hf, StafParams(), 8, 8)
        assert np.all(out > 0.0) and np.all(out < 1.0)

    def test_resizes_and_averages_channels(self):
        f_hf = np.stack([np.full((4, 4), 0.2), np.full((4, 4), 0.8)])
        p = StafParams(attention_taps=ZERO_TAPS, attention_bias=0.0)
        out = spatial_attention(f_hf, p, 9, 7)
        assert out.shape == (1, 9, 7)
        assert np.all(out == 0.5)


class TestFuse:
    def _features(self, seed=0, channels=2, size=6):
        stream = RandomStream(seed)
        f_c = np.stack([stream.uniform_field(size, size) for _ in range(channels)])
        f_hf = np.stack([stream.uniform_field(4, 5) for _ in range(3)])
        return f_c, f_hf

    def test_zero_global_gate_is_identity(self):
        f_c, f_hf = self._features()
        out = fuse(f_c, f_hf, StafParams(alpha_global=0.0), 0, 500)
        assert np.array_equal(out, f_c)
        assert out is not f_c

    def test_zero_base_is_identity(self):
        f_c, f_hf = self._features(seed=5)
        out = fuse(f_c, f_hf, StafParams(alpha_base=0.0), 2, 100)
        assert np.array_equal(out, f_c)

    def test_constant_plumbing(self):
        # f_c = 0, aligned hf = 1, attention = 0.5 -> output = 0.5 * weight
        f_c = np.zeros((2, 6, 6))
        f_hf = np.ones((3, 4, 4))
        p = StafParams(alpha_global=1.0, alpha_base=0.8, attention_taps=ZERO_TAPS)
        w = composite_weight(p, 1, 250)
        out = fuse(f_c, f_hf, p, 1, 250)
        assert np.allclose(out, 0.5 * w, atol=1e-15)

    def test_pure_residual_form(self):
        f_c, f_hf = self._features(seed=9)
        g = RandomStream(10).uniform_field(6, 6)[None, :, :] * np.ones((2, 1, 1))
        p = StafParams(alpha_base=0.6)
        lhs = fuse(f_c + g, f_hf, p, 1, 800)
        rhs = fuse(f_c, f_hf, p, 1, 800) + g
        assert np.abs(lhs - rhs).max() <= 1e-12

    def test_spatial_alignment(self):
        f_c, f_hf = self._features(seed=11, channels=1, size=10)
        out = fuse(f_c, f_hf, StafParams(), 0, 0)
        assert out.shape == f_c.shape


class TestParamsJson:
    def test_round_trip(self):
        taps = tuple(tuple(float(r * 3 + c) for c in range(3)) for r in range(3))
        p = StafParams(
            alpha_global=0.9,
            alpha_base=0.4,
            gamma_layer=0.2,
            gamma_time=0.05,
            attention_taps=taps,
            attention_bias=-1.5,
            total_timesteps=64,
        )
        assert StafParams.from_json(p.to_json()) == p

    def test_bad_taps_rejected(self):
        with pytest.raises(ValueError):
            StafParams(attention_taps=((1.0, 2.0), (3.0, 4.0)))

    def test_validation(self):
        with pytest.raises(ValueError):
            StafParams(gamma_layer=-0.1)
        with pytest.raises(ValueError):
            StafParams(total_timesteps=0)


def test_feature_map_validation():
    with pytest.raises(ValueError):
        as_feature_map(np.zeros((4, 4)))
    with pytest.raises(ValueError):
        as_feature_map(np.full((1, 2, 2), np.nan))
