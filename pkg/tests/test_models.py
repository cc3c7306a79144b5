"""Closed-form models: spot values, structure, and validation."""

import math

import pytest

from dmclab.core import ValidationError
from dmclab.models import (
    fft_distant_reuses,
    fft_level_data_size,
    model_attention,
    model_batched,
    model_blocked_conv,
    model_cold,
    model_conv,
    model_fft_bounds,
    model_fft_components,
    model_fftconv_lower,
    model_gqa,
    model_im2col,
    model_matmul,
    model_transformer,
)


def test_matmul_closed_form():
    assert model_matmul(2, 3, 4) == pytest.approx(2 * 12**1.5)
    assert model_matmul(1, 1, 1) == 1.0
    with pytest.raises(ValidationError):
        model_matmul(0, 1, 1)


def test_cold_bound():
    assert model_cold(9) == 27.0


def test_conv_components_square():
    res = model_conv(64, 64, 3)
    short = math.sqrt(17)
    assert res.kernel_term == pytest.approx(9 * (62**2 - 1) * short)
    assert res.row_term == pytest.approx(3 * 2 * (64 - 7) * 61 * short)
    assert res.col_term == pytest.approx(2 * (60**2 - 1) * math.sqrt(64 * 3 + 9))
    assert res.total == pytest.approx(res.kernel_term + res.row_term + res.col_term)
    assert res.clamped == ()


def test_conv_asymptotic_rectangular():
    res = model_conv(100, 400, 3)
    assert res.asymptotic == pytest.approx(
        2 * math.sqrt(2) * 27 * 100 * 400 + 3**1.5 * 100 * 400**1.5
    )
    assert math.isnan(res.total)


def test_conv_clamps_small_images():
    # n just above k: the row component formula goes negative
    res = model_conv(5, 5, 4)
    assert "row_term" in res.clamped
    assert res.row_term == 0.0
    assert res.total >= 0.0


def test_conv_validation():
    with pytest.raises(ValidationError):
        model_conv(3, 3, 4)


def test_batched_terms():
    res = model_batched(64, 3, 8, 2)
    sx = math.sqrt(2)
    assert res.conv_term == pytest.approx(
        8 * sx * (2 * math.sqrt(2) * 27 * 64**2 + 3**1.5 * 64**2.5)
    )
    assert res.result_term == pytest.approx(sx * 3 * 64**3)
    assert res.total == pytest.approx(res.conv_term + res.result_term)
    # a single full batch has no result-accumulation passes
    assert model_batched(64, 3, 8, 8).result_term == 0.0
    with pytest.raises(ValidationError):
        model_batched(64, 3, 8, 3)


def test_im2col_adds_patch_matrix_term():
    res = model_im2col(1024, 7)
    assert res.r_term == pytest.approx(7 * 1024**3)
    assert res.total == pytest.approx(sum(res.conv_like_terms) + res.r_term)
    # the patch-matrix term dominates the streaming term by sqrt(n/k)
    assert res.r_term / res.conv_like_terms[1] == pytest.approx(math.sqrt(1024 / 7))


def test_blocked_conv_scales_by_sqrt_block():
    base = model_conv(256, 256, 3).asymptotic
    assert model_blocked_conv(256, 3, 4) == pytest.approx(base / 2)
    assert model_blocked_conv(256, 3, 16) == pytest.approx(base / 4)
    assert model_blocked_conv(256, 3, 1) == pytest.approx(base)


def test_fft_level_data_size():
    assert fft_level_data_size(0) == 1.5
    assert fft_level_data_size(1) == 7.0
    assert fft_level_data_size(3) == 60.0


def test_fft_distant_reuse_counts():
    assert fft_distant_reuses(16, 0) == 3
    assert fft_distant_reuses(16, 4) == 1
    assert fft_distant_reuses(16, 2) == 0
    assert fft_distant_reuses(16, 1) == 0
    assert fft_distant_reuses(64, 0) == 15
    assert fft_distant_reuses(64, 16) == 7


def test_fft_components_structure():
    res = model_fft_components(16)
    assert res.n == 16
    assert res.level_sizes == (1.5, 7.0, 22.0, 60.0, 152.0)
    assert res.divide_sum > 0
    assert res.conquer_sum > 0
    assert res.distant_count(0) == 3
    with pytest.raises(ValidationError):
        model_fft_components(12)


def test_fft_bounds_band():
    lower, upper = model_fft_bounds(1024)
    shape = 1024**1.5 * math.sqrt(10)
    assert lower == pytest.approx(6.4 * shape)
    assert upper == pytest.approx(6.5 * shape)
    assert lower < upper


def test_fftconv_lower_bound():
    assert model_fftconv_lower(512) == pytest.approx(38.5 * 512**2.5 * 3, rel=1e-12)


def test_attention_costs():
    res = model_attention(64, 512, 8)
    assert res.head_cost == pytest.approx(
        64 * 512**2.5 * 8 + 64 * 512**3 / math.sqrt(8)
    )
    assert res.mha_cost == 64 * 512**3
    with pytest.raises(ValidationError):
        model_attention(64, 512, 7)


def test_mha_cost_ignores_head_count():
    costs = {model_attention(64, 512, h).mha_cost for h in (1, 2, 4, 8, 16)}
    assert len(costs) == 1


def test_gqa_breakdown():
    l, d, h, q = 64, 512, 8, 2
    res = model_gqa(l, d, h, q)
    p = h // q
    d2 = d * d
    assert res.cold_term == pytest.approx(p * (d2 + 2 * d2 / h) ** 1.5)
    assert res.reuse_term == pytest.approx(
        2 * p * (q - 1) * (d2 / h) * math.sqrt(l * l + 4 * d2 / h)
    )
    assert res.total == pytest.approx(res.cold_term + res.reuse_term)
    assert res.asymptotic == p * d**3
    with pytest.raises(ValidationError):
        model_gqa(l, d, 8, 3)


def test_gqa_q1_has_no_reuse_term():
    assert model_gqa(64, 512, 8, 1).reuse_term == 0.0


def test_transformer_stage_table():
    res = model_transformer(6, 64, 512, 2048)
    assert res.forward_total == 6 * 2 * 64 * 512**3
    assert res.stages["masked_mha"] == res.stages["mha"] == 64 * 512**3
    assert res.stages["embedding"] == pytest.approx((512 * 64) ** 1.5)
    assert res.stages["softmax"] == pytest.approx(2 * 64**2.5)
    assert res.stages["feed_forward"] == pytest.approx(math.sqrt(4 * 512 * 2048))
    assert "feed_forward" in res.as_printed
