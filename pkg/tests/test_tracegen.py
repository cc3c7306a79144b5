"""Trace generators: exact lengths, determinism, and access structure."""

import io

import pytest

from dmclab.core import ValidationError, write_dmt
from dmclab.engine import analyze_trace, stack_distances_fast
from dmclab.tracegen import (
    BatchParams,
    ConvParams,
    FftParams,
    GenSpec,
    Im2colParams,
    MatmulParams,
    access_count,
    gen_batched_conv,
    gen_conv,
    gen_fft,
    gen_matmul,
    generate,
)

SPECS = [
    GenSpec("matmul", MatmulParams(3, 4, 5)),
    GenSpec("conv", ConvParams(6, 9, 3)),
    GenSpec("im2col", Im2colParams(6, 2)),
    GenSpec("batchconv", BatchParams(5, 2, 6, 3)),
    GenSpec("fft", FftParams(16)),
    GenSpec("fftconv2d", FftParams(4)),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.algorithm)
def test_access_count_matches_generated_length(spec):
    assert len(generate(spec)) == access_count(spec)


def test_known_access_counts():
    assert access_count(GenSpec("matmul", MatmulParams(2, 2, 2))) == 20
    assert access_count(GenSpec("conv", ConvParams(4, 4, 2))) == 81
    assert access_count(GenSpec("im2col", Im2colParams(2, 2))) == 17
    assert access_count(GenSpec("fft", FftParams(16))) == 304


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.algorithm)
def test_generation_is_deterministic(spec):
    texts = []
    for _ in range(2):
        buf = io.StringIO()
        trace = generate(spec)
        for obj in trace.objects:
            buf.write(f"%object {obj.id} {obj.size} {obj.name}\n")
        for oid, off in trace.accesses:
            buf.write(f"{oid} {off}\n")
        texts.append(buf.getvalue())
    assert texts[0] == texts[1]


def test_parameter_validation():
    with pytest.raises(ValidationError):
        generate(GenSpec("conv", ConvParams(3, 3, 4)))
    with pytest.raises(ValidationError):
        generate(GenSpec("fft", FftParams(12)))
    with pytest.raises(ValidationError):
        generate(GenSpec("batchconv", BatchParams(5, 2, 6, 4)))
    with pytest.raises(ValidationError):
        generate(GenSpec("sort", MatmulParams(1, 1, 1)))


def test_matmul_access_order():
    trace = gen_matmul(1, 2, 1)
    names = {obj.id: obj.name for obj in trace.objects}
    seq = [(names[oid], off) for oid, off in trace.accesses]
    assert seq == [("A", 0), ("B", 0), ("A", 1), ("B", 1), ("C", 0)]


def test_conv_reads_kernel_before_image():
    trace = gen_conv(3, 3, 2)
    names = {obj.id: obj.name for obj in trace.objects}
    first_window = [(names[oid], off) for oid, off in trace.accesses[:9]]
    assert first_window == [
        ("K", 0), ("I", 0), ("K", 1), ("I", 1),
        ("K", 2), ("I", 3), ("K", 3), ("I", 4),
        ("R", 0),
    ]


def test_conv_kernel_reuses_cluster_at_short_distances():
    # after the cold window, kernel cells come back every 2k^2 accesses
    # (give or take one for the result write), so the k^2-per-window
    # reuse mass sits in the three bins around 2k^2
    n, k = 32, 3
    report = analyze_trace(gen_conv(n, n, k))
    windows = (n - k + 1) ** 2
    spike = sum(report.histogram.get(d, 0) for d in (2 * k * k - 1, 2 * k * k, 2 * k * k + 1))
    assert spike >= k * k * (windows - 1)


def test_batched_conv_single_channel_equals_conv():
    plain = gen_conv(5, 5, 2)
    batched = gen_batched_conv(5, 2, 1, 1)
    assert batched.accesses == plain.accesses
    assert [o.size for o in batched.objects] == [o.size for o in plain.objects]


def test_batched_conv_result_reuse_distances():
    # with all channels in one batch, R is re-touched within the window;
    # with x=1 it is only revisited after a full pass over the image
    n, k, c = 8, 2, 4
    one_batch = analyze_trace(gen_batched_conv(n, k, c, c))
    unbatched = analyze_trace(gen_batched_conv(n, k, c, 1))
    near = 2 * k * k + 1
    assert max(d for d in one_batch.histogram if d <= near * c) < n * n
    assert any(d > n * n for d in unbatched.histogram)


def test_fft_object_inventory():
    # input, the shared root table, and even/odd/output per internal call
    trace = gen_fft(16)
    names = [obj.name for obj in trace.objects]
    assert names[0] == "A"
    assert names[1] == "omega"
    assert sum(1 for nm in names if nm.endswith(".y")) == 15
    omega = trace.objects[1]
    assert omega.size == 8


def test_fft_root_entry_zero_touched_at_every_level():
    # entry 0 is read once per internal call: 1 + 2 + 4 + 8 = 15 times
    trace = gen_fft(16)
    count = sum(1 for oid, off in trace.accesses if oid == 1 and off == 0)
    assert count == 15


def test_fft_odd_root_entries_touched_once():
    trace = gen_fft(16)
    for entry in (1, 3, 5, 7):
        count = sum(1 for oid, off in trace.accesses if oid == 1 and off == entry)
        assert count == 1


def test_fft_base_case():
    trace = gen_fft(1)
    assert len(trace) == 1
    assert trace.accesses == ((0, 0),)


def test_fftconv2d_shares_one_root_table():
    trace = generate(GenSpec("fftconv2d", FftParams(4)))
    omegas = [obj for obj in trace.objects if obj.name == "omega"]
    assert len(omegas) == 1
    assert omegas[0].size == 2


def test_fftconv2d_product_phase_is_triples():
    n = 2
    trace = generate(GenSpec("fftconv2d", FftParams(n)))
    prod = next(obj.id for obj in trace.objects if obj.name == "P")
    writes = [i for i, (oid, _) in enumerate(trace.accesses) if oid == prod]
    # first n*n touches of P are the pointwise-product writes, each
    # preceded by one transformed-kernel and one transformed-image read
    assert writes[2] - writes[1] == 3 or len(writes) >= n * n


def test_traces_round_trip_through_dmt(tmp_path):
    spec = GenSpec("conv", ConvParams(5, 5, 2))
    path = tmp_path / "t.dmt"
    write_dmt(generate(spec), path)
    from dmclab.core import read_dmt

    again = read_dmt(path)
    assert again == generate(spec)


def test_distances_well_formed_on_all_generators():
    for spec in SPECS:
        trace = generate(spec)
        distances = stack_distances_fast(trace)
        n_cold = sum(1 for d in distances if d is None)
        assert n_cold == len({a for a in trace.accesses})
