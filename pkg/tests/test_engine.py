"""Distance engines, cold policies, block transform, and analysis glue."""

import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dmclab.core import AnalysisConfig, DataObject, Trace, ValidationError, build_layout
from dmclab.engine import (
    accumulate_dmd,
    analyze_trace,
    apply_block_transform,
    cold_cost,
    stack_distances_fast,
    stack_distances_oracle,
)


def letter_trace(text: str) -> Trace:
    """One single-element object per distinct letter."""
    letters = sorted(set(text))
    objs = [DataObject(i, ch, 1) for i, ch in enumerate(letters)]
    index = {ch: i for i, ch in enumerate(letters)}
    return Trace(objs, [(index[ch], 0) for ch in text])


def test_inclusive_distance_convention():
    # second access to a letter counts the letter itself
    distances = stack_distances_oracle(letter_trace("abbbca"))
    assert distances == [None, None, 1, 1, None, 3]


def test_immediate_reuse_is_distance_one():
    assert stack_distances_fast(letter_trace("aa")) == [None, 1]


def test_reuse_dmd_closed_form():
    report = accumulate_dmd(stack_distances_fast(letter_trace("abbbca")), AnalysisConfig())
    assert report.reuse_dmd == pytest.approx(2 + math.sqrt(3), rel=1e-15)
    assert report.n_cold == 3


@st.composite
def traces(draw):
    n_objects = draw(st.integers(1, 20))
    sizes = draw(st.lists(st.integers(1, 8), min_size=n_objects, max_size=n_objects))
    objs = [DataObject(i, f"o{i}", s) for i, s in enumerate(sizes)]
    accesses = draw(
        st.lists(
            st.tuples(st.integers(0, n_objects - 1), st.integers(0, 7)),
            max_size=300,
        )
    )
    accesses = [(oid, off % sizes[oid]) for oid, off in accesses]
    return Trace(objs, accesses)


@settings(max_examples=200, deadline=None)
@given(traces())
def test_fast_engine_matches_oracle(trace):
    assert stack_distances_fast(trace) == stack_distances_oracle(trace)


@settings(max_examples=100, deadline=None)
@given(traces(), st.integers(2, 8))
def test_block_distance_never_exceeds_element_distance(trace, block):
    if not trace.objects:
        return
    layout = build_layout(trace.objects, block)
    blocked = apply_block_transform(trace, layout)
    element = stack_distances_fast(trace)
    per_block = stack_distances_fast(blocked)
    for e, b in zip(element, per_block):
        if e is not None and b is not None:
            assert b <= e


def test_block_transform_preserves_length_and_identity_at_b1():
    trace = letter_trace("abcabc")
    blocked = apply_block_transform(trace, build_layout(trace.objects, 1))
    assert len(blocked) == len(trace)
    assert stack_distances_fast(blocked) == stack_distances_fast(trace)


def test_block_transform_merges_neighbors():
    # 4 consecutive elements of one object fall into a single 4-wide block
    obj = [DataObject(0, "a", 4)]
    trace = Trace(obj, [(0, 0), (0, 1), (0, 2), (0, 3)])
    blocked = apply_block_transform(trace, build_layout(obj, 4))
    assert stack_distances_fast(blocked) == [None, 1, 1, 1]


def test_cold_cost():
    assert cold_cost(0) == 0.0
    assert cold_cost(4) == 8.0
    with pytest.raises(ValidationError):
        cold_cost(-1)


def test_cold_policies():
    trace = letter_trace("abbbca")
    distances = stack_distances_fast(trace)
    sizes = [o.size for o in trace.touched_objects()]

    excl = accumulate_dmd(distances, AnalysisConfig(cold_policy="exclude"), sizes)
    assert excl.cold_dmd == 0.0

    foot = accumulate_dmd(distances, AnalysisConfig(cold_policy="footprint_bound"), sizes)
    assert foot.cold_dmd == pytest.approx(3**1.5)

    per = accumulate_dmd(distances, AnalysisConfig(cold_policy="per_object"), sizes)
    assert per.cold_dmd == pytest.approx(sum(s**1.5 for s in sizes))


def test_analyze_trace_engines_agree():
    trace = letter_trace("abcbadcbaabcd")
    fast = analyze_trace(trace, engine="fast")
    oracle = analyze_trace(trace, engine="oracle")
    assert fast == oracle
    with pytest.raises(ValidationError):
        analyze_trace(trace, engine="magic")


def test_analyze_trace_applies_bits_and_block():
    trace = letter_trace("abab")
    plain = analyze_trace(trace)
    scaled = analyze_trace(trace, AnalysisConfig(granularity_bits=16))
    assert scaled.reuse_dmd == pytest.approx(4 * plain.reuse_dmd)

    obj = [DataObject(0, "a", 8)]
    seq = Trace(obj, [(0, i) for i in range(8)] * 2)
    blocked = analyze_trace(seq, AnalysisConfig(block_size=4))
    element = analyze_trace(seq)
    assert blocked.reuse_dmd < element.reuse_dmd


def test_histogram_counts_are_exact():
    report = analyze_trace(letter_trace("abab" * 10))
    assert report.histogram == {2: 38}
    assert report.n_accesses == 40
    assert report.n_cold == 2
