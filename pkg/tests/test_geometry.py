import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from blocknet.errors import GenerationError
from blocknet.geometry import (
    MIN_LENGTH, Point, angle_between, collinear_overlap, sample_segment, seg, segment_distance,
    segments_intersect,
)
from blocknet.rng import Xoshiro256

coord = st.floats(min_value=1.0, max_value=30.0, allow_nan=False)
segments = st.builds(seg, coord, coord, coord, coord)


def test_sample_segment_respects_minimum_length():
    rng = Xoshiro256(1)
    for _ in range(500):
        s = sample_segment(rng, 13.0)
        assert s.length >= 13.0
        for p in s:
            assert 1.0 <= p.x <= 30.0 and 1.0 <= p.y <= 30.0


def test_corner_to_corner_segment_length():
    s = seg(1, 1, 30, 30)
    assert s.length == pytest.approx(math.sqrt(29 ** 2 + 29 ** 2))
    assert s.length == pytest.approx(41.0122, abs=1e-4)
    assert s.length >= MIN_LENGTH


def test_sample_segment_rejects_impossible_length():
    # the longest chord of the [1, 30] square is 29*sqrt(2) ~ 41.0
    with pytest.raises(GenerationError):
        sample_segment(Xoshiro256(1), 50.0)


def test_sample_segment_bounded_attempts():
    with pytest.raises(GenerationError):
        sample_segment(Xoshiro256(1), 41.0, max_attempts=3)


def test_perpendicular_cross_at_midpoints():
    assert segments_intersect(seg(5, 16, 27, 16), seg(16, 5, 16, 27)) == pytest.approx((0.5, 0.5))


def test_parallel_segments_do_not_intersect():
    assert segments_intersect(seg(1, 1, 10, 1), seg(1, 2, 10, 2)) is None


def test_diagonals_cross_at_centre():
    # (2,2)+t*(20,20) = (2,22)+u*(20,-20)  =>  t = u = 0.5
    assert segments_intersect(seg(2, 2, 22, 22), seg(2, 22, 22, 2)) == pytest.approx((0.5, 0.5))


def test_off_centre_crossing_parameters():
    # x = 4 + 20 t crosses the vertical x = 9 at t = 0.25; y = 3 + 10 u = 5 gives u = 0.2
    assert segments_intersect(seg(4, 5, 24, 5), seg(9, 3, 9, 13)) == pytest.approx((0.25, 0.2))


def test_collinear_overlap_is_absent_but_flagged():
    a, b = seg(1, 1, 10, 1), seg(5, 1, 20, 1)
    assert segments_intersect(a, b) is None
    assert collinear_overlap(a, b)
    assert not collinear_overlap(seg(1, 1, 4, 1), seg(5, 1, 9, 1))
    assert segment_distance(a, b) == 0.0


def test_disjoint_segments():
    assert segments_intersect(seg(1, 1, 5, 1), seg(6, 0, 6, 5)) is None
    assert segment_distance(seg(1, 1, 5, 1), seg(6, 0, 6, 5)) == pytest.approx(1.0)


def test_angle_between_examples():
    o = Point(0.0, 0.0)
    assert angle_between(seg(0, 0, 1, 0), seg(0, 0, 0, 1), o) == pytest.approx(90.0)
    sixty = seg(0, 0, math.cos(math.radians(60)), math.sin(math.radians(60)))
    assert angle_between(seg(0, 0, 1, 0), sixty, o) == pytest.approx(60.0)
    nearly_flat = angle_between(seg(0, 0, 1, 0), seg(0, 0, -1, 0.0001), o)
    assert nearly_flat == pytest.approx(180.0 - math.degrees(math.atan2(0.0001, 1.0)), abs=1e-9)
    assert nearly_flat == pytest.approx(179.9943, abs=1e-4)


def test_angle_between_accepts_either_endpoint_as_vertex():
    v = Point(3.0, 3.0)
    assert angle_between(seg(13, 3, 3, 3), seg(3, 3, 3, 20), v) == pytest.approx(90.0)


def test_angle_between_requires_shared_vertex():
    with pytest.raises(ValueError):
        angle_between(seg(0, 0, 1, 0), seg(0, 1, 1, 1), Point(0.0, 0.0))


@settings(max_examples=300, deadline=None)
@given(segments, segments)
def test_intersection_point_agrees(s1, s2):
    hit = segments_intersect(s1, s2)
    if hit is not None:
        t1, t2 = hit
        p, q = s1.point_at(t1), s2.point_at(t2)
        assert 0.0 <= t1 <= 1.0 and 0.0 <= t2 <= 1.0
        assert math.hypot(p.x - q.x, p.y - q.y) < 1e-6
        assert segment_distance(s1, s2) == 0.0


@settings(max_examples=300, deadline=None)
@given(segments, segments)
def test_intersection_symmetry(s1, s2):
    a, b = segments_intersect(s1, s2), segments_intersect(s2, s1)
    assert (a is None) == (b is None)
    if a is not None:
        assert a == pytest.approx((b[1], b[0]), abs=1e-9)


def _supercover(s, steps=400):
    ts = np.linspace(0.0, 1.0, steps)
    xs = s.a.x + ts * (s.b.x - s.a.x)
    ys = s.a.y + ts * (s.b.y - s.a.y)
    return set(zip(np.rint(xs).astype(int).tolist(), np.rint(ys).astype(int).tolist()))


def test_crossings_agree_with_pixel_paths():
    """Where a crossing is reported, the dense pixel paths come within one pixel."""
    rng = Xoshiro256(2024)
    crossings = 0
    for _ in range(1000):
        s1, s2 = sample_segment(rng), sample_segment(rng)
        if segments_intersect(s1, s2) is None:
            continue
        crossings += 1
        p1, p2 = _supercover(s1), _supercover(s2)
        assert any(max(abs(x - u), abs(y - v)) <= 1 for x, y in p1 for u, v in p2)
    assert crossings > 50
