"""Line/angle stimuli for the six binary tasks.

A stimulus is first built as exact vector geometry (:class:`StimulusSpec`),
checked by :func:`verify_spec`, and only then rasterized. Figure segments
come first in ``spec.segments``; in the ``*_ln`` tasks the last segment is the
distractor.

Label conventions:

=============  =========================  ==========================
task           label 0                    label 1
=============  =========================  ==========================
ang_crs        angle (20-160 deg)         crossing pair
ang_crs_ln     angle + distractor         crossing pair + distractor
ang_tri_ln     angle + distractor         triangle + distractor
blt_srp        blunt angle (100-160)      sharp angle (20-80)
blt_srp_ln     blunt angle + distractor   sharp angle + distractor
crs_ncrs       crossing pair              non-crossing pair
=============  =========================  ==========================
"""
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GenerationError
from .geometry import (
    CANVAS, HI, LO, MAX_ATTEMPTS, MIN_LENGTH, Point, Segment, in_canvas, line_angle,
    ray_extent, sample_segment, segment_distance, segments_intersect, shared_endpoints,
    vertex_angle,
)

TASKS = ("ang_crs", "ang_crs_ln", "ang_tri_ln", "blt_srp", "blt_srp_ln", "crs_ncrs")
TASK_IDS = {name: i for i, name in enumerate(TASKS)}

ANGLE_RANGE = (20.0, 160.0)
BLUNT_RANGE = (100.0, 160.0)
SHARP_RANGE = (20.0, 80.0)
CROSS_RANGE = (0.2, 0.8)
# two crossing lines meeting at a grazing angle would render as one thick line
MIN_CROSSING_ANGLE = 20.0
# distance kept between segments that must not touch, so anti-aliased
# paths never share a pixel
CLEARANCE = 2.0
DISTRACTOR_TRIES = 50

DARK_BACKGROUND = (0.0, 0.3)
LIGHT_BACKGROUND = (0.7, 1.0)
WHITE_INK = (0.85, 1.0)
BLACK_INK = (0.0, 0.15)

# keep sampled values strictly inside closed ranges despite rounding
_EPS_DEG = 1e-6
_EPS_T = 1e-9
_EPS_LEN = 1e-9


class Polarity(enum.IntEnum):
    WHITE_ON_DARK = 0
    BLACK_ON_LIGHT = 1


@dataclass(frozen=True)
class StimulusSpec:
    task: str
    label: int
    segments: tuple
    polarity: Polarity = Polarity.WHITE_ON_DARK
    metadata: dict = field(default_factory=dict, compare=False)


def _check_task(task):
    if task not in TASK_IDS:
        raise ValueError(f"unknown task {task!r}; expected one of {', '.join(TASKS)}")


def _has_distractor(task):
    return task.endswith("_ln")


def figure_kind(task, label):
    """Which figure a (task, label) stimulus contains."""
    _check_task(task)
    if task in ("ang_crs", "ang_crs_ln"):
        return "angle" if label == 0 else "crossing"
    if task == "ang_tri_ln":
        return "angle" if label == 0 else "triangle"
    if task in ("blt_srp", "blt_srp_ln"):
        return "blunt" if label == 0 else "sharp"
    return "crossing" if label == 0 else "non_crossing"


def expected_segment_count(task, label):
    kind = figure_kind(task, label)
    return (3 if kind == "triangle" else 2) + (1 if _has_distractor(task) else 0)


# --- generation -------------------------------------------------------------

def _ray_end(p, theta, length):
    return Point(p.x + length * math.cos(theta), p.y + length * math.sin(theta))


def _try_angle(rng, lo_deg, hi_deg):
    vertex = Point(rng.uniform(LO, HI), rng.uniform(LO, HI))
    theta1 = rng.angle()
    opening = rng.uniform(lo_deg + _EPS_DEG, hi_deg - _EPS_DEG)
    sign = 1.0 if rng.random() < 0.5 else -1.0
    theta2 = theta1 + sign * math.radians(opening)
    arms = []
    for theta in (theta1, theta2):
        room = ray_extent(vertex, theta) - _EPS_LEN
        if room < MIN_LENGTH + _EPS_LEN:
            return None
        arms.append(Segment(vertex, _ray_end(vertex, theta, rng.uniform(MIN_LENGTH + _EPS_LEN, room))))
    return arms, {"vertex": vertex, "angle": opening}


def _try_crossing(rng):
    s1 = sample_segment(rng)
    t1 = rng.uniform(CROSS_RANGE[0] + _EPS_T, CROSS_RANGE[1] - _EPS_T)
    p = s1.point_at(t1)
    base = math.atan2(s1.b.y - s1.a.y, s1.b.x - s1.a.x)
    theta = base + math.radians(rng.uniform(MIN_CROSSING_ANGLE + _EPS_DEG, 180.0 - MIN_CROSSING_ANGLE - _EPS_DEG))
    t2 = rng.uniform(CROSS_RANGE[0] + _EPS_T, CROSS_RANGE[1] - _EPS_T)
    forward = ray_extent(p, theta) - _EPS_LEN
    backward = ray_extent(p, theta + math.pi) - _EPS_LEN
    longest = min(backward / t2, forward / (1.0 - t2))
    if longest < MIN_LENGTH + _EPS_LEN:
        return None
    length = rng.uniform(MIN_LENGTH + _EPS_LEN, longest)
    s2 = Segment(_ray_end(p, theta + math.pi, t2 * length), _ray_end(p, theta, (1.0 - t2) * length))
    return [s1, s2], {"crossing": (t1, t2)}


def _apart(s, others):
    return all(segment_distance(s, o) >= CLEARANCE for o in others)


def _try_non_crossing(rng):
    s1 = sample_segment(rng)
    s2 = sample_segment(rng)
    if not _apart(s2, [s1]):
        return None
    return [s1, s2], {}


def _try_triangle(rng):
    p, q, r = (Point(rng.uniform(LO, HI), rng.uniform(LO, HI)) for _ in range(3))
    sides = [Segment(p, q), Segment(q, r), Segment(r, p)]
    if min(s.length for s in sides) < MIN_LENGTH:
        return None
    try:
        angles = (vertex_angle(p, q, r), vertex_angle(q, r, p), vertex_angle(r, p, q))
    except ValueError:
        return None
    if not all(ANGLE_RANGE[0] <= a <= ANGLE_RANGE[1] for a in angles):
        return None
    return sides, {"angles": angles}


def gen_spec(task, label, rng, max_attempts=MAX_ATTEMPTS):
    """Draw a random stimulus of the given task and class.

    Every draw (figure or distractor) counts toward ``max_attempts``;
    :class:`GenerationError` is raised once they run out.
    """
    _check_task(task)
    if label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    polarity = Polarity.WHITE_ON_DARK if rng.random() < 0.5 else Polarity.BLACK_ON_LIGHT
    kind = figure_kind(task, label)
    attempts = 0
    while attempts < max_attempts:
        attempts += 1
        if kind == "angle":
            drawn = _try_angle(rng, *ANGLE_RANGE)
        elif kind == "blunt":
            drawn = _try_angle(rng, *BLUNT_RANGE)
        elif kind == "sharp":
            drawn = _try_angle(rng, *SHARP_RANGE)
        elif kind == "crossing":
            drawn = _try_crossing(rng)
        elif kind == "non_crossing":
            drawn = _try_non_crossing(rng)
        else:
            drawn = _try_triangle(rng)
        if drawn is None:
            continue
        segments, meta = drawn
        if not _has_distractor(task):
            return StimulusSpec(task, label, tuple(segments), polarity, meta)
        for _ in range(min(DISTRACTOR_TRIES, max_attempts - attempts + 1)):
            attempts += 1
            d = sample_segment(rng)
            if _apart(d, segments):
                return StimulusSpec(task, label, tuple(segments) + (d,), polarity, meta)
    raise GenerationError(f"{task} label {label}: no valid stimulus after {max_attempts} attempts")


# --- verification -----------------------------------------------------------

def _in_range(value, bounds):
    return bounds[0] <= value <= bounds[1]


def _check_angle(s1, s2, kind, violations):
    shared = shared_endpoints(s1, s2)
    if len(shared) != 1:
        violations.append(f"angle arms share {len(shared)} endpoints, expected exactly 1")
        return
    far1 = s1.b if shared[0] == s1.a else s1.a
    far2 = s2.b if shared[0] == s2.a else s2.a
    angle = vertex_angle(shared[0], far1, far2)
    if kind == "angle":
        if not _in_range(angle, ANGLE_RANGE):
            violations.append(f"angle {angle:.3f} outside 20-160 degrees")
    elif not (_in_range(angle, BLUNT_RANGE) or _in_range(angle, SHARP_RANGE)):
        violations.append("angle outside blunt/sharp ranges")
    elif (kind == "blunt") != _in_range(angle, BLUNT_RANGE):
        violations.append(f"angle {angle:.3f} does not match the {kind} label")


def _check_crossing(s1, s2, violations):
    hit = segments_intersect(s1, s2)
    if hit is None:
        violations.append("crossing pair does not intersect")
        return
    for name, t in zip(("first", "second"), hit):
        if t < CROSS_RANGE[0]:
            violations.append(f"crossing parameter below 0.2 on {name} segment (t={t:.4f})")
        elif t > CROSS_RANGE[1]:
            violations.append(f"crossing parameter above 0.8 on {name} segment (t={t:.4f})")
    if line_angle(s1, s2) < MIN_CROSSING_ANGLE:
        violations.append("crossing angle below 20 degrees")


def _check_triangle(sides, violations):
    a, b, c = sides
    corners = []
    for s, nxt in ((a, b), (b, c), (c, a)):
        shared = shared_endpoints(s, nxt)
        if len(shared) != 1:
            violations.append("triangle sides are not joined end to end")
            return
        corners.append(shared[0])
    p, q, r = corners
    if len({p, q, r}) != 3:
        violations.append("triangle has repeated vertices")
        return
    for v, u, w in ((p, q, r), (q, r, p), (r, p, q)):
        angle = vertex_angle(v, u, w)
        if not _in_range(angle, ANGLE_RANGE):
            violations.append(f"triangle angle {angle:.3f} outside 20-160 degrees")


def verify_spec(spec):
    """Re-check every geometric constraint of a stimulus.

    Returns ``(ok, violations)``; ``violations`` lists a readable message for
    each failed constraint and is empty exactly when ``ok`` is true.
    """
    violations = []
    if spec.task not in TASK_IDS:
        return False, [f"unknown task {spec.task!r}"]
    if spec.label not in (0, 1):
        return False, [f"label {spec.label!r} is not binary"]
    segs = list(spec.segments)
    want = expected_segment_count(spec.task, spec.label)
    if len(segs) != want:
        return False, [f"expected {want} segments, found {len(segs)}"]

    for i, s in enumerate(segs):
        if not (in_canvas(s.a) and in_canvas(s.b)):
            violations.append(f"segment {i} leaves the canvas margin")
        if s.length < MIN_LENGTH:
            violations.append(f"segment {i} shorter than 13 px ({s.length:.3f})")

    kind = figure_kind(spec.task, spec.label)
    if kind in ("angle", "blunt", "sharp"):
        _check_angle(segs[0], segs[1], kind, violations)
        n_fig = 2
    elif kind == "crossing":
        _check_crossing(segs[0], segs[1], violations)
        n_fig = 2
    elif kind == "non_crossing":
        if segments_intersect(segs[0], segs[1]) is not None or segment_distance(segs[0], segs[1]) < CLEARANCE:
            violations.append("non-crossing pair intersects or touches")
        n_fig = 2
    else:
        _check_triangle(segs[:3], violations)
        n_fig = 3

    if _has_distractor(spec.task):
        d = segs[n_fig]
        for i, s in enumerate(segs[:n_fig]):
            if segments_intersect(d, s) is not None:
                violations.append(f"distractor crosses segment {i}")
            elif segment_distance(d, s) < CLEARANCE:
                violations.append(f"distractor within clearance of segment {i}")
    return not violations, violations


# --- rasterization ----------------------------------------------------------

def _plot(cov, x, y, c):
    if 0 <= x < CANVAS and 0 <= y < CANVAS and c > cov[y, x]:
        cov[y, x] = c


def _fpart(v):
    return v - math.floor(v)


def draw_wu(cov, s):
    """Accumulate Xiaolin Wu coverage of segment ``s`` into ``cov`` (max-combined).

    Pixel ``(row=y, col=x)`` is centred on integer coordinates.
    """
    x0, y0, x1, y1 = s.a.x, s.a.y, s.b.x, s.b.y
    steep = abs(y1 - y0) > abs(x1 - x0)
    if steep:
        x0, y0, x1, y1 = y0, x0, y1, x1
    if x0 > x1:
        x0, x1, y0, y1 = x1, x0, y1, y0
    dx = x1 - x0
    gradient = (y1 - y0) / dx if dx != 0 else 1.0

    def put(x, y, c):
        if steep:
            _plot(cov, y, x, c)
        else:
            _plot(cov, x, y, c)

    xend = math.floor(x0 + 0.5)
    yend = y0 + gradient * (xend - x0)
    xgap = 1.0 - _fpart(x0 + 0.5)
    xpx1, ypx = xend, math.floor(yend)
    put(xpx1, ypx, (1.0 - _fpart(yend)) * xgap)
    put(xpx1, ypx + 1, _fpart(yend) * xgap)
    intery = yend + gradient

    xend = math.floor(x1 + 0.5)
    yend = y1 + gradient * (xend - x1)
    xgap = _fpart(x1 + 0.5)
    xpx2, ypx = xend, math.floor(yend)
    put(xpx2, ypx, (1.0 - _fpart(yend)) * xgap)
    put(xpx2, ypx + 1, _fpart(yend) * xgap)

    for x in range(xpx1 + 1, xpx2):
        iy = math.floor(intery)
        f = intery - iy
        put(x, iy, 1.0 - f)
        put(x, iy + 1, f)
        intery += gradient


def render_segments(segments, polarity, rng):
    """Draw segments over random background noise. No geometric checks."""
    if polarity == Polarity.WHITE_ON_DARK:
        bg_lo, bg_hi = DARK_BACKGROUND
        ink = rng.uniform(*WHITE_INK)
    else:
        bg_lo, bg_hi = LIGHT_BACKGROUND
        ink = rng.uniform(*BLACK_INK)
    noise = rng.random_array(CANVAS * CANVAS).reshape(CANVAS, CANVAS)
    background = bg_lo + (bg_hi - bg_lo) * noise
    cov = np.zeros((CANVAS, CANVAS))
    for s in segments:
        draw_wu(cov, s)
    img = background * (1.0 - cov) + ink * cov
    return np.clip(img, 0.0, 1.0)


def rasterize(spec, rng):
    """Render a verified stimulus as a 32x32 float image in [0, 1]."""
    ok, violations = verify_spec(spec)
    if not ok:
        raise ValueError("cannot rasterize an invalid stimulus: " + "; ".join(violations))
    return render_segments(spec.segments, spec.polarity, rng)
