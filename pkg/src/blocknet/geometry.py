"""Exact 2-D segment geometry on the 32x32 canvas."""
import math
from typing import NamedTuple, Optional, Tuple

from .errors import GenerationError

CANVAS = 32
LO, HI = 1.0, 30.0  # endpoints keep a 1 px margin from the border
MIN_LENGTH = 13.0
MAX_ATTEMPTS = 10_000
VERTEX_TOL = 1e-9
_PARALLEL_EPS = 1e-12


class Point(NamedTuple):
    x: float
    y: float


class Segment(NamedTuple):
    a: Point
    b: Point

    @property
    def length(self):
        return math.hypot(self.b.x - self.a.x, self.b.y - self.a.y)

    def point_at(self, t):
        return Point(self.a.x + t * (self.b.x - self.a.x), self.a.y + t * (self.b.y - self.a.y))


def seg(x0, y0, x1, y1):
    return Segment(Point(float(x0), float(y0)), Point(float(x1), float(y1)))


def in_canvas(p, lo=LO, hi=HI):
    return lo <= p.x <= hi and lo <= p.y <= hi


def max_chord(lo=LO, hi=HI):
    return math.sqrt(2.0) * (hi - lo)


def ray_extent(p, theta, lo=LO, hi=HI):
    """Distance from ``p`` along direction ``theta`` to the edge of the box."""
    dx, dy = math.cos(theta), math.sin(theta)
    ext = math.inf
    if dx > 1e-15:
        ext = min(ext, (hi - p.x) / dx)
    elif dx < -1e-15:
        ext = min(ext, (lo - p.x) / dx)
    if dy > 1e-15:
        ext = min(ext, (hi - p.y) / dy)
    elif dy < -1e-15:
        ext = min(ext, (lo - p.y) / dy)
    return max(ext, 0.0)


def sample_segment(rng, length_min=MIN_LENGTH, region=(LO, HI), max_attempts=MAX_ATTEMPTS):
    """Draw a segment with both endpoints in ``region`` and length >= ``length_min``.

    The first endpoint is uniform in the square, the direction uniform, and
    the length uniform between ``length_min`` and the room left along that
    direction.
    """
    lo, hi = region
    if length_min > max_chord(lo, hi):
        raise GenerationError(
            f"length_min={length_min} exceeds the region's longest chord {max_chord(lo, hi):.1f}")
    for _ in range(max_attempts):
        a = Point(rng.uniform(lo, hi), rng.uniform(lo, hi))
        theta = rng.angle()
        room = ray_extent(a, theta, lo, hi)
        if room < length_min:
            continue
        length = rng.uniform(length_min, room)
        b = Point(a.x + length * math.cos(theta), a.y + length * math.sin(theta))
        b = Point(min(max(b.x, lo), hi), min(max(b.y, lo), hi))
        s = Segment(a, b)
        if s.length >= length_min:
            return s
    raise GenerationError(f"no segment of length >= {length_min} after {max_attempts} attempts")


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def segments_intersect(s1, s2) -> Optional[Tuple[float, float]]:
    """Intersection parameters ``(t1, t2)`` of two segments, or None.

    ``s1.point_at(t1) == s2.point_at(t2)``. Touching endpoints count as an
    intersection. Parallel segments give None, including collinear overlaps;
    use :func:`collinear_overlap` to tell those apart.
    """
    rx, ry = s1.b.x - s1.a.x, s1.b.y - s1.a.y
    sx, sy = s2.b.x - s2.a.x, s2.b.y - s2.a.y
    qx, qy = s2.a.x - s1.a.x, s2.a.y - s1.a.y
    denom = _cross(rx, ry, sx, sy)
    if abs(denom) <= _PARALLEL_EPS * max(1.0, math.hypot(rx, ry) * math.hypot(sx, sy)):
        return None
    t1 = _cross(qx, qy, sx, sy) / denom
    t2 = _cross(qx, qy, rx, ry) / denom
    if 0.0 <= t1 <= 1.0 and 0.0 <= t2 <= 1.0:
        return t1, t2
    return None


def collinear_overlap(s1, s2, tol=1e-9):
    """True when the segments lie on one line and share more than a point."""
    rx, ry = s1.b.x - s1.a.x, s1.b.y - s1.a.y
    sx, sy = s2.b.x - s2.a.x, s2.b.y - s2.a.y
    qx, qy = s2.a.x - s1.a.x, s2.a.y - s1.a.y
    rr = rx * rx + ry * ry
    if rr == 0.0:
        return False
    scale = math.sqrt(rr)
    if abs(_cross(rx, ry, sx, sy)) > tol * scale * max(1.0, math.hypot(sx, sy)):
        return False
    if abs(_cross(qx, qy, rx, ry)) > tol * scale:
        return False
    u0 = (qx * rx + qy * ry) / rr
    u1 = u0 + (sx * rx + sy * ry) / rr
    lo, hi = min(u0, u1), max(u0, u1)
    return min(hi, 1.0) - max(lo, 0.0) > tol


def point_segment_distance(p, s):
    dx, dy = s.b.x - s.a.x, s.b.y - s.a.y
    dd = dx * dx + dy * dy
    if dd == 0.0:
        return math.hypot(p.x - s.a.x, p.y - s.a.y)
    t = ((p.x - s.a.x) * dx + (p.y - s.a.y) * dy) / dd
    t = min(1.0, max(0.0, t))
    return math.hypot(p.x - (s.a.x + t * dx), p.y - (s.a.y + t * dy))


def segment_distance(s1, s2):
    """Minimum Euclidean distance between two segments (0 when they meet)."""
    if segments_intersect(s1, s2) is not None or collinear_overlap(s1, s2):
        return 0.0
    return min(
        point_segment_distance(s1.a, s2),
        point_segment_distance(s1.b, s2),
        point_segment_distance(s2.a, s1),
        point_segment_distance(s2.b, s1),
    )


def _same_point(p, q, tol=VERTEX_TOL):
    return abs(p.x - q.x) <= tol and abs(p.y - q.y) <= tol


def _far_end(s, vertex):
    if _same_point(s.a, vertex):
        return s.b
    if _same_point(s.b, vertex):
        return s.a
    return None


def angle_between(s1, s2, shared_vertex):
    """Interior angle in degrees between two segments meeting at ``shared_vertex``."""
    e1 = _far_end(s1, shared_vertex)
    e2 = _far_end(s2, shared_vertex)
    if e1 is None or e2 is None:
        raise ValueError("both segments must have an endpoint at the shared vertex")
    return vertex_angle(shared_vertex, e1, e2)


def vertex_angle(vertex, p, q):
    ux, uy = p.x - vertex.x, p.y - vertex.y
    vx, vy = q.x - vertex.x, q.y - vertex.y
    nu, nv = math.hypot(ux, uy), math.hypot(vx, vy)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("degenerate arm of zero length")
    c = (ux * vx + uy * vy) / (nu * nv)
    return math.degrees(math.acos(min(1.0, max(-1.0, c))))


def shared_endpoints(s1, s2):
    """Endpoints common to both segments (within the vertex tolerance)."""
    return [p for p in (s1.a, s1.b) if _same_point(p, s2.a) or _same_point(p, s2.b)]


def line_angle(s1, s2):
    """Angle in [0, 90] between the lines carrying two segments."""
    a = vertex_angle(Point(0.0, 0.0),
                     Point(s1.b.x - s1.a.x, s1.b.y - s1.a.y),
                     Point(s2.b.x - s2.a.x, s2.b.y - s2.a.y))
    return min(a, 180.0 - a)
