"""Planar polygon metrics in the vehicle coordinate system.

Everything here works on simple polygons given as (N, 2) float arrays of
x/y vertices (VCS metres: x forward, y right).  Inputs may also be
vcs-frame BoundingShape values.  Vertices are an open ring.

Sign conventions for clearances: positive is a real gap, zero is touch,
negative is interpenetration depth.  Directional (axis) clearances are
only meaningful while the two bodies overlap when projected onto the
*other* axis; outside that they are reported as +inf.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DegeneratePolygon
from .model import BoundingShape

_EPS = 1e-12


def poly_array(poly) -> np.ndarray:
    """Coerce to an (N, 2) vertex array, rejecting degenerate outlines."""
    if isinstance(poly, BoundingShape):
        if poly.frame != "vcs":
            raise ValueError("geometry works on vcs-frame shapes; project first")
        pts = np.array([(v.x, v.y) for v in poly.vertices], dtype=float)
    else:
        pts = np.asarray(poly, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 3:
        raise DegeneratePolygon(f"need an (N>=3, 2) vertex array, got {pts.shape}")
    if not np.isfinite(pts).all():
        raise DegeneratePolygon("polygon vertices must be finite")
    if len(np.unique(pts, axis=0)) < 3:
        raise DegeneratePolygon("polygon needs at least 3 distinct vertices")
    if abs(shoelace_area(pts)) <= _EPS:
        raise DegeneratePolygon("polygon has zero area")
    return pts


def shoelace_area(pts: np.ndarray) -> float:
    x, y = pts[:, 0], pts[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


def rect(cx: float, cy: float, length: float, width: float,
         yaw_deg: float = 0.0) -> np.ndarray:
    """Rectangle footprint: length along +x, width along +y, then yawed.

    Yaw is clockwise-positive like a heading, i.e. a positive yaw turns
    the +x axis toward +y.
    """
    hl, hw = length / 2.0, width / 2.0
    corners = np.array([(hl, -hw), (hl, hw), (-hl, hw), (-hl, -hw)])
    a = math.radians(yaw_deg)
    # Clockwise rotation in the x-forward/y-right plane.
    rot = np.array([(math.cos(a), -math.sin(a)), (math.sin(a), math.cos(a))])
    return corners @ rot.T + np.array([cx, cy])


def _edges(pts: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return pts, np.roll(pts, -1, axis=0)


def point_in_polygon(point, pts: np.ndarray) -> bool:
    """Boundary-inclusive point-in-polygon test (crossing number)."""
    x, y = float(point[0]), float(point[1])
    a, b = _edges(pts)
    ax, ay, bx, by = a[:, 0], a[:, 1], b[:, 0], b[:, 1]
    # On-boundary check first.
    dx, dy = bx - ax, by - ay
    cross = (x - ax) * dy - (y - ay) * dx
    dot = (x - ax) * dx + (y - ay) * dy
    sq = dx * dx + dy * dy
    on = (np.abs(cross) <= 1e-9 * np.maximum(1.0, np.sqrt(sq))) & \
         (dot >= -1e-9) & (dot <= sq + 1e-9)
    if bool(on.any()):
        return True
    crosses = ((ay > y) != (by > y)) & \
              (x < ax + (y - ay) * dx / np.where(dy == 0, 1.0, dy))
    return bool(np.count_nonzero(crosses) % 2 == 1)


def _segments_intersect(a1, a2, b1, b2) -> np.ndarray:
    """Vectorized inclusive segment intersection.

    a1/a2: (n, 2) edges, b1/b2: (m, 2) edges -> (n, m) bool.
    """
    a1 = a1[:, None, :]
    a2 = a2[:, None, :]
    b1 = b1[None, :, :]
    b2 = b2[None, :, :]

    def orient(p, q, r):
        return (q[..., 0] - p[..., 0]) * (r[..., 1] - p[..., 1]) - \
               (q[..., 1] - p[..., 1]) * (r[..., 0] - p[..., 0])

    d1 = orient(b1, b2, a1)
    d2 = orient(b1, b2, a2)
    d3 = orient(a1, a2, b1)
    d4 = orient(a1, a2, b2)
    proper = ((d1 > 0) != (d2 > 0)) & ((d3 > 0) != (d4 > 0))

    def on_seg(p, q, r):
        # r collinear with pq; is it inside the bounding box of pq?
        return (np.minimum(p[..., 0], q[..., 0]) - _EPS <= r[..., 0]) & \
               (r[..., 0] <= np.maximum(p[..., 0], q[..., 0]) + _EPS) & \
               (np.minimum(p[..., 1], q[..., 1]) - _EPS <= r[..., 1]) & \
               (r[..., 1] <= np.maximum(p[..., 1], q[..., 1]) + _EPS)

    touch = ((d1 == 0) & on_seg(b1, b2, a1)) | ((d2 == 0) & on_seg(b1, b2, a2)) | \
            ((d3 == 0) & on_seg(a1, a2, b1)) | ((d4 == 0) & on_seg(a1, a2, b2))
    return proper | touch


def polygons_intersect(a, b) -> bool:
    """True when the polygons share any point (touching counts)."""
    A, B = poly_array(a), poly_array(b)
    a1, a2 = _edges(A)
    b1, b2 = _edges(B)
    if bool(_segments_intersect(a1, a2, b1, b2).any()):
        return True
    return point_in_polygon(A[0], B) or point_in_polygon(B[0], A)


def _points_to_edges_dist(points: np.ndarray, e1: np.ndarray,
                          e2: np.ndarray) -> float:
    d = e2 - e1
    pa = points[:, None, :] - e1[None, :, :]
    denom = (d * d).sum(axis=-1)
    denom_safe = np.where(denom > 0, denom, 1.0)
    t = np.clip((pa * d[None]).sum(axis=-1) / denom_safe, 0.0, 1.0)
    proj = e1[None] + t[..., None] * d[None]
    diff = points[:, None, :] - proj
    return float(np.sqrt((diff * diff).sum(axis=-1)).min())


def min_separation(a, b) -> float:
    """Smallest Euclidean distance between two polygons; 0 when they meet."""
    A, B = poly_array(a), poly_array(b)
    if polygons_intersect(A, B):
        return 0.0
    b1, b2 = _edges(B)
    a1, a2 = _edges(A)
    return min(_points_to_edges_dist(A, b1, b2), _points_to_edges_dist(B, a1, a2))


def _slice_interval(pts: np.ndarray, axis: int, c: float):
    """Extent of the polygon on the line {coordinate[axis] == c}.

    Returns (lo, hi) of the crossing span or None when the line misses
    the polygon.  Concave outlines are covered by their overall span.
    """
    a, b = _edges(pts)
    pa, pb = a[:, axis], b[:, axis]
    qa, qb = a[:, 1 - axis], b[:, 1 - axis]
    hits = []
    span = (pa - c) * (pb - c) <= 0
    for i in np.nonzero(span)[0]:
        if pa[i] == pb[i]:
            hits.extend((qa[i], qb[i]))
        else:
            t = (c - pa[i]) / (pb[i] - pa[i])
            hits.append(qa[i] + t * (qb[i] - qa[i]))
    if not hits:
        return None
    return min(hits), max(hits)


def _interval_gap(a_lo, a_hi, b_lo, b_hi) -> float:
    if b_lo > a_hi:
        return b_lo - a_hi
    if a_lo > b_hi:
        return a_lo - b_hi
    return -(min(a_hi, b_hi) - max(a_lo, b_lo))


def _crossing_coords(A: np.ndarray, B: np.ndarray, axis: int) -> list:
    """axis-coordinates of boundary intersection points between A and B."""
    out = []
    a1, a2 = _edges(A)
    b1, b2 = _edges(B)
    for i in range(len(a1)):
        p, r = a1[i], a2[i] - a1[i]
        for j in range(len(b1)):
            q, s = b1[j], b2[j] - b1[j]
            denom = r[0] * s[1] - r[1] * s[0]
            if denom == 0:
                continue
            qp = q - p
            t = (qp[0] * s[1] - qp[1] * s[0]) / denom
            u = (qp[0] * r[1] - qp[1] * r[0]) / denom
            if -1e-12 <= t <= 1 + 1e-12 and -1e-12 <= u <= 1 + 1e-12:
                out.append(float(p[axis] + t * r[axis]))
    return out


def _axis_gap(A: np.ndarray, B: np.ndarray, axis: int) -> float:
    """Signed clearance along ``axis`` over the shared window on the
    other axis; +inf when the projections on the other axis are disjoint.
    """
    other = 1 - axis
    a_lo, a_hi = A[:, other].min(), A[:, other].max()
    b_lo, b_hi = B[:, other].min(), B[:, other].max()
    lo, hi = max(a_lo, b_lo), min(a_hi, b_hi)
    if lo > hi:
        return math.inf
    cand = [lo, hi]
    cand.extend(float(v) for v in A[:, other] if lo <= v <= hi)
    cand.extend(float(v) for v in B[:, other] if lo <= v <= hi)
    cand.extend(c for c in _crossing_coords(A, B, other) if lo <= c <= hi)
    best = math.inf
    for c in sorted(set(cand)):
        sa = _slice_interval(A, other, c)
        sb = _slice_interval(B, other, c)
        if sa is None or sb is None:
            continue
        g = _interval_gap(sa[0], sa[1], sb[0], sb[1])
        if g < best:
            best = g
    return float(best)


def _interval_side(A: np.ndarray, B: np.ndarray, axis: int) -> int:
    """+1 when B lies wholly on the positive side of A along ``axis``."""
    if B[:, axis].min() >= A[:, axis].max():
        return 1
    if B[:, axis].max() <= A[:, axis].min():
        return -1
    return 0


@dataclass(frozen=True)
class DirectionalClearance:
    """Axis-decomposed clearance of an entity relative to the VUT.

    ``lateral``/``longitudinal`` follow the sign convention at the top of
    this module.  The side fields say where the entity sits relative to
    the VUT body along that axis: +1 right/ahead, -1 left/behind, 0 when
    the projections straddle each other.
    """

    lateral: float
    longitudinal: float
    lateral_side: int
    longitudinal_side: int


def directional_clearance(vut_poly, entity_poly) -> DirectionalClearance:
    A, B = poly_array(vut_poly), poly_array(entity_poly)
    return DirectionalClearance(
        lateral=_axis_gap(A, B, axis=1),
        longitudinal=_axis_gap(A, B, axis=0),
        lateral_side=_interval_side(A, B, axis=1),
        longitudinal_side=_interval_side(A, B, axis=0),
    )


def first_contact_time(a, vel_a, b, vel_b, horizon: float = 30.0) -> float:
    """Earliest t in [0, horizon] at which the bodies touch when both
    keep their current velocity; +inf when that never happens.

    Velocities are (vx, vy) in the same frame as the vertices.
    """
    A, B = poly_array(a), poly_array(b)
    if polygons_intersect(A, B):
        return 0.0
    w = np.asarray(vel_b, dtype=float) - np.asarray(vel_a, dtype=float)
    if not np.isfinite(w).all():
        raise ValueError("velocities must be finite")

    candidates = []

    def vertex_edge_times(points, edges_from, edges_to, vel):
        # moving point p(t) = p + vel*t against static edges
        for p in points:
            for q1, q2 in zip(edges_from, edges_to):
                d = q2 - q1
                denom = d[0] * vel[1] - d[1] * vel[0]
                num = d[0] * (p[1] - q1[1]) - d[1] * (p[0] - q1[0])
                if denom == 0.0:
                    continue
                t = -num / denom
                if t < -1e-12 or t > horizon:
                    continue
                hit = p + vel * t
                seg_len2 = float(d @ d)
                if seg_len2 == 0.0:
                    continue
                s = float((hit - q1) @ d) / seg_len2
                if -1e-9 <= s <= 1 + 1e-9:
                    candidates.append(max(t, 0.0))

    a1, a2 = _edges(A)
    b1, b2 = _edges(B)
    vertex_edge_times(B, a1, a2, w)
    vertex_edge_times(A, b1, b2, -w)

    # Vertex-on-vertex catches pure sliding along a shared line.
    w2 = float(w @ w)
    if w2 > 0.0:
        for p in B:
            for q in A:
                t = float((q - p) @ w) / w2
                if -1e-12 <= t <= horizon and \
                        float(np.hypot(*(p + w * t - q))) <= 1e-9:
                    candidates.append(max(t, 0.0))

    return float(min(candidates)) if candidates else math.inf


def clip_to_rect(pts: np.ndarray, xmin: float, xmax: float,
                 ymin: float, ymax: float) -> np.ndarray:
    """Sutherland-Hodgman clip of a polygon to an axis-aligned rectangle."""
    def clip_half(poly, inside, intersect):
        out = []
        n = len(poly)
        for i in range(n):
            cur, nxt = poly[i], poly[(i + 1) % n]
            cin, nin = inside(cur), inside(nxt)
            if cin:
                out.append(cur)
                if not nin:
                    out.append(intersect(cur, nxt))
            elif nin:
                out.append(intersect(cur, nxt))
        return out

    def x_cut(c, p, q, bound):
        t = (bound - p[0]) / (q[0] - p[0])
        return np.array([bound, p[1] + t * (q[1] - p[1])])

    def y_cut(c, p, q, bound):
        t = (bound - p[1]) / (q[1] - p[1])
        return np.array([p[0] + t * (q[0] - p[0]), bound])

    poly = [np.asarray(p, dtype=float) for p in pts]
    for inside, cut in (
        (lambda p: p[0] >= xmin, lambda p, q: x_cut(None, p, q, xmin)),
        (lambda p: p[0] <= xmax, lambda p, q: x_cut(None, p, q, xmax)),
        (lambda p: p[1] >= ymin, lambda p, q: y_cut(None, p, q, ymin)),
        (lambda p: p[1] <= ymax, lambda p, q: y_cut(None, p, q, ymax)),
    ):
        if not poly:
            break
        poly = clip_half(poly, inside, cut)
    return np.array(poly) if poly else np.empty((0, 2))


def rect_incursion(bounds: tuple, entity_poly) -> tuple[bool, float]:
    """Whether a polygon enters an axis-aligned rectangle, and how deep.

    ``bounds`` is (xmin, xmax, ymin, ymax).  Depth is the largest
    distance any intruding point would have to move to exit the
    rectangle; touching the boundary counts as incursion with depth 0.
    """
    xmin, xmax, ymin, ymax = bounds
    if xmin > xmax or ymin > ymax:
        raise ValueError("empty zone rectangle")
    P = poly_array(entity_poly)
    if len(clip_to_rect(P, xmin, xmax, ymin, ymax)) == 0:
        return False, 0.0

    # Depth is the largest erosion of the rectangle that still touches
    # the polygon; the point attaining it need not be a clip vertex, so
    # bisect on the erosion amount instead.
    def reaches(t: float) -> bool:
        if xmin + t > xmax - t or ymin + t > ymax - t:
            return False
        return len(clip_to_rect(P, xmin + t, xmax - t,
                                ymin + t, ymax - t)) > 0

    lo, hi = 0.0, min(xmax - xmin, ymax - ymin) / 2.0
    if reaches(hi):
        return True, hi
    for _ in range(60):
        mid = (lo + hi) / 2.0
        if reaches(mid):
            lo = mid
        else:
            hi = mid
    return True, lo
