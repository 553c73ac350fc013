"""Per-step clearance metrics between the VUT and environment entities.

Every metric is evaluated in the VUT's vehicle coordinate system at each
step where the entity has a record: the entity outline is projected into
the VCS, then measured against the vehicle footprint.  Entities without a
logged outline get a default footprint for their type (noted on the
series).

The exclusion zone is the footprint's bounding box dilated by the zone
extents; an incursion is any entity point inside it, and the depth is how
far the deepest point would have to move to leave again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry
from .errors import DegeneratePolygon, UnknownEntity
from .frames import LocalFrame
from .model import (
    ActorState,
    GeoPosition,
    ObstacleState,
    Trace,
    VehicleProfile,
)

NTD_HORIZON = 30.0

# Fallback footprints (length, width) in metres per actor type.
DEFAULT_FOOTPRINTS = {
    "vru_pedestrian": (0.5, 0.5),
    "vru_cyclist": (1.8, 0.6),
    "vru_pmd": (1.2, 0.6),
    "tsv": (4.4, 1.8),
}
FALLBACK_FOOTPRINT = (4.4, 1.8)


@dataclass(frozen=True)
class ExclusionZone:
    """Zone extents beyond the vehicle footprint, metres."""

    lateral: float = 0.0
    front: float = 0.0
    rear: float = 0.0

    def __post_init__(self):
        for name in ("lateral", "front", "rear"):
            if getattr(self, name) < 0:
                raise ValueError(f"zone extent {name} must be >= 0")

    def bounds(self, footprint) -> tuple:
        fp = geometry.poly_array(footprint)
        xs, ys = fp[:, 0], fp[:, 1]
        return (float(xs.min()) - self.rear, float(xs.max()) + self.front,
                float(ys.min()) - self.lateral, float(ys.max()) + self.lateral)


def zone_incursion(zone: ExclusionZone, vut_footprint,
                   entity_poly) -> tuple[bool, float]:
    """Does the entity outline enter the zone around the footprint?"""
    return geometry.rect_incursion(zone.bounds(vut_footprint), entity_poly)


@dataclass(frozen=True)
class ClearanceSample:
    """All clearance metrics for one entity at one step.

    ``lateral``/``longitudinal`` are the axis gaps (+inf when the bodies
    do not overlap on the orthogonal axis, negative when they
    interpenetrate); the side fields locate the entity (+1 right/ahead,
    -1 left/behind, 0 straddling).  The closing speeds are the velocity
    components of each party toward the other, used for attribution.
    """

    step: int
    time: float
    entity_id: str
    lateral: float
    longitudinal: float
    euclidean_min: float
    ntd: float
    zone_hit: bool
    zone_depth: float
    lateral_side: int
    longitudinal_side: int
    vut_closing: float
    entity_closing: float


@dataclass(frozen=True)
class ClearanceSeries:
    entity_id: str
    samples: tuple
    notes: tuple

    def min_lateral(self) -> float:
        vals = [s.lateral for s in self.samples if math.isfinite(s.lateral)]
        return min(vals) if vals else math.inf

    def min_longitudinal(self) -> float:
        vals = [s.longitudinal for s in self.samples
                if math.isfinite(s.longitudinal)]
        return min(vals) if vals else math.inf

    def min_euclidean(self) -> float:
        vals = [s.euclidean_min for s in self.samples]
        return min(vals) if vals else math.inf


def _heading_basis(heading_deg: float) -> tuple[float, float]:
    h = math.radians(heading_deg)
    return math.sin(h), math.cos(h)


def _enu_to_vcs(e: float, n: float, vut_heading: float) -> tuple[float, float]:
    sh, ch = _heading_basis(vut_heading)
    return e * sh + n * ch, e * ch - n * sh


def _geo_ring_to_vcs(vertices, vut, frame: LocalFrame) -> np.ndarray:
    ox, oy = frame.to_local(vut.pos)
    out = []
    for v in vertices:
        ex, ny = frame.to_local(v)
        out.append(_enu_to_vcs(ex - ox, ny - oy, vut.heading))
    return np.array(out)


def _actor_velocity_vcs(rec: ActorState, vut_heading: float):
    """Actor velocity expressed in the VUT's VCS, or None if unknowable."""
    if rec.heading is None:
        total = math.hypot(rec.vel_lat, rec.vel_long)
        if rec.speed == 0.0 and total == 0.0:
            return np.zeros(2)
        return None
    psi = math.radians(rec.heading - vut_heading)
    fwd = np.array([math.cos(psi), math.sin(psi)])
    right = np.array([-math.sin(psi), math.cos(psi)])
    return rec.vel_long * fwd + rec.vel_lat * right


def _entity_poly_vcs(rec, vut, frame: LocalFrame, notes: list):
    """Entity outline in the VCS for one step, with default substitution."""
    if isinstance(rec, ObstacleState):
        shape = rec.poly_true
        if shape is not None:
            try:
                return _geo_ring_to_vcs(shape.vertices, vut, frame)
            except DegeneratePolygon:
                pass
        notes.append(
            f"{rec.obstacle_id}: unusable outline at step {rec.step}"
        )
        return None

    if rec.bbox_true is not None:
        try:
            if rec.bbox_true.frame == "wgs84":
                return _geo_ring_to_vcs(rec.bbox_true.vertices, vut, frame)
            pts = np.array([(v.x, v.y) for v in rec.bbox_true.vertices])
            return geometry.poly_array(pts)
        except DegeneratePolygon:
            notes.append(
                f"{rec.actor_id}: degenerate outline at step {rec.step}, "
                "default footprint used"
            )

    length, width = DEFAULT_FOOTPRINTS.get(rec.actor_type, FALLBACK_FOOTPRINT)
    if rec.bbox_true is None:
        note = f"{rec.actor_id}: no outline logged, default footprint used"
        if note not in notes:
            notes.append(note)
    if isinstance(rec.pos, GeoPosition):
        ox, oy = frame.to_local(vut.pos)
        ex, ny = frame.to_local(rec.pos)
        cx, cy = _enu_to_vcs(ex - ox, ny - oy, vut.heading)
    else:
        cx, cy = rec.pos.x, rec.pos.y
    yaw_rel = 0.0
    if rec.heading is not None:
        yaw_rel = rec.heading - vut.heading
    return geometry.rect(cx, cy, length, width, yaw_deg=yaw_rel)


def clearance_series(trace: Trace, entity_id: str,
                     profile: VehicleProfile | None = None,
                     zone: ExclusionZone | None = None,
                     horizon: float = NTD_HORIZON) -> ClearanceSeries:
    """Clearance metrics against one entity for every step it appears in."""
    profile = profile or VehicleProfile()
    zone = zone or ExclusionZone()
    if entity_id in trace.actors:
        records = trace.actors[entity_id]
    elif entity_id in trace.obstacles:
        records = trace.obstacles[entity_id]
    else:
        raise UnknownEntity(f"no actor or obstacle with id {entity_id!r}")

    vut_by_step = {r.step: r for r in trace.vut}
    footprint = geometry.poly_array(profile.footprint)
    samples = []
    notes: list = []
    velocity_note_emitted = False
    for rec in records:
        vut = vut_by_step[rec.step]
        frame = LocalFrame.at(vut.pos)
        poly = _entity_poly_vcs(rec, vut, frame, notes)
        if poly is None:
            continue
        direct = geometry.directional_clearance(footprint, poly)
        sep = geometry.min_separation(footprint, poly)

        if isinstance(rec, ActorState):
            vel = _actor_velocity_vcs(rec, vut.heading)
            if vel is None:
                if not velocity_note_emitted:
                    notes.append(
                        f"{entity_id}: moving without a logged heading; "
                        "velocity treated as unknown"
                    )
                    velocity_note_emitted = True
                vel = np.zeros(2)
        else:
            vel = np.zeros(2)

        vut_vel = np.array([vut.speed, 0.0])
        ntd = geometry.first_contact_time(footprint, vut_vel, poly, vel,
                                          horizon=horizon)
        hit, depth = zone_incursion(zone, footprint, poly)

        centroid = poly.mean(axis=0)
        dist = float(np.hypot(*centroid))
        if dist > 1e-9:
            u = centroid / dist
            vut_closing = float(vut_vel @ u)
            entity_closing = float(vel @ -u)
        else:
            vut_closing = entity_closing = 0.0

        samples.append(ClearanceSample(
            step=rec.step,
            time=rec.time,
            entity_id=entity_id,
            lateral=direct.lateral,
            longitudinal=direct.longitudinal,
            euclidean_min=sep,
            ntd=ntd,
            zone_hit=hit,
            zone_depth=depth,
            lateral_side=direct.lateral_side,
            longitudinal_side=direct.longitudinal_side,
            vut_closing=vut_closing,
            entity_closing=entity_closing,
        ))
    return ClearanceSeries(entity_id=entity_id, samples=tuple(samples),
                           notes=tuple(notes))


def all_clearance_series(trace: Trace, profile: VehicleProfile | None = None,
                         zone: ExclusionZone | None = None,
                         include_fixed_infrastructure: bool = False) -> list:
    """Clearance series for every actor and every portable obstacle."""
    from .model import is_fixed_infrastructure

    out = []
    for aid in trace.actors:
        out.append(clearance_series(trace, aid, profile=profile, zone=zone))
    for oid, recs in trace.obstacles.items():
        if not include_fixed_infrastructure and recs and \
                is_fixed_infrastructure(recs[0].obst_type):
            continue
        out.append(clearance_series(trace, oid, profile=profile, zone=zone))
    return out


def _fmt_cell(v) -> str:
    if isinstance(v, float):
        if math.isinf(v):
            return "inf"
        return repr(v)
    return str(v)


SERIES_COLUMNS = ("step", "time", "entity_id", "lateral", "longitudinal",
                  "euclidean_min", "ntd")


def series_rows(series_list) -> list:
    """Plot-ready rows (header first) for one or more clearance series."""
    rows = [list(SERIES_COLUMNS)]
    for series in series_list:
        for s in series.samples:
            rows.append([
                _fmt_cell(s.step), _fmt_cell(s.time), s.entity_id,
                _fmt_cell(s.lateral), _fmt_cell(s.longitudinal),
                _fmt_cell(s.euclidean_min), _fmt_cell(s.ntd),
            ])
    return rows
