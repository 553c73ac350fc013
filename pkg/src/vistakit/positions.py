"""Serialization of position arrays.

A position array is a single string holding one or more positions:

* positions are delimited by ``|``,
* numeric components inside a position are delimited by whitespace,
* an optional ``< n`` prefix declares the position count and an optional
  ``>`` terminates the array,
* the third (Z) component is optional per position,
* commas never appear.

So ``|0 0|`` is one 2-D position and ``< 2 |1 2|3 4|>`` is two with a
verified count.

Component order for WGS84 arrays is configurable because files in the
wild disagree: the field grammar names latitude first, but known sample
data writes longitude first.  Components are stored positionally and
interpreted according to ``component_order`` ("lat_lon" or "lon_lat").
VCS arrays are always ``x y [z]``.
"""

from __future__ import annotations

from .errors import CountMismatch, EmptyArray, MalformedArray
from .model import BoundingShape, GeoPosition, VcsPosition

COMPONENT_ORDERS = ("lat_lon", "lon_lat")


def _position_from_components(frame: str, order: str, comps):
    z = comps[2] if len(comps) == 3 else None
    if frame == "vcs":
        return VcsPosition(x=comps[0], y=comps[1], z=z)
    if order == "lat_lon":
        lat, lon = comps[0], comps[1]
    else:
        lon, lat = comps[0], comps[1]
    try:
        return GeoPosition(lat=lat, lon=lon, elev=z)
    except ValueError as exc:
        raise MalformedArray(str(exc)) from exc


def parse_position_array(text: str, frame: str = "wgs84",
                         component_order: str = "lat_lon") -> tuple:
    """Parse a position-array string into a tuple of positions."""
    if frame not in ("wgs84", "vcs"):
        raise ValueError(f"unknown frame {frame!r}")
    if component_order not in COMPONENT_ORDERS:
        raise ValueError(f"unknown component order {component_order!r}")
    if text is None:
        raise EmptyArray("no position array text")
    s = text.strip()
    if not s:
        raise EmptyArray("position array is empty")
    if "," in s:
        raise MalformedArray("commas are not allowed in position arrays")

    declared = None
    if s.startswith("<"):
        s = s[1:]
    if s.endswith(">"):
        s = s[:-1]
    if "<" in s or ">" in s:
        raise MalformedArray("stray angle bracket inside position array")

    fields = s.split("|")
    head = fields[0].strip()
    if text.strip().startswith("<"):
        if not head:
            raise MalformedArray("count prefix '<' without a count")
        try:
            declared = int(head)
        except ValueError:
            raise MalformedArray(f"count prefix is not an integer: {head!r}")
        if declared < 0:
            raise MalformedArray(f"negative position count: {declared}")
        fields = fields[1:]
    elif head:
        raise MalformedArray(
            f"leading text before first position delimiter: {head!r}"
        )
    else:
        fields = fields[1:]
    if fields and not fields[-1].strip():
        fields = fields[:-1]

    positions = []
    for raw in fields:
        tokens = raw.split()
        if not tokens:
            raise MalformedArray("empty position between delimiters")
        if len(tokens) not in (2, 3):
            raise MalformedArray(
                f"a position needs 2 or 3 components, got {len(tokens)}: {raw!r}"
            )
        comps = []
        for tok in tokens:
            try:
                comps.append(float(tok))
            except ValueError:
                raise MalformedArray(f"non-numeric component {tok!r}")
        positions.append(_position_from_components(frame, component_order, comps))

    if not positions:
        raise EmptyArray("position array holds no positions")
    if declared is not None and declared != len(positions):
        raise CountMismatch(
            f"count prefix says {declared} positions, found {len(positions)}"
        )
    return tuple(positions)


def _components(frame: str, order: str, p) -> list:
    if frame == "vcs":
        comps = [p.x, p.y]
        if p.z is not None:
            comps.append(p.z)
        return comps
    comps = [p.lat, p.lon] if order == "lat_lon" else [p.lon, p.lat]
    if p.elev is not None:
        comps.append(p.elev)
    return comps


def serialize_position_array(positions, frame: str = "wgs84",
                             component_order: str = "lat_lon",
                             count_prefix: bool = False,
                             close_ring: bool = False) -> str:
    """Render positions back to the array string form.

    ``close_ring`` repeats the first position at the end (the style some
    producers use for polygons); ``count_prefix`` emits the ``< n`` form.
    The defaults produce the most compact legal string.
    """
    if component_order not in COMPONENT_ORDERS:
        raise ValueError(f"unknown component order {component_order!r}")
    pts = list(positions)
    if not pts:
        raise EmptyArray("cannot serialize an empty position array")
    if close_ring:
        pts.append(pts[0])

    def comp(c: float) -> str:
        c = float(c)
        # Integral values render bare ("1", not "1.0"); repr keeps every
        # other value lossless.
        if c.is_integer() and abs(c) < 1e16:
            return str(int(c))
        return repr(c)

    body = "|".join(
        " ".join(comp(c) for c in _components(frame, component_order, p))
        for p in pts
    )
    if count_prefix:
        return f"< {len(pts)} |{body}|>"
    return f"|{body}|"


def shape_from_array(text: str, frame: str,
                     component_order: str = "lat_lon") -> BoundingShape:
    """Parse an array string into an open-ring BoundingShape.

    A closed ring (first position repeated last) is accepted and the
    duplicate dropped.
    """
    pts = list(parse_position_array(text, frame=frame,
                                    component_order=component_order))
    if len(pts) >= 2 and pts[0] == pts[-1]:
        pts = pts[:-1]
    return BoundingShape(frame=frame, vertices=tuple(pts))


def shape_to_array(shape: BoundingShape, component_order: str = "lat_lon",
                   count_prefix: bool = False, close_ring: bool = False) -> str:
    return serialize_position_array(
        shape.vertices, frame=shape.frame, component_order=component_order,
        count_prefix=count_prefix, close_ring=close_ring,
    )
