"""Position-array grammar round trips and failure modes."""

import pytest

from vistakit.errors import (
    CountMismatch,
    EmptyArray,
    MalformedArray,
)
from vistakit.model import BoundingShape, GeoPosition, VcsPosition
from vistakit.positions import (
    parse_position_array,
    serialize_position_array,
    shape_from_array,
    shape_to_array,
)

RING = ("< 5 | 103.6957499292194 1.354088453458461 | 103.6956478 1.3540848 | "
        "103.6956508073799 1.354060261353194 | "
        "103.6957503367588 1.354064076671374 | "
        "103.6957499292194 1.354088453458461 >")


def test_single_integral_position_serializes_bare():
    assert serialize_position_array([VcsPosition(1.0, 2.0)],
                                    frame="vcs") == "|1 2|"
    assert serialize_position_array([VcsPosition(0.0, 0.0)],
                                    frame="vcs") == "|0 0|"


def test_fractional_components_keep_full_repr():
    text = serialize_position_array([VcsPosition(1.5, -2.25)], frame="vcs")
    assert text == "|1.5 -2.25|"
    pts = parse_position_array(text, frame="vcs")
    assert pts == (VcsPosition(1.5, -2.25),)


def test_parse_tolerates_loose_whitespace():
    pts = parse_position_array("  |  1   2 |   3 4  |  ", frame="vcs")
    assert pts == (VcsPosition(1.0, 2.0), VcsPosition(3.0, 4.0))


def test_count_prefix_and_terminator():
    pts = parse_position_array("< 2 |1 2| 3 4 |>", frame="vcs")
    assert len(pts) == 2
    pts = parse_position_array("|1 2|3 4|>", frame="vcs")
    assert len(pts) == 2


def test_count_mismatch_rejected():
    with pytest.raises(CountMismatch):
        parse_position_array("< 3 |1 2|3 4|", frame="vcs")


def test_empty_array_rejected():
    with pytest.raises(EmptyArray):
        parse_position_array("", frame="vcs")
    with pytest.raises(EmptyArray):
        parse_position_array("   ", frame="vcs")
    # A delimiter pair with nothing inside is a grammar error, not an
    # absent value.
    with pytest.raises(MalformedArray):
        parse_position_array("||", frame="vcs")


def test_commas_are_not_separators():
    with pytest.raises(MalformedArray):
        parse_position_array("|1, 2|", frame="vcs")


def test_malformed_segments_rejected():
    with pytest.raises(MalformedArray):
        parse_position_array("|1|", frame="vcs")
    with pytest.raises(MalformedArray):
        parse_position_array("|1 2 3 4|", frame="vcs")
    with pytest.raises(MalformedArray):
        parse_position_array("|a b|", frame="vcs")


def test_three_components_mean_elevation():
    pts = parse_position_array("|1.354 103.696 12.5|", frame="wgs84")
    assert pts == (GeoPosition(1.354, 103.696, 12.5),)


def test_component_order_switch():
    latlon = parse_position_array("|1.354 103.696|", frame="wgs84")
    lonlat = parse_position_array("|103.696 1.354|", frame="wgs84",
                                  component_order="lon_lat")
    assert latlon == lonlat
    assert latlon[0].lat == 1.354


def test_lon_first_ring_example():
    pts = parse_position_array(RING, frame="wgs84", component_order="lon_lat")
    assert len(pts) == 5
    assert pts[0] == pts[-1]
    assert pts[0].lat == pytest.approx(1.354088453458461, abs=0.0)
    assert pts[0].lon == pytest.approx(103.6957499292194, abs=0.0)

    text = serialize_position_array(pts, frame="wgs84",
                                    component_order="lon_lat",
                                    count_prefix=True)
    again = parse_position_array(text, frame="wgs84",
                                 component_order="lon_lat")
    assert again == pts
    assert text.startswith("< 5 |")
    assert text.endswith("|>")


def test_shape_round_trip_drops_duplicate_ring_vertex():
    shape = shape_from_array(RING, frame="wgs84", component_order="lon_lat")
    assert isinstance(shape, BoundingShape)
    assert len(shape.vertices) == 4
    text = shape_to_array(shape, component_order="lon_lat",
                          count_prefix=True, close_ring=True)
    assert shape_from_array(text, frame="wgs84",
                            component_order="lon_lat") == shape


def test_random_round_trips(rng):
    for _ in range(200):
        n = int(rng.integers(1, 9))
        pts = tuple(
            VcsPosition(float(rng.normal(scale=50)),
                        float(rng.normal(scale=50)))
            for _ in range(n)
        )
        prefix = bool(rng.random() < 0.5)
        text = serialize_position_array(pts, frame="vcs",
                                        count_prefix=prefix)
        assert parse_position_array(text, frame="vcs") == pts
