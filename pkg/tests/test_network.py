from __future__ import annotations

import itertools

import pytest

from gridtraffic.network import (
    ConfigurationError,
    Direction,
    Orientation,
    RightOfWay,
    build_grid,
    right_of_way,
)
from oracles import priority_by_geometry

PERPENDICULAR_PAIRS = [
    (a, b)
    for a, b in itertools.permutations(Direction, 2)
    if a.orientation is not b.orientation
]


def test_default_grid_shape():
    net = build_grid()
    assert len(net.streets) == 8
    assert len(net.intersections) == 16
    assert all(s.length == 50 for s in net.streets)
    assert sum(len(s.crossing_cells) for s in net.streets) == 32
    for street in net.streets:
        cells = street.crossing_cells
        assert len(cells) == 4
        assert all(0 <= c < street.length for c in cells)
        assert all(a < b for a, b in zip(cells, cells[1:]))


def test_direction_pattern_alternates():
    net = build_grid()
    h_dirs = [s.direction for s in net.streets[:4]]
    v_dirs = [s.direction for s in net.streets[4:]]
    assert h_dirs == [Direction.EAST, Direction.WEST, Direction.EAST, Direction.WEST]
    assert v_dirs == [Direction.SOUTH, Direction.NORTH, Direction.SOUTH, Direction.NORTH]
    assert all(s.orientation is Orientation.HORIZONTAL for s in net.streets[:4])
    assert all(s.orientation is Orientation.VERTICAL for s in net.streets[4:])


def test_intersections_reference_one_physical_point():
    net = build_grid()
    for inter in net.intersections:
        h = net.streets[inter.h_street]
        v = net.streets[inter.v_street]
        assert h.to_physical(inter.h_cell) == v.to_physical(inter.v_cell)


def test_every_perpendicular_street_pair_meets_once():
    net = build_grid()
    pairs = {(i.h_street, i.v_street) for i in net.intersections}
    assert pairs == {(h, v) for h in range(4) for v in range(4, 8)}


def test_cell_map_covers_all_crossings():
    net = build_grid()
    assert len(net.cell_to_intersection) == 32
    for street in net.streets:
        for cell in street.crossing_cells:
            assert net.intersection_at(street.street_id, cell) is not None
        assert net.intersection_at(street.street_id, 0) is None or 0 in street.crossing_cells


def test_partner_cell_is_an_involution():
    net = build_grid()
    for street in net.streets:
        for cell in street.crossing_cells:
            partner = net.partner_cell(street.street_id, cell)
            assert partner is not None
            assert net.partner_cell(*partner) == (street.street_id, cell)
    assert net.partner_cell(0, 0) is None


def test_degenerate_grid_every_cell_is_a_crossing():
    net = build_grid(4, (0, 1, 2, 3))
    for street in net.streets:
        assert street.crossing_cells == (0, 1, 2, 3)
    assert len(net.intersections) == 16


def test_build_grid_is_pure():
    assert build_grid() == build_grid()
    assert build_grid(30, (1, 5, 9, 20)) == build_grid(30, (1, 5, 9, 20))


@pytest.mark.parametrize("positions", [
    (39, 9, 19, 29),      # not increasing
    (9, 19, 29, 50),      # out of range
    (9, 19, 29),          # too few
    (9, 9, 19, 29),       # duplicate
])
def test_build_grid_rejects_bad_positions(positions):
    with pytest.raises(ConfigurationError):
        build_grid(50, positions)


def test_build_grid_rejects_non_alternating_directions():
    with pytest.raises(ConfigurationError):
        build_grid(h_directions=(Direction.EAST, Direction.EAST,
                                 Direction.WEST, Direction.WEST))
    with pytest.raises(ConfigurationError):
        build_grid(v_directions=(Direction.NORTH, Direction.EAST,
                                 Direction.SOUTH, Direction.WEST))


def test_right_of_way_matches_plane_geometry():
    for dir_a, dir_b in PERPENDICULAR_PAIRS:
        expected = priority_by_geometry(dir_a.value, dir_b.value)
        got = right_of_way(dir_a, dir_b)
        assert (got is RightOfWay.A_HAS_PRIORITY) == (expected == "a"), (dir_a, dir_b)


def test_right_of_way_north_over_east():
    # the northbound driver sees the eastbound one on its left
    assert right_of_way(Direction.NORTH, Direction.EAST) is RightOfWay.A_HAS_PRIORITY
    assert right_of_way(Direction.EAST, Direction.NORTH) is RightOfWay.B_HAS_PRIORITY


def test_right_of_way_total_and_antisymmetric():
    assert len(PERPENDICULAR_PAIRS) == 8
    for dir_a, dir_b in PERPENDICULAR_PAIRS:
        forward = right_of_way(dir_a, dir_b)
        backward = right_of_way(dir_b, dir_a)
        assert {forward, backward} == {RightOfWay.A_HAS_PRIORITY,
                                       RightOfWay.B_HAS_PRIORITY}
        assert (forward is RightOfWay.A_HAS_PRIORITY) == (
            backward is RightOfWay.B_HAS_PRIORITY)


@pytest.mark.parametrize("pair", [
    (Direction.EAST, Direction.WEST),
    (Direction.NORTH, Direction.SOUTH),
    (Direction.EAST, Direction.EAST),
])
def test_right_of_way_rejects_parallel(pair):
    with pytest.raises(ValueError):
        right_of_way(*pair)
