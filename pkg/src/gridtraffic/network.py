"""Street-grid topology: 8 one-way streets, 16 crossings, right-hand priority.

The network is a fixed lattice of 4 horizontal and 4 vertical single-lane
one-way streets. Directions alternate across parallel streets. Every cell
index used by the simulator is a *travel* coordinate: cell 0 is where
vehicles enter a street and cell ``length - 1`` is the last cell before
they leave. Each crossing is one shared physical point referenced by both
of its streets, so a crossing cell on a horizontal street and the matching
cell on the perpendicular street denote the same spot and hold at most one
vehicle between them.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class ConfigurationError(ValueError):
    """Raised for invalid build or run parameters."""


class Orientation(Enum):
    HORIZONTAL = "horizontal"
    VERTICAL = "vertical"


class Direction(Enum):
    EAST = "east"
    WEST = "west"
    NORTH = "north"
    SOUTH = "south"

    @property
    def orientation(self) -> Orientation:
        if self in (Direction.EAST, Direction.WEST):
            return Orientation.HORIZONTAL
        return Orientation.VERTICAL

    @property
    def opposite(self) -> Direction:
        return _OPPOSITE[self]


_OPPOSITE = {
    Direction.EAST: Direction.WEST,
    Direction.WEST: Direction.EAST,
    Direction.NORTH: Direction.SOUTH,
    Direction.SOUTH: Direction.NORTH,
}

# d has priority over _YIELDS_TO[d]: the driver heading d sees a vehicle
# heading _YIELDS_TO[d] on its left, so that vehicle must give way.
# With north up and east right this is the 90-degrees-clockwise neighbor.
_YIELDS_TO = {
    Direction.NORTH: Direction.EAST,
    Direction.EAST: Direction.SOUTH,
    Direction.SOUTH: Direction.WEST,
    Direction.WEST: Direction.NORTH,
}


class RightOfWay(Enum):
    A_HAS_PRIORITY = "a"
    B_HAS_PRIORITY = "b"


def right_of_way(dir_a: Direction, dir_b: Direction) -> RightOfWay:
    """Decide priority between two perpendicular approach directions.

    The vehicle that sees the other on its left has priority (equivalently,
    a vehicle gives way to traffic approaching from its right). Raises
    ``ValueError`` for parallel directions, which never meet.
    """
    if dir_a.orientation is dir_b.orientation:
        raise ValueError(f"no crossing between parallel directions {dir_a} and {dir_b}")
    if _YIELDS_TO[dir_a] is dir_b:
        return RightOfWay.A_HAS_PRIORITY
    return RightOfWay.B_HAS_PRIORITY


@dataclass(frozen=True)
class StreetSpec:
    """One street: id, geometry and the 4 cells where it meets cross streets.

    ``axis_position`` is the physical row (horizontal street) or column
    (vertical street) the street occupies; ``crossing_cells`` are travel
    coordinates, strictly increasing.
    """

    street_id: int
    orientation: Orientation
    direction: Direction
    length: int
    axis_position: int
    crossing_cells: tuple[int, ...]

    def to_physical(self, cell: int) -> tuple[int, int]:
        """Map a travel-coordinate cell to a (row, col) lattice point."""
        if self.direction is Direction.EAST:
            return self.axis_position, cell
        if self.direction is Direction.WEST:
            return self.axis_position, self.length - 1 - cell
        if self.direction is Direction.SOUTH:
            return cell, self.axis_position
        return self.length - 1 - cell, self.axis_position


@dataclass(frozen=True)
class Intersection:
    """A shared lattice point where a horizontal and a vertical street meet."""

    intersection_id: int
    h_street: int
    h_cell: int
    v_street: int
    v_cell: int


@dataclass(frozen=True)
class GridNetwork:
    streets: tuple[StreetSpec, ...]
    intersections: tuple[Intersection, ...]
    # (street_id, travel cell) -> intersection_id for every crossing cell
    cell_to_intersection: dict[tuple[int, int], int]

    @property
    def n_streets(self) -> int:
        return len(self.streets)

    def intersection_at(self, street_id: int, cell: int) -> int | None:
        return self.cell_to_intersection.get((street_id, cell))

    def partner_cell(self, street_id: int, cell: int) -> tuple[int, int] | None:
        """The (street, cell) of the perpendicular street at the same point."""
        inter_id = self.cell_to_intersection.get((street_id, cell))
        if inter_id is None:
            return None
        inter = self.intersections[inter_id]
        if inter.h_street == street_id:
            return inter.v_street, inter.v_cell
        return inter.h_street, inter.h_cell


DEFAULT_STREET_LENGTH = 50
DEFAULT_CROSSING_POSITIONS = (9, 19, 29, 39)
_H_DIRECTIONS = (Direction.EAST, Direction.WEST, Direction.EAST, Direction.WEST)
_V_DIRECTIONS = (Direction.SOUTH, Direction.NORTH, Direction.SOUTH, Direction.NORTH)


def _check_alternating(dirs: tuple[Direction, ...], allowed: tuple[Direction, Direction],
                       label: str) -> None:
    if len(dirs) != 4 or any(d not in allowed for d in dirs):
        raise ConfigurationError(f"{label} directions must be 4 of {allowed}")
    for a, b in zip(dirs, dirs[1:]):
        if a is b:
            raise ConfigurationError(f"{label} directions must alternate, got {dirs}")


def build_grid(
    street_length: int = DEFAULT_STREET_LENGTH,
    crossing_positions: tuple[int, ...] = DEFAULT_CROSSING_POSITIONS,
    h_directions: tuple[Direction, ...] = _H_DIRECTIONS,
    v_directions: tuple[Direction, ...] = _V_DIRECTIONS,
) -> GridNetwork:
    """Build the 8-street, 16-intersection grid.

    ``crossing_positions`` are the 4 physical rows of the horizontal streets
    and, symmetrically, the 4 physical columns of the vertical ones, so the
    same values are the crossing offsets along every street. Streets 0-3 are
    horizontal top to bottom, 4-7 vertical left to right. The direction
    pattern must alternate; the default phase is (east, west, east, west)
    and (south, north, south, north).
    """
    positions = tuple(crossing_positions)
    if len(positions) != 4:
        raise ConfigurationError(f"need exactly 4 crossing positions, got {len(positions)}")
    if any(not 0 <= p < street_length for p in positions):
        raise ConfigurationError(f"crossing positions {positions} out of range 0..{street_length - 1}")
    if any(a >= b for a, b in zip(positions, positions[1:])):
        raise ConfigurationError(f"crossing positions must be strictly increasing, got {positions}")
    _check_alternating(tuple(h_directions), (Direction.EAST, Direction.WEST), "horizontal")
    _check_alternating(tuple(v_directions), (Direction.NORTH, Direction.SOUTH), "vertical")

    def travel_cells(direction: Direction) -> tuple[int, ...]:
        if direction in (Direction.EAST, Direction.SOUTH):
            return positions
        return tuple(sorted(street_length - 1 - p for p in positions))

    streets = []
    for i in range(4):
        streets.append(StreetSpec(i, Orientation.HORIZONTAL, h_directions[i],
                                  street_length, positions[i], travel_cells(h_directions[i])))
    for j in range(4):
        streets.append(StreetSpec(4 + j, Orientation.VERTICAL, v_directions[j],
                                  street_length, positions[j], travel_cells(v_directions[j])))

    def travel_of(street: StreetSpec, physical: int) -> int:
        if street.direction in (Direction.EAST, Direction.SOUTH):
            return physical
        return street.length - 1 - physical

    intersections = []
    cell_map: dict[tuple[int, int], int] = {}
    for i in range(4):
        for j in range(4):
            inter_id = i * 4 + j
            h, v = streets[i], streets[4 + j]
            h_cell = travel_of(h, positions[j])   # column of vertical street j
            v_cell = travel_of(v, positions[i])   # row of horizontal street i
            intersections.append(Intersection(inter_id, h.street_id, h_cell,
                                              v.street_id, v_cell))
            cell_map[(h.street_id, h_cell)] = inter_id
            cell_map[(v.street_id, v_cell)] = inter_id

    return GridNetwork(tuple(streets), tuple(intersections), cell_map)
