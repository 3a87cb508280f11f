"""ASCII rendering of the lattice, north up and west left.

One character per physical cell: ``.`` empty street cell, ``+`` empty
crossing, ``o`` cooperator, ``x`` defector, space off-street. Identical
states render to identical text.
"""

from __future__ import annotations

from .behavior import DriverType
from .core import SimState

EMPTY_CELL = "."
CROSSING = "+"
CO_GLYPH = "o"
DE_GLYPH = "x"
BACKGROUND = " "


def render(state: SimState) -> str:
    length = state.network.streets[0].length
    canvas = [[BACKGROUND] * length for _ in range(length)]
    for street in state.network.streets:
        crossings = set(street.crossing_cells)
        for cell in range(street.length):
            row, col = street.to_physical(cell)
            canvas[row][col] = CROSSING if cell in crossings else EMPTY_CELL
    for veh in state.on_lattice():
        street = state.network.streets[veh.street]
        row, col = street.to_physical(veh.cell)
        canvas[row][col] = CO_GLYPH if veh.driver_type is DriverType.CO else DE_GLYPH
    return "\n".join("".join(row) for row in canvas) + "\n"
