from __future__ import annotations

import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gridtraffic import SimConfig, SimState, build_grid, new_simulation
from gridtraffic.behavior import FixedRatio


@pytest.fixture(scope="session")
def default_network():
    return build_grid()


def make_state(network, behavior=None, **config_kwargs) -> SimState:
    """Fresh simulation state with a quiet default configuration."""
    if behavior is None:
        behavior = FixedRatio(p_co=1.0)
    defaults = dict(p_slow=0.0, p_new=0.0, max_vehicles=20, warmup_steps=0, seed=99)
    defaults.update(config_kwargs)
    return new_simulation(network, SimConfig(behavior=behavior, **defaults))


def place_vehicle(state: SimState, street: int, cell: int, speed: int = 0,
                  driver_type=None, **fields):
    """Force a queued vehicle onto the lattice at a chosen spot (test rig)."""
    vid = state.queue.popleft()
    veh = state.vehicles[vid]
    veh.street = street
    veh.cell = cell
    veh.speed = speed
    if driver_type is not None:
        veh.driver_type = driver_type
    for name, value in fields.items():
        setattr(veh, name, value)
    state.occupancy[street][cell] = vid
    lst = state.street_lists[street]
    index = 0
    while index < len(lst) and state.vehicles[lst[index]].cell < cell:
        index += 1
    lst.insert(index, vid)
    return veh
