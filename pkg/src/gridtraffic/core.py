"""Mutable simulation state: vehicles, entry queue, RNG, and lifecycle.

The vehicle population is fixed at ``max_vehicles``: all drivers start in a
FIFO queue, enter the lattice at street entry cells, drive to the far end,
and are recycled back into the queue. What a driver keeps across recycling
depends on the behavior model (fixed-ratio drivers are redrawn, imitators
keep their memory, impatient drivers calm down to CO).

One cell is roughly a car length plus headroom (the classic 7.5 m
convention); nothing in the code depends on the physical scale.
"""

from __future__ import annotations

import random
from collections import deque
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterator

from .behavior import (
    BehaviorModel,
    DriverType,
    FixedRatio,
    Imitation,
    Impatience,
    assign_type_fixed,
)
from .games import PayoffTable
from .network import ConfigurationError, GridNetwork

if TYPE_CHECKING:
    from .metrics import RunRecorder


class InvariantViolation(RuntimeError):
    """A runtime consistency check failed (debug mode)."""


def default_payoffs(behavior: BehaviorModel) -> PayoffTable:
    if isinstance(behavior, Impatience):
        return PayoffTable.impatience_default()
    return PayoffTable.fixed_ratio_default()


@dataclass(frozen=True)
class SimConfig:
    """Run parameters.

    ``entry_streets_per_step`` tunes the arrival intensity: each step, that
    many randomly sampled streets may admit one queued driver each with
    probability ``p_new``. 8 means every street draws every step; the
    default of 4 calibrates the congestion onset across the entry
    probability sweep to where the grid's crossing capacity places it.
    """

    behavior: BehaviorModel
    payoffs: PayoffTable | None = None
    v_max: int = 1
    p_slow: float = 0.1
    p_new: float = 0.5
    max_vehicles: int = 350
    warmup_steps: int = 50
    approach_window: int = 1
    entry_streets_per_step: int = 4
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("p_slow", "p_new"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise ConfigurationError(f"{name} must be in [0, 1], got {p}")
        if self.v_max < 1:
            raise ConfigurationError(f"v_max must be >= 1, got {self.v_max}")
        if self.max_vehicles < 1:
            raise ConfigurationError(f"max_vehicles must be >= 1, got {self.max_vehicles}")
        if self.warmup_steps < 0:
            raise ConfigurationError("warmup_steps must be >= 0")
        if self.approach_window < 0:
            raise ConfigurationError("approach_window must be >= 0")
        if not 1 <= self.entry_streets_per_step <= 8:
            raise ConfigurationError("entry_streets_per_step must be in 1..8")
        if self.payoffs is None:
            object.__setattr__(self, "payoffs", default_payoffs(self.behavior))


@dataclass(slots=True)
class Vehicle:
    vehicle_id: int
    driver_type: DriverType
    is_core: bool = False
    street: int | None = None        # None while queued
    cell: int = -1
    speed: int = 0
    hold_steps: int = 0
    waiting_time: int = 0
    speed_history: deque = field(default_factory=lambda: deque(maxlen=5))
    obs_count_co: float = 0.0
    obs_count_de: float = 0.0
    meeting_pending: bool = False    # resolved meeting not yet crossed out
    is_waiting: bool = False         # judged waiting in the latest step

    @property
    def on_lattice(self) -> bool:
        return self.street is not None


class SimState:
    """One replicate's full state; confined to a single execution context."""

    def __init__(self, network: GridNetwork, config: SimConfig, rng: random.Random):
        self.network = network
        self.config = config
        self.rng = rng
        self.step = 0
        self.vehicles: list[Vehicle] = []
        self.queue: deque[int] = deque()
        n_streets = network.n_streets
        length = network.streets[0].length
        self.occupancy: list[list[int | None]] = [[None] * length for _ in range(n_streets)]
        self.street_lists: list[list[int]] = [[] for _ in range(n_streets)]
        # per-street lookups in travel coordinates
        self.partner: list[list[tuple[int, int] | None]] = []
        self.is_crossing: list[list[bool]] = []
        self.near_crossing: list[list[bool]] = []
        window = config.approach_window
        for street in network.streets:
            crossings = set(street.crossing_cells)
            self.is_crossing.append([c in crossings for c in range(length)])
            self.partner.append([network.partner_cell(street.street_id, c)
                                 for c in range(length)])
            self.near_crossing.append([
                any(c + d in crossings for d in range(0, window + 1))
                for c in range(length)
            ])
        self.step_conflicts = 0
        self.step_changes = 0
        self.recorder: RunRecorder | None = None
        self._seed_population()

    def _seed_population(self) -> None:
        behavior = self.config.behavior
        rng = self.rng
        for vid in range(self.config.max_vehicles):
            if isinstance(behavior, FixedRatio):
                dtype = assign_type_fixed(behavior.p_co, rng.random())
                core = False
            elif isinstance(behavior, Imitation):
                core = rng.random() < behavior.core_fraction
                if core:
                    dtype = DriverType.CO
                else:
                    dtype = DriverType.DE if rng.random() < behavior.initial_p_de else DriverType.CO
            else:
                dtype = DriverType.CO
                core = False
            self.vehicles.append(Vehicle(vehicle_id=vid, driver_type=dtype, is_core=core))
            self.queue.append(vid)

    def on_lattice(self) -> Iterator[Vehicle]:
        return (veh for veh in self.vehicles if veh.street is not None)

    def n_on_lattice(self) -> int:
        return sum(len(lst) for lst in self.street_lists)

    def point_free(self, street_id: int, cell: int) -> bool:
        """True when the physical point is empty, counting a shared crossing
        on the perpendicular street as the same slot."""
        if self.occupancy[street_id][cell] is not None:
            return False
        partner = self.partner[street_id][cell]
        if partner is not None and self.occupancy[partner[0]][partner[1]] is not None:
            return False
        return True


def new_simulation(network: GridNetwork, config: SimConfig, replicate: int = 0) -> SimState:
    """Create a fresh replicate with its own derived RNG stream.

    Replicate streams are split from the master seed with numpy's
    ``SeedSequence(seed, spawn_key=(replicate,))``, so any subset of
    replicates can run concurrently and still match a sequential run.
    """
    return SimState(network, config, random.Random(derive_seed(config.seed, replicate)))


def derive_seed(master_seed: int, replicate: int) -> int:
    from numpy.random import SeedSequence

    words = SeedSequence(master_seed, spawn_key=(replicate,)).generate_state(2)
    return int(words[0]) << 32 | int(words[1])


def spawn_from_queue(state: SimState, street_order: list[int] | None = None) -> None:
    """Let queued drivers enter at free entry cells, one per street at most.

    Each of this step's entry streets with a free entry cell admits the
    queue head with probability ``p_new``. With ``entry_streets_per_step``
    = 8 every street is visited, in the given order (the step's street
    permutation); below 8, a fresh random sample of streets is drawn.
    """
    if not state.queue:
        return
    p_new = state.config.p_new
    if p_new <= 0.0:
        return
    rng = state.rng
    n_streets = state.network.n_streets
    k = state.config.entry_streets_per_step
    if k >= n_streets:
        order = street_order if street_order is not None else range(n_streets)
    else:
        order = rng.sample(range(n_streets), k)
    for s in order:
        if not state.queue:
            return
        if not state.point_free(s, 0):
            continue
        if rng.random() >= p_new:
            continue
        vid = state.queue.popleft()
        veh = state.vehicles[vid]
        veh.street = s
        veh.cell = 0
        veh.speed = 0
        veh.hold_steps = 0
        veh.waiting_time = 0
        veh.speed_history.clear()
        veh.meeting_pending = False
        veh.is_waiting = False
        state.occupancy[s][0] = vid
        state.street_lists[s].insert(0, vid)


def recycle_vehicle(state: SimState, veh: Vehicle) -> None:
    """Return a vehicle that drove off its street's end to the queue.

    The caller must already have cleared the vehicle's lattice slot. What
    survives the trip depends on the model: fixed-ratio drivers are redrawn
    from the type distribution, imitators keep type, core flag and
    counters, impatient drivers reset to CO. Waiting state never survives.
    """
    behavior = state.config.behavior
    if isinstance(behavior, FixedRatio):
        veh.driver_type = assign_type_fixed(behavior.p_co, state.rng.random())
    elif isinstance(behavior, Impatience):
        veh.driver_type = DriverType.CO
    veh.street = None
    veh.cell = -1
    veh.speed = 0
    veh.hold_steps = 0
    veh.waiting_time = 0
    veh.speed_history.clear()
    veh.meeting_pending = False
    veh.is_waiting = False
    state.queue.append(veh.vehicle_id)


def check_state(state: SimState) -> None:
    """Debug-mode consistency check; raises InvariantViolation on failure."""
    seen_points: set[tuple[int, int]] = set()
    n_on = 0
    for veh in state.vehicles:
        if veh.street is None:
            continue
        n_on += 1
        if not 0 <= veh.speed <= state.config.v_max:
            raise InvariantViolation(f"vehicle {veh.vehicle_id} speed {veh.speed} out of range")
        if state.occupancy[veh.street][veh.cell] != veh.vehicle_id:
            raise InvariantViolation(f"occupancy desync for vehicle {veh.vehicle_id}")
        point = (veh.street, veh.cell)
        partner = state.partner[veh.street][veh.cell]
        key = min(point, partner) if partner is not None else point
        if key in seen_points:
            raise InvariantViolation(f"two vehicles share lattice point {key}")
        seen_points.add(key)
        if partner is not None and state.occupancy[partner[0]][partner[1]] is not None:
            raise InvariantViolation(f"crossing {point} occupied from both streets")
    if n_on + len(state.queue) != state.config.max_vehicles:
        raise InvariantViolation(
            f"population leak: {n_on} on lattice + {len(state.queue)} queued "
            f"!= {state.config.max_vehicles}")
    for s, lst in enumerate(state.street_lists):
        cells = [state.vehicles[vid].cell for vid in lst]
        if any(a >= b for a, b in zip(cells, cells[1:])):
            raise InvariantViolation(f"street {s} order corrupted: {cells}")
