"""Driver-type dynamics: fixed ratio, imitation with a core, and impatience.

Three ways a driver's type (cooperator vs defector) evolves:

* ``FixedRatio`` -- types are drawn once per queue entry with a constant
  cooperator probability and never change on the road.
* ``Imitation`` -- drivers tally the types they met at crossings and, every
  ``tau`` steps, redraw their own type from the observed mix. A core of
  permanently law-abiding drivers never changes.
* ``Impatience`` -- everyone starts compliant; a driver stuck waiting turns
  defector with a probability driven by a Weibull waiting-threshold law and
  reverts after crossing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, Literal, Union

if TYPE_CHECKING:  # only for annotations; runtime state types live in core
    from .core import SimState, Vehicle


class DriverType(Enum):
    CO = "CO"   # cooperator: complies with priority rules
    DE = "DE"   # defector: forces right of way


class Observation(Enum):
    """What a meeting participant could tell about the opponent."""

    SAW_CO = "saw_CO"
    SAW_DE = "saw_DE"
    AMBIGUOUS = "ambiguous"


HazardMode = Literal["discrete_conditional", "raw_clipped"]


@dataclass(frozen=True)
class FixedRatio:
    """Constant cooperator probability; type redrawn at every queue entry."""

    p_co: float

    def __post_init__(self) -> None:
        if not 0.0 <= self.p_co <= 1.0:
            raise ValueError(f"p_co must be in [0, 1], got {self.p_co}")


@dataclass(frozen=True)
class Imitation:
    """Do-as-others updates every ``tau`` steps, with a law-abiding core."""

    initial_p_de: float
    core_fraction: float
    tau: int = 500

    def __post_init__(self) -> None:
        if not 0.0 <= self.initial_p_de <= 1.0:
            raise ValueError(f"initial_p_de must be in [0, 1], got {self.initial_p_de}")
        if not 0.0 <= self.core_fraction <= 1.0:
            raise ValueError(f"core_fraction must be in [0, 1], got {self.core_fraction}")
        if self.tau < 1:
            raise ValueError(f"tau must be >= 1, got {self.tau}")


@dataclass(frozen=True)
class Impatience:
    """Weibull waiting-threshold impatience; reverts to CO after crossing."""

    scale_a: float = 30.0
    shape_b: float = 2.92
    hazard_mode: HazardMode = "discrete_conditional"

    def __post_init__(self) -> None:
        if self.scale_a <= 0 or self.shape_b <= 0:
            raise ValueError("Weibull scale and shape must be positive")
        if self.hazard_mode not in ("discrete_conditional", "raw_clipped"):
            raise ValueError(f"unknown hazard_mode {self.hazard_mode!r}")


BehaviorModel = Union[FixedRatio, Imitation, Impatience]


def assign_type_fixed(p_co: float, draw: float) -> DriverType:
    """CO iff the uniform draw falls below the cooperator probability."""
    return DriverType.CO if draw < p_co else DriverType.DE


def record_interaction(observer: "Vehicle", observed: Observation) -> None:
    """Credit the observer's per-cycle counters for one crossing encounter.

    An ambiguous encounter (a yielding cooperator cannot tell what its
    opponent was) credits half a count to each side.
    """
    if observed is Observation.SAW_CO:
        observer.obs_count_co += 1.0
    elif observed is Observation.SAW_DE:
        observer.obs_count_de += 1.0
    else:
        observer.obs_count_co += 0.5
        observer.obs_count_de += 0.5


def imitation_probability(f_c: float, f_d: float) -> tuple[float, float] | None:
    """(P_C, P_D) from interaction counts, or None when nothing was observed.

    P_D is the observed defector share f_D / (f_C + f_D); P_C is its
    complement. A driver with no observations keeps its current type.
    """
    total = f_c + f_d
    if total <= 0.0:
        return None
    p_d = f_d / total
    return 1.0 - p_d, p_d


def imitation_update(state: "SimState") -> int:
    """Redraw every non-core driver's type from its observed mix.

    Covers drivers on the lattice and in the queue. Counters reset for the
    next cycle; core drivers stay CO regardless of what they saw. Returns
    the number of actual type flips.
    """
    rng = state.rng
    flips = 0
    for veh in state.vehicles:
        if veh.is_core:
            continue
        probs = imitation_probability(veh.obs_count_co, veh.obs_count_de)
        veh.obs_count_co = 0.0
        veh.obs_count_de = 0.0
        if probs is None:
            continue
        new_type = DriverType.DE if rng.random() < probs[1] else DriverType.CO
        if new_type is not veh.driver_type:
            veh.driver_type = new_type
            flips += 1
    return flips


def weibull_cdf(x: float, params: Impatience) -> float:
    """Waiting-threshold distribution: 1 - exp(-(x/a)^b) for x > 0, else 0."""
    if x <= 0.0:
        return 0.0
    return 1.0 - math.exp(-((x / params.scale_a) ** params.shape_b))


def weibull_hazard(x: float, params: Impatience) -> float:
    """Hazard rate (b/a) * (x/a)^(b-1); defined for x > 0 only."""
    if x <= 0.0:
        raise ValueError(f"hazard is defined for x > 0, got {x}")
    a, b = params.scale_a, params.shape_b
    return (b / a) * (x / a) ** (b - 1)


def change_probability(waiting_time: int, params: Impatience) -> float:
    """Per-step probability that a waiting cooperator snaps and defects.

    ``discrete_conditional`` is the exact one-step law of the Weibull
    threshold: the chance the threshold lies in (w, w+1] given it exceeded
    w. ``raw_clipped`` uses the hazard value itself, clipped to [0, 1].
    """
    w = max(waiting_time, 0)
    if params.hazard_mode == "discrete_conditional":
        survive = 1.0 - weibull_cdf(float(w), params)
        if survive <= 0.0:
            return 1.0
        return (weibull_cdf(float(w + 1), params) - weibull_cdf(float(w), params)) / survive
    return min(1.0, weibull_hazard(float(max(w, 1)), params))


def jam_check(speed_history) -> bool:
    """True when the mean of the recent speeds (up to 5) is <= 0.2.

    Uses however many entries a young vehicle has; an empty history is not
    a jam. Integer arithmetic keeps the 0.2 boundary exact.
    """
    n = len(speed_history)
    if n == 0:
        return False
    return 5 * sum(speed_history) <= n


def impatience_step(state: "SimState") -> int:
    """Run the per-step CO -> DE transitions for waiting drivers.

    Every cooperator judged waiting this step draws against
    ``change_probability`` of its accumulated waiting time. Returns the
    number of type changes. Reversion to CO happens where vehicles cross
    intersections (engine) and at recycling (core).
    """
    params = state.config.behavior
    rng = state.rng
    changes = 0
    for veh in state.on_lattice():
        if veh.driver_type is DriverType.CO and veh.is_waiting:
            if rng.random() < change_probability(veh.waiting_time, params):
                veh.driver_type = DriverType.DE
                changes += 1
    return changes
