"""Crossing encounters: detection, payoff lookup, and hold assignment.

When two vehicles stand one cell short of the same free crossing in the
same step, they meet. The approach whose direction wins the right-hand
rule plays the "right" (priority) role, the other the "left" (yielding)
role. The payoff table converts the pair of driver types into a time loss
for each side; losses become hold penalties during which a vehicle cannot
move. Two defectors meeting is a conflict and draws the collision penalty.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING

from .behavior import DriverType, Imitation, Impatience, Observation, record_interaction
from .network import RightOfWay, right_of_way

if TYPE_CHECKING:
    from .core import SimState


@dataclass(frozen=True)
class PayoffTable:
    """Time losses per (left type, right type), in simulation steps.

    ``crossing_inclusive`` marks tables whose entries include the one step
    needed to traverse the crossing itself; holds are then cost - 1. Tables
    listing pure waiting time use the costs as holds directly.
    """

    entries: dict[tuple[DriverType, DriverType], tuple[int, int]]
    crossing_inclusive: bool

    def __post_init__(self) -> None:
        expected = {(lt, rt) for lt in DriverType for rt in DriverType}
        if set(self.entries) != expected:
            raise ValueError("payoff table needs all four CO/DE type pairs")
        if any(c < 0 for pair in self.entries.values() for c in pair):
            raise ValueError("payoff costs must be non-negative")

    def holds(self, left: DriverType, right: DriverType) -> tuple[int, int]:
        left_cost, right_cost = self.entries[(left, right)]
        if self.crossing_inclusive:
            return max(left_cost - 1, 0), max(right_cost - 1, 0)
        return left_cost, right_cost

    @classmethod
    def fixed_ratio_default(cls, conflict_cost: int = 3, collision_cost: int = 50,
                            de_co_right_cost: int | None = None) -> "PayoffTable":
        """Crossing-inclusive costs: yielding CO loses 2, priority side 1,
        a forcing defector against a compliant right costs both 3, and two
        defectors both pay the collision penalty. ``de_co_right_cost``
        overrides the priority driver's cost in the (DE, CO) case for the
        asymmetric-cost variant."""
        rd = conflict_cost if de_co_right_cost is None else de_co_right_cost
        return cls(
            entries={
                (DriverType.CO, DriverType.CO): (2, 1),
                (DriverType.CO, DriverType.DE): (2, 1),
                (DriverType.DE, DriverType.CO): (conflict_cost, rd),
                (DriverType.DE, DriverType.DE): (collision_cost, collision_cost),
            },
            crossing_inclusive=True,
        )

    @classmethod
    def impatience_default(cls) -> "PayoffTable":
        """Pure waiting times: a compliant left waits 2 for the opponent to
        enter and leave; a defecting left forces the right side to wait 2;
        two defectors both stop, then the priority side passes first."""
        return cls(
            entries={
                (DriverType.CO, DriverType.CO): (2, 0),
                (DriverType.CO, DriverType.DE): (2, 0),
                (DriverType.DE, DriverType.CO): (0, 2),
                (DriverType.DE, DriverType.DE): (3, 1),
            },
            crossing_inclusive=False,
        )


class MeetingScenario(Enum):
    BOTH_CO = "both_co"
    RIGHT_DE = "right_de"
    LEFT_DE = "left_de"
    BOTH_DE = "both_de"


_SCENARIOS = {
    (DriverType.CO, DriverType.CO): MeetingScenario.BOTH_CO,
    (DriverType.CO, DriverType.DE): MeetingScenario.RIGHT_DE,
    (DriverType.DE, DriverType.CO): MeetingScenario.LEFT_DE,
    (DriverType.DE, DriverType.DE): MeetingScenario.BOTH_DE,
}


@dataclass(frozen=True)
class Meeting:
    """Two simultaneous approachers at one crossing, in role order."""

    intersection_id: int
    left_vehicle: int    # yielding approach per the right-hand rule
    right_vehicle: int   # priority approach


@dataclass(frozen=True)
class MeetingOutcome:
    meeting: Meeting
    left_hold: int
    right_hold: int
    is_conflict: bool
    scenario: MeetingScenario


def detect_meeting_at(state: "SimState", intersection_id: int) -> Meeting | None:
    """Check one crossing for a meeting.

    A meeting needs, at a crossing whose point is unoccupied, one vehicle
    exactly one cell short on each street, both free to move (no pending
    hold). Vehicles carrying an unresolved outcome (they met but have not
    crossed yet) do not meet again, so expired penalties cannot re-trigger
    the same encounter. Under the impatience model only, a driver that is
    still waiting does replay the encounter against each fresh opponent:
    that is what lets a driver who snapped mid-wait force its way through
    on the next meeting.
    """
    net = state.network
    inter = net.intersections[intersection_id]
    if state.occupancy[inter.h_street][inter.h_cell] is not None:
        return None
    if state.occupancy[inter.v_street][inter.v_cell] is not None:
        return None
    if inter.h_cell == 0 or inter.v_cell == 0:
        return None  # degenerate grid: no approach cell on that street
    h_vid = state.occupancy[inter.h_street][inter.h_cell - 1]
    v_vid = state.occupancy[inter.v_street][inter.v_cell - 1]
    if h_vid is None or v_vid is None:
        return None
    h_veh = state.vehicles[h_vid]
    v_veh = state.vehicles[v_vid]
    if h_veh.hold_steps > 0 or v_veh.hold_steps > 0:
        return None
    if isinstance(state.config.behavior, Impatience):
        if h_veh.meeting_pending and v_veh.meeting_pending:
            return None
    elif h_veh.meeting_pending or v_veh.meeting_pending:
        return None
    h_dir = net.streets[inter.h_street].direction
    v_dir = net.streets[inter.v_street].direction
    if right_of_way(h_dir, v_dir) is RightOfWay.A_HAS_PRIORITY:
        right_vid, left_vid = h_vid, v_vid
    else:
        right_vid, left_vid = v_vid, h_vid
    return Meeting(inter.intersection_id, left_vid, right_vid)


def detect_meetings(state: "SimState", order: list[int] | None = None) -> list[Meeting]:
    """All meetings this step, visiting crossings in the given order."""
    if order is None:
        order = range(len(state.network.intersections))
    meetings = []
    for inter_id in order:
        meeting = detect_meeting_at(state, inter_id)
        if meeting is not None:
            meetings.append(meeting)
    return meetings


def resolve_meeting(meeting: Meeting, payoffs: PayoffTable,
                    types: tuple[DriverType, DriverType]) -> MeetingOutcome:
    """Turn a meeting into hold penalties via the payoff table."""
    left_type, right_type = types
    left_hold, right_hold = payoffs.holds(left_type, right_type)
    return MeetingOutcome(
        meeting=meeting,
        left_hold=left_hold,
        right_hold=right_hold,
        is_conflict=left_type is DriverType.DE and right_type is DriverType.DE,
        scenario=_SCENARIOS[(left_type, right_type)],
    )


def apply_outcomes(state: "SimState", outcomes: list[MeetingOutcome]) -> None:
    """Install holds, count conflicts, and log observations.

    Holds compose by max with whatever penalty a vehicle already carries.
    Under the imitation model each participant also credits its counters:
    the priority driver always reads the opponent's true type from its
    behavior, while a yielding cooperator cannot tell (its own yielding
    forces the same play either way) and records an ambiguous encounter.
    """
    imitating = isinstance(state.config.behavior, Imitation)
    recording = state.step >= state.config.warmup_steps
    for outcome in outcomes:
        left = state.vehicles[outcome.meeting.left_vehicle]
        right = state.vehicles[outcome.meeting.right_vehicle]
        left.hold_steps = max(left.hold_steps, outcome.left_hold)
        right.hold_steps = max(right.hold_steps, outcome.right_hold)
        left.meeting_pending = True
        right.meeting_pending = True
        if outcome.is_conflict and recording:
            state.step_conflicts += 1
        if imitating and recording:
            right_obs = (Observation.SAW_CO if left.driver_type is DriverType.CO
                         else Observation.SAW_DE)
            record_interaction(right, right_obs)
            if left.driver_type is DriverType.CO:
                record_interaction(left, Observation.AMBIGUOUS)
            else:
                left_obs = (Observation.SAW_CO if right.driver_type is DriverType.CO
                            else Observation.SAW_DE)
                record_interaction(left, left_obs)
        if recording and state.recorder is not None:
            state.recorder.note_meeting(state.step, outcome.meeting.intersection_id,
                                        left.driver_type, right.driver_type)
