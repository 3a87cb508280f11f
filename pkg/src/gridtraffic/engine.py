"""Cellular-automaton movement rules and the per-step network update.

Per street the classic three stages apply to every vehicle against a
snapshot of the street taken at the start of its update (parallel within a
street): accelerate toward the speed limit but never past the gap ahead,
maybe slow down by one at random, then advance. Streets themselves update
in a fresh random order each step, and crossings see the live state of the
perpendicular street, so a freed crossing can be taken in the same step.

A vehicle carrying a hold penalty sits still (speed pinned to 0) until the
penalty runs out. Vehicles driving past their street's last cell leave the
lattice and are recycled into the entry queue.

Crossings are no-stopping zones while the perpendicular street carries any
traffic: a vehicle will not end its step parked on the shared point right
behind a stopped leader, it waits at the stop line instead. Without this
rule the grid falls into permanent box-blocking gridlock at the densities
the experiments run at; with an empty cross street the crossing behaves
like plain road.
"""

from __future__ import annotations

from .behavior import (
    DriverType,
    Imitation,
    Impatience,
    imitation_update,
    impatience_step,
    jam_check,
)
from .core import SimState, check_state, recycle_vehicle, spawn_from_queue
from .games import apply_outcomes, detect_meeting_at, resolve_meeting
from .metrics import collect_step


def accelerate_brake(v: int, v_max: int, gap: int) -> int:
    """Stage one: speed up by one, capped by the limit and the free gap."""
    return min(v + 1, v_max, gap)


def random_slowdown(v: int, p_slow: float, draw: float) -> int:
    """Stage two: drop one speed unit when the draw falls below p_slow."""
    if draw < p_slow:
        return max(v - 1, 0)
    return v


def advance(cell: int, v: int) -> int:
    """Stage three: move by the updated speed (may land past the street end)."""
    return cell + v


def step_street(state: SimState, street_id: int) -> None:
    """Update every vehicle on one street against its pre-step snapshot.

    Gaps close at the next vehicle ahead (old position) and at any crossing
    cell currently occupied from the perpendicular street. Vehicles ending
    past the last cell are recycled. Entering a crossing ends a wait: the
    waiting clock restarts, a pending meeting outcome is cleared, and under
    the impatience model the driver reverts to CO.
    """
    lst = state.street_lists[street_id]
    if not lst:
        return
    vehicles = state.vehicles
    occ = state.occupancy
    occ_s = occ[street_id]
    length = state.network.streets[street_id].length
    v_max = state.config.v_max
    p_slow = state.config.p_slow
    rng_draw = state.rng.random
    partner_s = state.partner[street_id]
    street_lists = state.street_lists
    is_crossing_s = state.is_crossing[street_id]
    near_crossing_s = state.near_crossing[street_id]
    impatient = isinstance(state.config.behavior, Impatience)
    recorder = state.recorder if state.step >= state.config.warmup_steps else None

    snapshot = [vehicles[vid].cell for vid in lst]
    n = len(lst)
    for i in range(n - 1, -1, -1):
        vid = lst[i]
        veh = vehicles[vid]
        if veh.hold_steps > 0:
            veh.hold_steps -= 1
            new_v = 0
        else:
            if i + 1 < n:
                gap = snapshot[i + 1] - snapshot[i] - 1
            else:
                gap = length - snapshot[i]  # open road to the exit
            new_v = accelerate_brake(veh.speed, v_max, gap)
            cell = veh.cell
            for k in range(1, new_v + 1):
                ahead = cell + k
                if ahead >= length:
                    break
                partner = partner_s[ahead]
                if partner is None:
                    continue
                if occ[partner[0]][partner[1]] is not None:
                    new_v = k - 1
                    break
                # Stop-line rule: while the cross street carries traffic, do
                # not end the step parked on the crossing right behind a
                # leader (tv == gap means the landing cell's exit is taken).
                # Box-parked vehicles are what lock the whole grid up;
                # an empty cross street makes the crossing plain road.
                if k == new_v and new_v == gap and street_lists[partner[0]]:
                    new_v = k - 1
                    break
            new_v = random_slowdown(new_v, p_slow, rng_draw())
        veh.speed = new_v
        if new_v > 0:
            new_cell = advance(veh.cell, new_v)
            if new_cell >= length:
                occ_s[veh.cell] = None
                lst.pop()  # only the front vehicle can exit
                recycle_vehicle(state, veh)
                continue
            occ_s[veh.cell] = None
            occ_s[new_cell] = vid
            veh.cell = new_cell
            if is_crossing_s[new_cell]:
                if recorder is not None:
                    recorder.note_wait_sample(veh.waiting_time)
                veh.waiting_time = 0
                veh.meeting_pending = False
                if impatient and veh.driver_type is DriverType.DE:
                    veh.driver_type = DriverType.CO
        veh.speed_history.append(new_v)
        if new_v == 0 and (near_crossing_s[veh.cell] or jam_check(veh.speed_history)):
            veh.is_waiting = True
            veh.waiting_time += 1
        else:
            veh.is_waiting = False


def step_network(state: SimState, check_invariants: bool = False) -> None:
    """Advance the whole network by one simulation step.

    Streets move in a random permutation, then crossings are examined in an
    independent random permutation and any meetings resolved, then the
    behavior model acts (impatience each step, imitation on its cycle
    boundary), then queued drivers may enter, and finally metrics are
    recorded once the warm-up is over.
    """
    rng = state.rng
    config = state.config
    state.step_conflicts = 0
    state.step_changes = 0
    recording = state.step >= config.warmup_steps

    street_order = list(range(state.network.n_streets))
    rng.shuffle(street_order)
    for s in street_order:
        step_street(state, s)

    crossing_order = list(range(len(state.network.intersections)))
    rng.shuffle(crossing_order)
    for inter_id in crossing_order:
        meeting = detect_meeting_at(state, inter_id)
        if meeting is None:
            continue
        outcome = resolve_meeting(
            meeting,
            config.payoffs,
            (state.vehicles[meeting.left_vehicle].driver_type,
             state.vehicles[meeting.right_vehicle].driver_type),
        )
        apply_outcomes(state, [outcome])

    behavior = config.behavior
    if isinstance(behavior, Impatience):
        changes = impatience_step(state)
        if recording:
            state.step_changes += changes
    elif isinstance(behavior, Imitation):
        elapsed = state.step + 1
        if elapsed % behavior.tau == 0 and elapsed >= config.warmup_steps:
            flips = imitation_update(state)
            if recording:
                state.step_changes += flips
            if state.recorder is not None:
                state.recorder.note_q_sample(_population_q(state))

    spawn_from_queue(state, street_order)

    if recording and state.recorder is not None:
        state.recorder.record_step(collect_step(state))
    if check_invariants:
        check_state(state)
    state.step += 1


def _population_q(state: SimState) -> float:
    """Defector share over the whole population, queue included."""
    n_de = sum(1 for veh in state.vehicles if veh.driver_type is DriverType.DE)
    return n_de / len(state.vehicles)
