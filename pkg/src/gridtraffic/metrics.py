"""Per-step metric collection and replicate aggregation.

Metrics only cover steps past the warm-up. Per-step means are taken over
vehicles currently on the lattice; an empty group yields ``None`` rather
than zero so averages are never diluted. Waiting is reported two ways: the
time-average of the per-step mean waiting counters, and the average of
completed positive waits sampled whenever a vehicle finally enters a
crossing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .behavior import DriverType

if TYPE_CHECKING:
    from .core import SimState


def ratio_q(n_de: int, n_co: int) -> float | None:
    """Defector share #DE / (#CO + #DE), or None for an empty population."""
    total = n_de + n_co
    if total == 0:
        return None
    return n_de / total


@dataclass(frozen=True)
class StepMetrics:
    step: int
    n_vehicles: int
    n_co: int
    n_de: int
    mean_speed_all: float | None
    mean_speed_co: float | None
    mean_speed_de: float | None
    ratio_q: float | None
    n_conflicts_step: int
    n_type_changes_step: int
    mean_wait: float | None
    # integer speed sums kept alongside means for exact cross-step accumulation
    speed_sum_co: int = 0
    speed_sum_de: int = 0


def collect_step(state: "SimState") -> StepMetrics:
    """Snapshot this step's metrics over on-lattice vehicles."""
    speed_co = speed_de = 0
    n_co = n_de = 0
    wait_sum = 0
    for veh in state.on_lattice():
        if veh.driver_type is DriverType.CO:
            n_co += 1
            speed_co += veh.speed
        else:
            n_de += 1
            speed_de += veh.speed
        wait_sum += veh.waiting_time
    n = n_co + n_de
    return StepMetrics(
        step=state.step,
        n_vehicles=n,
        n_co=n_co,
        n_de=n_de,
        mean_speed_all=(speed_co + speed_de) / n if n else None,
        mean_speed_co=speed_co / n_co if n_co else None,
        mean_speed_de=speed_de / n_de if n_de else None,
        ratio_q=ratio_q(n_de, n_co),
        n_conflicts_step=state.step_conflicts,
        n_type_changes_step=state.step_changes,
        mean_wait=wait_sum / n if n else None,
        speed_sum_co=speed_co,
        speed_sum_de=speed_de,
    )


@dataclass
class MeetingRecord:
    step: int
    intersection_id: int
    left_type: DriverType
    right_type: DriverType


@dataclass
class RunRecorder:
    """Accumulates recorded-step events for one replicate."""

    keep_series: bool = False
    keep_meetings: bool = False
    steps_recorded: int = 0
    speed_sum_co: int = 0
    speed_sum_de: int = 0
    count_co: int = 0
    count_de: int = 0
    conflicts_total: int = 0
    changes_total: int = 0
    ratio_sum: float = 0.0
    ratio_n: int = 0
    wait_mean_sum: float = 0.0
    wait_mean_n: int = 0
    wait_sample_sum: int = 0
    wait_sample_n: int = 0
    n_meetings: int = 0
    meetings_sigma_xi: int = 0
    q_samples: list[float] = field(default_factory=list)
    series: list[StepMetrics] = field(default_factory=list)
    meetings: list[MeetingRecord] = field(default_factory=list)

    def record_step(self, sm: StepMetrics) -> None:
        self.steps_recorded += 1
        self.speed_sum_co += sm.speed_sum_co
        self.speed_sum_de += sm.speed_sum_de
        self.count_co += sm.n_co
        self.count_de += sm.n_de
        self.conflicts_total += sm.n_conflicts_step
        self.changes_total += sm.n_type_changes_step
        if sm.ratio_q is not None:
            self.ratio_sum += sm.ratio_q
            self.ratio_n += 1
        if sm.mean_wait is not None:
            self.wait_mean_sum += sm.mean_wait
            self.wait_mean_n += 1
        if self.keep_series:
            self.series.append(sm)

    def note_wait_sample(self, waited: int) -> None:
        if waited > 0:
            self.wait_sample_sum += waited
            self.wait_sample_n += 1

    def note_q_sample(self, q: float) -> None:
        self.q_samples.append(q)

    def note_meeting(self, step: int, intersection_id: int,
                     left_type: DriverType, right_type: DriverType) -> None:
        self.n_meetings += 1
        self.meetings_sigma_xi += (left_type is DriverType.CO) + (right_type is DriverType.CO)
        if self.keep_meetings:
            self.meetings.append(MeetingRecord(step, intersection_id, left_type, right_type))


@dataclass(frozen=True)
class RunSummary:
    """Aggregated metrics of one replicate over its recorded steps."""

    config: dict
    steps_recorded: int
    mean_speed_all: float | None
    mean_speed_co: float | None
    mean_speed_de: float | None
    conflicts_total: int
    changes_total: int
    conflict_freq: float
    change_freq: float
    avg_ratio_de: float | None
    mean_wait_step: float | None    # time-average of per-step mean waiting counters
    avg_wait: float | None          # mean of completed positive waits at crossings
    n_wait_samples: int
    n_meetings: int
    meetings_sigma_xi: int
    q_samples: tuple[float, ...] = ()
    series: tuple[StepMetrics, ...] | None = None
    meetings: tuple[MeetingRecord, ...] | None = None


def summarize_run(recorder: RunRecorder, config_echo: dict) -> RunSummary:
    steps = recorder.steps_recorded
    count_all = recorder.count_co + recorder.count_de
    speed_sum_all = recorder.speed_sum_co + recorder.speed_sum_de
    return RunSummary(
        config=dict(config_echo),
        steps_recorded=steps,
        mean_speed_all=speed_sum_all / count_all if count_all else None,
        mean_speed_co=recorder.speed_sum_co / recorder.count_co if recorder.count_co else None,
        mean_speed_de=recorder.speed_sum_de / recorder.count_de if recorder.count_de else None,
        conflicts_total=recorder.conflicts_total,
        changes_total=recorder.changes_total,
        conflict_freq=recorder.conflicts_total / steps if steps else 0.0,
        change_freq=recorder.changes_total / steps if steps else 0.0,
        avg_ratio_de=recorder.ratio_sum / recorder.ratio_n if recorder.ratio_n else None,
        mean_wait_step=recorder.wait_mean_sum / recorder.wait_mean_n if recorder.wait_mean_n else None,
        avg_wait=recorder.wait_sample_sum / recorder.wait_sample_n if recorder.wait_sample_n else None,
        n_wait_samples=recorder.wait_sample_n,
        n_meetings=recorder.n_meetings,
        meetings_sigma_xi=recorder.meetings_sigma_xi,
        q_samples=tuple(recorder.q_samples),
        series=tuple(recorder.series) if recorder.keep_series else None,
        meetings=tuple(recorder.meetings) if recorder.keep_meetings else None,
    )


@dataclass(frozen=True)
class BoxSummary:
    """Five-number summary with quartiles by the (n+1)p positional rule
    (Hyndman-Fan type 6), linearly interpolated between order statistics."""

    min: float
    q1: float
    median: float
    q3: float
    max: float
    n: int


def box_summary(values) -> BoxSummary:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("box_summary needs at least one value")
    q1, median, q3 = np.percentile(arr, [25, 50, 75], method="weibull")
    return BoxSummary(min=float(arr.min()), q1=float(q1), median=float(median),
                      q3=float(q3), max=float(arr.max()), n=int(arr.size))


@dataclass(frozen=True)
class ReplicateAggregate:
    """Cross-replicate averages plus the box summaries behind the plots."""

    n_replicates: int
    steps_recorded: int
    mean_speed_all: float | None
    mean_speed_co: float | None
    mean_speed_de: float | None
    conflicts_total: float
    changes_total: float
    conflict_freq: float
    change_freq: float
    avg_ratio_de: float | None
    mean_wait_step: float | None
    avg_wait: float | None
    speed_box: BoxSummary | None    # distribution of per-replicate mean speeds
    q_box: BoxSummary | None        # pooled post-burn-in q samples


def _mean_present(values) -> float | None:
    present = [v for v in values if v is not None]
    if not present:
        return None
    return sum(present) / len(present)


def aggregate_replicates(summaries: list[RunSummary], q_burn_in: int = 100) -> ReplicateAggregate:
    """Average replicate summaries; box the per-replicate mean speeds and,
    when the runs produced q-series, the pooled samples after dropping the
    first ``q_burn_in`` cycles of each replicate."""
    if not summaries:
        raise ValueError("aggregate_replicates needs at least one summary")
    n = len(summaries)
    speeds = [s.mean_speed_all for s in summaries if s.mean_speed_all is not None]
    pooled_q = [q for s in summaries for q in s.q_samples[q_burn_in:]]
    return ReplicateAggregate(
        n_replicates=n,
        steps_recorded=summaries[0].steps_recorded,
        mean_speed_all=_mean_present(s.mean_speed_all for s in summaries),
        mean_speed_co=_mean_present(s.mean_speed_co for s in summaries),
        mean_speed_de=_mean_present(s.mean_speed_de for s in summaries),
        conflicts_total=sum(s.conflicts_total for s in summaries) / n,
        changes_total=sum(s.changes_total for s in summaries) / n,
        conflict_freq=sum(s.conflict_freq for s in summaries) / n,
        change_freq=sum(s.change_freq for s in summaries) / n,
        avg_ratio_de=_mean_present(s.avg_ratio_de for s in summaries),
        mean_wait_step=_mean_present(s.mean_wait_step for s in summaries),
        avg_wait=_mean_present(s.avg_wait for s in summaries),
        speed_box=box_summary(speeds) if speeds else None,
        q_box=box_summary(pooled_q) if pooled_q else None,
    )
