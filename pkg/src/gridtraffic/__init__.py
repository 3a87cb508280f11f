"""Grid-traffic: cellular-automaton street grid with typed drivers."""

from .behavior import (
    BehaviorModel,
    DriverType,
    FixedRatio,
    Imitation,
    Impatience,
    change_probability,
    imitation_probability,
    jam_check,
    weibull_cdf,
    weibull_hazard,
)
from .core import InvariantViolation, SimConfig, SimState, new_simulation
from .engine import step_network
from .estimation import (
    MeetingObservation,
    NoDataError,
    ObservationBatch,
    bayes_estimate,
    harvest_observations,
    minimax_estimate,
)
from .games import Meeting, MeetingOutcome, PayoffTable, resolve_meeting
from .metrics import BoxSummary, RunSummary, aggregate_replicates, box_summary, ratio_q
from .network import (
    ConfigurationError,
    Direction,
    GridNetwork,
    RightOfWay,
    build_grid,
    right_of_way,
)
from .runner import run_batch, run_replicate
from .snapshot import render

__all__ = [
    "BehaviorModel",
    "BoxSummary",
    "ConfigurationError",
    "Direction",
    "DriverType",
    "FixedRatio",
    "GridNetwork",
    "Imitation",
    "Impatience",
    "InvariantViolation",
    "Meeting",
    "MeetingObservation",
    "MeetingOutcome",
    "NoDataError",
    "ObservationBatch",
    "PayoffTable",
    "RightOfWay",
    "RunSummary",
    "SimConfig",
    "SimState",
    "aggregate_replicates",
    "bayes_estimate",
    "box_summary",
    "build_grid",
    "change_probability",
    "harvest_observations",
    "imitation_probability",
    "jam_check",
    "minimax_estimate",
    "new_simulation",
    "ratio_q",
    "render",
    "resolve_meeting",
    "right_of_way",
    "run_batch",
    "run_replicate",
    "step_network",
    "weibull_cdf",
    "weibull_hazard",
]
