"""Point estimators for the cooperator probability from crossing meetings.

Each meeting exposes two driver types, so ``n`` meetings give ``2n``
Bernoulli observations of "driver was a cooperator". The minimax estimator
shrinks the empirical share toward 1/2 with the classical constants for
``m`` Bernoulli trials (add sqrt(m)/2 successes out of sqrt(m) extra
trials), giving constant squared-error risk. The Bayes estimator is the
Beta-posterior mean. Meetings from one simulation are not independent
(drivers recur), so recovering the generating probability holds only
approximately.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .behavior import DriverType
from .metrics import RunSummary


class NoDataError(ValueError):
    """Estimation requested on an empty observation batch."""


@dataclass(frozen=True)
class MeetingObservation:
    """Type indicators for one meeting: 1 means the driver was CO."""

    eta_a: int
    eta_b: int

    def __post_init__(self) -> None:
        if self.eta_a not in (0, 1) or self.eta_b not in (0, 1):
            raise ValueError("type indicators must be 0 or 1")

    @property
    def xi(self) -> int:
        return self.eta_a + self.eta_b


@dataclass(frozen=True)
class ObservationBatch:
    """Totals of n meetings: sigma_xi cooperators seen out of 2n drivers."""

    n: int
    sigma_xi: int

    def __post_init__(self) -> None:
        if self.n < 0:
            raise ValueError(f"n must be >= 0, got {self.n}")
        if not 0 <= self.sigma_xi <= 2 * self.n:
            raise ValueError(f"sigma_xi {self.sigma_xi} outside 0..{2 * self.n}")


def minimax_estimate(batch: ObservationBatch,
                     alpha: float | None = None,
                     beta: float | None = None) -> float:
    """(alpha + sigma_xi) / (beta + 2n), defaulting to the constant-risk
    constants alpha = sqrt(2n)/2, beta = sqrt(2n)."""
    if batch.n == 0:
        raise NoDataError("minimax estimate needs at least one meeting")
    m = 2 * batch.n
    if alpha is None:
        alpha = math.sqrt(m) / 2.0
    if beta is None:
        beta = math.sqrt(m)
    return (alpha + batch.sigma_xi) / (beta + m)


def bayes_estimate(batch: ObservationBatch,
                   prior_alpha: float = 1.0,
                   prior_beta: float = 1.0) -> float:
    """Beta(prior_alpha, prior_beta) posterior mean of the CO probability."""
    if prior_alpha <= 0 or prior_beta <= 0:
        raise ValueError("prior parameters must be positive")
    return (prior_alpha + batch.sigma_xi) / (prior_alpha + prior_beta + 2 * batch.n)


def observations_from_pairs(pairs: Iterable[tuple[DriverType, DriverType]]) -> ObservationBatch:
    """Fold meeting type pairs into batch totals."""
    n = 0
    sigma = 0
    for left, right in pairs:
        n += 1
        sigma += (left is DriverType.CO) + (right is DriverType.CO)
    return ObservationBatch(n=n, sigma_xi=sigma)


def harvest_observations(run: RunSummary) -> ObservationBatch:
    """Batch totals from a completed run's meeting log."""
    return ObservationBatch(n=run.n_meetings, sigma_xi=run.meetings_sigma_xi)
