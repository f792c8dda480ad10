"""Median stopping rule: stop a trial whose best result trails the median of
the other trials' running averages at comparable progress."""

from __future__ import annotations

import statistics
from dataclasses import dataclass
from typing import Optional

from ..trials import ResultRecord, Trial, TrialDecision
from .base import TrialPoolView, TrialScheduler


@dataclass(frozen=True)
class MedianStoppingConfig:
    grace_period: int = 1
    min_comparison_trials: int = 2

    def __post_init__(self):
        if not isinstance(self.grace_period, int) or self.grace_period < 1:
            raise ValueError(f"grace_period must be a positive integer, got {self.grace_period!r}")
        if not isinstance(self.min_comparison_trials, int) or self.min_comparison_trials < 1:
            raise ValueError(
                f"min_comparison_trials must be a positive integer, got {self.min_comparison_trials!r}"
            )


def running_average(trial: Trial, pool: TrialPoolView, up_to_step: int) -> Optional[float]:
    """Mean canonical objective over the trial's results at steps <= up_to_step."""
    values = [
        pool.objective.canonical(r.metrics) for r in trial.results if r.step <= up_to_step
    ]
    if not values:
        return None
    return sum(values) / len(values)


class MedianStoppingRule(TrialScheduler):
    """Stateless: every decision is recomputed from the pool snapshot."""

    kind = "median"

    def __init__(self, config: MedianStoppingConfig = MedianStoppingConfig()):
        self.config = config

    def on_result(self, trial: Trial, result: ResultRecord, pool: TrialPoolView) -> TrialDecision:
        cfg = self.config
        if result.step < cfg.grace_period:
            return TrialDecision.continue_()
        averages = []
        for other in pool.trials_in_order():
            if other.id == trial.id:
                continue
            avg = running_average(other, pool, result.step)
            if avg is not None:
                averages.append(avg)
        if len(averages) < cfg.min_comparison_trials:
            return TrialDecision.continue_()
        median = statistics.median(averages)
        best = pool.canonical_best(trial)
        # strict comparison: a trial exactly at the median continues
        if best is not None and best > median:
            return TrialDecision.stop()
        return TrialDecision.continue_()
