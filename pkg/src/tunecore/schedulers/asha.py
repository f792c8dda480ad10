"""Asynchronous successive halving in its stopping-based form: each trial is
judged once per crossed milestone against the rung's running cutoff."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Set

from ..trials import ResultRecord, Trial, TrialDecision
from .base import TrialPoolView, TrialScheduler


@dataclass(frozen=True)
class AshaConfig:
    max_resource: int
    min_resource: int = 1
    reduction_factor: int = 3

    def __post_init__(self):
        if not isinstance(self.min_resource, int) or self.min_resource < 1:
            raise ValueError(f"min_resource must be a positive integer, got {self.min_resource!r}")
        if not isinstance(self.max_resource, int) or self.max_resource < self.min_resource:
            raise ValueError(
                f"max_resource must be an integer >= min_resource, got {self.max_resource!r}"
            )
        if not isinstance(self.reduction_factor, int) or self.reduction_factor < 2:
            raise ValueError(
                f"reduction_factor must be an integer >= 2, got {self.reduction_factor!r}"
            )


def asha_milestones(config: AshaConfig) -> List[int]:
    """[r * eta^k for k = 0..floor(log_eta(R/r))], strictly increasing, last <= R."""
    milestones = []
    m = config.min_resource
    while m <= config.max_resource:
        milestones.append(m)
        m *= config.reduction_factor
    return milestones


class AshaScheduler(TrialScheduler):
    kind = "asha"

    def __init__(self, config: AshaConfig):
        self.config = config
        self.milestones = asha_milestones(config)
        # rung milestone -> {trial id -> canonical objective recorded there}
        self.rungs: Dict[int, Dict[str, float]] = {m: {} for m in self.milestones}
        self._evaluated: Dict[str, Set[int]] = {}

    def on_result(self, trial: Trial, result: ResultRecord, pool: TrialPoolView) -> TrialDecision:
        seen = self._evaluated.setdefault(trial.id, set())
        crossed = [m for m in self.milestones if m <= result.step and m not in seen]
        if not crossed:
            return TrialDecision.continue_()
        # one decision per report: evaluate only the largest newly crossed
        # milestone; skipped smaller ones are never revisited
        milestone = crossed[-1]
        seen.update(crossed)
        value = pool.objective.canonical(result.metrics)
        rung = self.rungs[milestone]
        rung[trial.id] = value
        n = len(rung)
        eta = self.config.reduction_factor
        if n < eta:
            return TrialDecision.continue_()
        k = max(1, n // eta)
        cutoff = sorted(rung.values())[k - 1]
        if value <= cutoff:
            return TrialDecision.continue_()
        return TrialDecision.stop()

    def export_state(self) -> dict:
        return {
            "rungs": {str(m): dict(v) for m, v in self.rungs.items()},
            "evaluated": {tid: sorted(ms) for tid, ms in self._evaluated.items()},
        }

    def import_state(self, doc: dict) -> None:
        self.rungs = {m: {} for m in self.milestones}
        for m_str, values in doc.get("rungs", {}).items():
            self.rungs[int(m_str)] = {str(t): float(v) for t, v in values.items()}
        self._evaluated = {
            str(t): set(int(m) for m in ms) for t, ms in doc.get("evaluated", {}).items()
        }
