"""Synchronous HyperBand: brackets of successive halving with pause-at-rung
semantics. Trials park at rung boundaries; when a rung is fully recorded the
best 1/eta are promoted (eligible for resume) and the rest are stopped.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

from ..errors import TrialWithoutBracket
from ..trials import ResultRecord, Trial, TrialDecision, TrialStatus
from .base import TrialPoolView, TrialScheduler


@dataclass(frozen=True)
class HyperBandConfig:
    max_resource: int
    reduction_factor: int = 3

    def __post_init__(self):
        if not isinstance(self.max_resource, int) or self.max_resource < 1:
            raise ValueError(f"max_resource must be a positive integer, got {self.max_resource!r}")
        if not isinstance(self.reduction_factor, int) or self.reduction_factor < 2:
            raise ValueError(
                f"reduction_factor must be an integer >= 2, got {self.reduction_factor!r}"
            )


def _round_half_up_ratio(num: int, den: int) -> int:
    """round(num/den) with exact half-up tie handling, in integer arithmetic."""
    return (2 * num + den) // (2 * den)


@dataclass
class Bracket:
    """One successive-halving run: rung i holds n_i trials for r_i steps."""

    series: int
    index: int  # the bracket's s value
    trial_count: int  # n: planned number of entrants
    initial_resource: int  # r_0 in steps
    rungs: List[Tuple[int, int]]  # (n_i, r_i) for i = 0..s

    assigned: List[str] = field(default_factory=list)
    live: List[str] = field(default_factory=list)
    current_rung: int = 0
    recorded: Dict[str, float] = field(default_factory=dict)
    resume_queue: List[str] = field(default_factory=list)

    @property
    def tag(self) -> str:
        return f"hb{self.series}:s{self.index}"

    @property
    def at_final_rung(self) -> bool:
        return self.current_rung >= len(self.rungs) - 1

    def accepting(self) -> bool:
        return self.current_rung == 0 and len(self.assigned) < self.trial_count


def hyperband_brackets(config: HyperBandConfig, series: int = 0) -> List[Bracket]:
    """The bracket roster for one HyperBand iteration.

    s_max = floor(log_eta(R)); B = (s_max+1)*R; bracket s gets
    n = ceil((B/R) * eta^s / (s+1)) trials starting at r = R * eta^(-s) steps,
    with rung sizes n_i = floor(n / eta^i) and resources r_i = r * eta^i
    (rounded half-up to an integer step, floored at 1).
    """
    R = config.max_resource
    eta = config.reduction_factor
    s_max = 0
    while eta ** (s_max + 1) <= R:
        s_max += 1
    brackets = []
    for s in range(s_max, -1, -1):
        # B/R is exactly s_max+1; keep the arithmetic integral for exactness
        n = -(-(s_max + 1) * eta**s // (s + 1))  # ceil division
        rungs = []
        for i in range(s + 1):
            n_i = n // eta**i
            r_i = max(1, _round_half_up_ratio(R, eta ** (s - i)))
            rungs.append((n_i, r_i))
        brackets.append(
            Bracket(
                series=series,
                index=s,
                trial_count=n,
                initial_resource=rungs[0][1],
                rungs=rungs,
            )
        )
    return brackets


class HyperBandScheduler(TrialScheduler):
    kind = "hyperband"

    def __init__(self, config: HyperBandConfig):
        self.config = config
        self.brackets: List[Bracket] = hyperband_brackets(config, series=0)
        self._membership: Dict[str, int] = {}  # trial id -> index into self.brackets
        self._series_count = 1

    # -- assignment ------------------------------------------------------

    def _assign(self, trial_id: str, pool: TrialPoolView) -> Bracket:
        for idx, bracket in enumerate(self.brackets):
            if bracket.accepting():
                bracket.assigned.append(trial_id)
                bracket.live.append(trial_id)
                self._membership[trial_id] = idx
                pool.set_bracket_tag(trial_id, bracket.tag)
                return bracket
        # every bracket is full or past rung 0: open a new series
        self.brackets.extend(hyperband_brackets(self.config, series=self._series_count))
        self._series_count += 1
        return self._assign(trial_id, pool)

    def _ensure_assignments(self, pool: TrialPoolView) -> None:
        for trial in pool.trials_in_order():
            if trial.id not in self._membership and not trial.status.is_terminal:
                self._assign(trial.id, pool)

    def _bracket_of(self, trial_id: str) -> Bracket:
        idx = self._membership.get(trial_id)
        if idx is None:
            raise TrialWithoutBracket(f"trial {trial_id!r} was never assigned to a bracket")
        return self.brackets[idx]

    # -- rung resolution ---------------------------------------------------

    def _resolve_rung(self, bracket: Bracket, pool: TrialPoolView) -> Tuple[List[str], List[str]]:
        """Promote the best floor(m/eta) recorded members, stop the rest.

        Ties break by trial id lexicographically; errored members carry the
        +inf sentinel and therefore rank worst.
        """
        eta = self.config.reduction_factor
        ranked = sorted(bracket.recorded.items(), key=lambda kv: (kv[1], kv[0]))
        keep = len(ranked) // eta
        winners = [tid for tid, _ in ranked[:keep]]
        losers = [tid for tid, _ in ranked[keep:]]
        bracket.current_rung += 1
        # a promoted member that already finished (threshold/error) can never
        # record again; carrying it would deadlock the next rung
        def resumable(tid: str) -> bool:
            trial = pool.get(tid)
            return trial is not None and not trial.status.is_terminal

        bracket.live = [tid for tid in winners if resumable(tid)]
        bracket.recorded = {}
        bracket.resume_queue.extend(bracket.live)
        return winners, losers

    def _record_and_maybe_resolve(
        self, bracket: Bracket, trial_id: str, value: float, pool: TrialPoolView
    ) -> Optional[Tuple[List[str], List[str]]]:
        bracket.recorded[trial_id] = value
        if len(bracket.recorded) >= len(bracket.live):
            return self._resolve_rung(bracket, pool)
        return None

    # -- scheduler interface ----------------------------------------------

    def on_result(self, trial: Trial, result: ResultRecord, pool: TrialPoolView) -> TrialDecision:
        self._ensure_assignments(pool)
        bracket = self._bracket_of(trial.id)
        if trial.id not in bracket.live:
            # culled from its cohort at an earlier resolution (seen again only
            # on crash-replay); re-enforce the stop
            return TrialDecision.stop()
        if bracket.at_final_rung:
            # final rung runs to R steps; the engine's stopping criteria complete it
            return TrialDecision.continue_()
        rung_resource = bracket.rungs[bracket.current_rung][1]
        if result.step < rung_resource:
            return TrialDecision.continue_()
        if trial.id in bracket.recorded:
            # already recorded at this rung (crash-replay); park again until
            # the rung resolves
            return TrialDecision.pause()
        value = pool.objective.canonical(result.metrics)
        resolution = self._record_and_maybe_resolve(bracket, trial.id, value, pool)
        if resolution is None:
            return TrialDecision.pause()
        winners, losers = resolution
        for tid in losers:
            if tid != trial.id:
                pool.request_stop(tid)
        if trial.id in winners:
            return TrialDecision.pause()
        return TrialDecision.stop()

    def on_trial_error(self, trial: Trial, pool: TrialPoolView) -> None:
        self._on_member_terminal(trial, pool)

    def on_trial_complete(self, trial: Trial, pool: TrialPoolView) -> None:
        self._on_member_terminal(trial, pool)

    def _on_member_terminal(self, trial: Trial, pool: TrialPoolView) -> None:
        idx = self._membership.get(trial.id)
        if idx is None:
            return
        bracket = self.brackets[idx]
        if bracket.at_final_rung or trial.id not in bracket.live:
            return
        if trial.id in bracket.recorded:
            return
        value = pool.canonical_latest(trial)
        if value is None:
            value = math.inf
        resolution = self._record_and_maybe_resolve(bracket, trial.id, value, pool)
        if resolution is not None:
            _, losers = resolution
            for tid in losers:
                if tid != trial.id:
                    pool.request_stop(tid)

    def choose_trial_to_run(self, pool: TrialPoolView) -> Optional[str]:
        self._ensure_assignments(pool)
        # resume promoted trials from the most-complete bracket first
        order = sorted(
            range(len(self.brackets)),
            key=lambda i: (-self.brackets[i].current_rung, self.brackets[i].series, -self.brackets[i].index),
        )
        for idx in order:
            bracket = self.brackets[idx]
            for tid in list(bracket.resume_queue):
                trial = pool.get(tid)
                if trial is None or trial.status.is_terminal:
                    bracket.resume_queue.remove(tid)
                    continue
                if trial.status is TrialStatus.PAUSED and trial.resources.fits(pool.free):
                    bracket.resume_queue.remove(tid)
                    return tid
        # otherwise start fresh trials, filling the earliest unfilled bracket
        for bracket in self.brackets:
            for tid in bracket.assigned:
                trial = pool.get(tid)
                if trial is not None and trial.status is TrialStatus.PENDING and trial.resources.fits(pool.free):
                    return tid
        return None

    # -- state ------------------------------------------------------------

    @staticmethod
    def _enc(v: float):
        return "inf" if math.isinf(v) else v

    @staticmethod
    def _dec(v) -> float:
        return math.inf if v == "inf" else float(v)

    def export_state(self) -> dict:
        return {
            "series_count": self._series_count,
            "brackets": [
                {
                    "series": b.series,
                    "index": b.index,
                    "trial_count": b.trial_count,
                    "initial_resource": b.initial_resource,
                    "rungs": [list(r) for r in b.rungs],
                    "assigned": list(b.assigned),
                    "live": list(b.live),
                    "current_rung": b.current_rung,
                    "recorded": {t: self._enc(v) for t, v in b.recorded.items()},
                    "resume_queue": list(b.resume_queue),
                }
                for b in self.brackets
            ],
            "membership": dict(self._membership),
        }

    def import_state(self, doc: dict) -> None:
        self._series_count = int(doc["series_count"])
        self.brackets = [
            Bracket(
                series=int(b["series"]),
                index=int(b["index"]),
                trial_count=int(b["trial_count"]),
                initial_resource=int(b["initial_resource"]),
                rungs=[(int(n), int(r)) for n, r in b["rungs"]],
                assigned=[str(t) for t in b["assigned"]],
                live=[str(t) for t in b["live"]],
                current_rung=int(b["current_rung"]),
                recorded={str(t): self._dec(v) for t, v in b["recorded"].items()},
                resume_queue=[str(t) for t in b["resume_queue"]],
            )
            for b in doc["brackets"]
        ]
        self._membership = {str(t): int(i) for t, i in doc["membership"].items()}
