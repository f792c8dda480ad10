"""Scheduler interface, the trial-pool view schedulers receive, and the FIFO baseline.

Schedulers are invoked serially by the engine loop: `on_result` when a running
trial reports, `choose_trial_to_run` when free resources exist. They return
decisions; the engine enforces them.
"""

from __future__ import annotations

from typing import Callable, Dict, Iterable, List, Mapping, Optional

from ..trials import (
    ObjectiveSpec,
    ResourceRequest,
    ResultRecord,
    Trial,
    TrialDecision,
    TrialStatus,
    canonical_best,
    canonical_latest,
)


class TrialPoolView:
    """Consistent read snapshot of the experiment's trials plus engine hooks.

    `suggest` appends a new PENDING trial (returns its id); `request_stop`
    asks the engine to stop a PAUSED trial after the current callback returns;
    `set_bracket_tag` annotates a trial with opaque scheduler bookkeeping.
    """

    def __init__(
        self,
        trials: Mapping[str, Trial],
        free: ResourceRequest,
        objective: ObjectiveSpec,
        suggest_cb: Optional[Callable[[Mapping], str]] = None,
        stop_cb: Optional[Callable[[str], None]] = None,
        tag_cb: Optional[Callable[[str, str], None]] = None,
    ):
        self._trials = dict(trials)
        self.free = free
        self.objective = objective
        self._suggest_cb = suggest_cb
        self._stop_cb = stop_cb
        self._tag_cb = tag_cb

    @property
    def trials(self) -> Mapping[str, Trial]:
        return self._trials

    def trials_in_order(self) -> List[Trial]:
        """Trials in submission (creation) order."""
        return list(self._trials.values())

    def get(self, trial_id: str) -> Optional[Trial]:
        return self._trials.get(trial_id)

    def canonical_latest(self, trial: Trial) -> Optional[float]:
        return canonical_latest(trial, self.objective)

    def canonical_best(self, trial: Trial) -> Optional[float]:
        return canonical_best(trial, self.objective)

    def suggest(self, config: Mapping) -> str:
        if self._suggest_cb is None:
            raise RuntimeError("this pool view does not accept suggestions")
        return self._suggest_cb(config)

    def request_stop(self, trial_id: str) -> None:
        if self._stop_cb is None:
            raise RuntimeError("this pool view does not accept stop requests")
        self._stop_cb(trial_id)

    def set_bracket_tag(self, trial_id: str, tag: str) -> None:
        if self._tag_cb is not None:
            self._tag_cb(trial_id, tag)


def first_fit(
    pool: TrialPoolView,
    statuses: Iterable[TrialStatus] = (TrialStatus.PENDING,),
) -> Optional[str]:
    """First trial in submission order whose request fits the free snapshot.

    Scanning past a head-of-line trial that does not fit avoids blocking while
    staying deterministic.
    """
    wanted = set(statuses)
    for trial in pool.trials_in_order():
        if trial.status in wanted and trial.resources.fits(pool.free):
            return trial.id
    return None


class TrialScheduler:
    """Base trial scheduler; subclasses implement the model-selection logic."""

    kind: str = "abstract"

    def on_result(self, trial: Trial, result: ResultRecord, pool: TrialPoolView) -> TrialDecision:
        raise NotImplementedError

    def choose_trial_to_run(self, pool: TrialPoolView) -> Optional[str]:
        return first_fit(pool)

    def should_checkpoint(self, trial: Trial, result: ResultRecord, pool: TrialPoolView) -> bool:
        """Whether the engine should snapshot this trial before deciding on `result`."""
        return False

    def on_trial_complete(self, trial: Trial, pool: TrialPoolView) -> None:
        pass

    def on_trial_error(self, trial: Trial, pool: TrialPoolView) -> None:
        pass

    def export_state(self) -> dict:
        """Serializable scheduler state; import_state(export_state()) must be a behavioral identity."""
        return {}

    def import_state(self, doc: dict) -> None:
        pass


class FifoScheduler(TrialScheduler):
    """Runs trials in submission order and never intervenes."""

    kind = "fifo"

    def on_result(self, trial: Trial, result: ResultRecord, pool: TrialPoolView) -> TrialDecision:
        return TrialDecision.continue_()
