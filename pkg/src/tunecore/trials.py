"""Domain types for trials: results, lifecycle state machine, and scheduler decisions.

Trial values are immutable snapshots; the engine replaces them wholesale inside
its single logical event loop, so instances can be handed to schedulers without
copying or locking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from types import MappingProxyType
from typing import Any, Mapping, Optional

from .errors import (
    IllegalTransition,
    MissingObjectiveMetric,
    NonFiniteMetric,
    NonMonotonicStep,
)

ConfigValue = Any  # real | integer | string
ConfigMap = Mapping[str, ConfigValue]

# Sentinel used when ranking errored trials inside schedulers; kept out of
# metrics so the finiteness invariant on ResultRecord holds.
ERRORED_OBJECTIVE = math.inf


class TrialStatus(Enum):
    PENDING = "pending"
    RUNNING = "running"
    PAUSED = "paused"
    COMPLETED = "completed"
    STOPPED = "stopped"
    ERRORED = "errored"

    @property
    def is_terminal(self) -> bool:
        return self in _TERMINAL


_TERMINAL = frozenset(
    {TrialStatus.COMPLETED, TrialStatus.STOPPED, TrialStatus.ERRORED}
)

LIFECYCLE_EVENTS = ("start", "pause", "resume", "complete", "stop", "error")

# Legal (status, event) -> status pairs. Everything else is IllegalTransition.
# PAUSED + stop is allowed so synchronous HyperBand can cull rung losers that
# are already parked.
TRANSITIONS: Mapping[tuple, TrialStatus] = MappingProxyType(
    {
        (TrialStatus.PENDING, "start"): TrialStatus.RUNNING,
        (TrialStatus.RUNNING, "pause"): TrialStatus.PAUSED,
        (TrialStatus.PAUSED, "resume"): TrialStatus.RUNNING,
        (TrialStatus.RUNNING, "complete"): TrialStatus.COMPLETED,
        (TrialStatus.RUNNING, "stop"): TrialStatus.STOPPED,
        (TrialStatus.RUNNING, "error"): TrialStatus.ERRORED,
        (TrialStatus.PAUSED, "stop"): TrialStatus.STOPPED,
    }
)


def _check_finite_metrics(metrics: Mapping[str, Any]) -> dict:
    cleaned = {}
    for name, value in metrics.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise NonFiniteMetric(name, value)
        value = float(value)
        if not math.isfinite(value):
            raise NonFiniteMetric(name, value)
        cleaned[str(name)] = value
    return cleaned


@dataclass(frozen=True)
class ResultRecord:
    """One intermediate report: a step counter plus named metric values."""

    step: int
    metrics: Mapping[str, float]
    wall_time: float = 0.0

    def __post_init__(self):
        if isinstance(self.step, bool) or not isinstance(self.step, int) or self.step < 1:
            raise ValueError(f"step must be a positive integer, got {self.step!r}")
        object.__setattr__(self, "metrics", _check_finite_metrics(self.metrics))
        if not isinstance(self.wall_time, (int, float)) or not math.isfinite(self.wall_time) or self.wall_time < 0:
            raise ValueError(f"wall_time must be a nonnegative finite number, got {self.wall_time!r}")
        object.__setattr__(self, "wall_time", float(self.wall_time))


@dataclass(frozen=True)
class ResourceRequest:
    """Per-trial CPU/GPU ask; zero-request trials are admissible."""

    cpus: float = 0.0
    gpus: float = 0.0

    def __post_init__(self):
        for name, v in (("cpus", self.cpus), ("gpus", self.gpus)):
            if not isinstance(v, (int, float)) or not math.isfinite(v) or v < 0:
                raise ValueError(f"{name} must be a nonnegative finite number, got {v!r}")
        object.__setattr__(self, "cpus", float(self.cpus))
        object.__setattr__(self, "gpus", float(self.gpus))

    def fits(self, free: "ResourceRequest", eps: float = 1e-9) -> bool:
        return self.cpus <= free.cpus + eps and self.gpus <= free.gpus + eps


@dataclass(frozen=True)
class CheckpointRef:
    """Reference to an opaque checkpoint file on disk."""

    trial_id: str
    step: int
    path: str
    digest: str


@dataclass(frozen=True)
class TrialOrigin:
    kind: str  # "initial" | "suggested" | "cloned"
    parent: Optional[str] = None

    def __post_init__(self):
        if self.kind not in ("initial", "suggested", "cloned"):
            raise ValueError(f"unknown origin kind {self.kind!r}")
        if self.kind == "cloned" and not self.parent:
            raise ValueError("cloned origin requires a parent trial id")


INITIAL = TrialOrigin("initial")
SUGGESTED = TrialOrigin("suggested")


@dataclass(frozen=True)
class Trial:
    """A single training run with a fixed (until restarted) hyperparameter config."""

    id: str
    config: ConfigMap
    status: TrialStatus = TrialStatus.PENDING
    results: tuple = ()
    resources: ResourceRequest = ResourceRequest()
    checkpoints: tuple = ()
    # starting state inherited from a clone source at restart; unlike own
    # checkpoints its step may exceed last_step until the first new result
    baseline: Optional[CheckpointRef] = None
    bracket_tag: Optional[str] = None
    origin: TrialOrigin = INITIAL
    error_message: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "config", dict(self.config))
        last = 0
        for r in self.results:
            if r.step <= last:
                raise NonMonotonicStep(last, r.step)
            last = r.step
        latest = self.latest_checkpoint
        if latest is not None and latest.step > self.last_step:
            raise ValueError(
                f"checkpoint step {latest.step} exceeds last result step {self.last_step}"
            )

    @property
    def latest_checkpoint(self) -> Optional[CheckpointRef]:
        return self.checkpoints[-1] if self.checkpoints else None

    @property
    def restore_point(self) -> Optional[CheckpointRef]:
        """The checkpoint a relaunch should restore from (own beats baseline)."""
        return self.latest_checkpoint or self.baseline

    @property
    def last_step(self) -> int:
        return self.results[-1].step if self.results else 0

    @property
    def last_result(self) -> Optional[ResultRecord]:
        return self.results[-1] if self.results else None


class DecisionKind(Enum):
    CONTINUE = "continue"
    PAUSE = "pause"
    STOP = "stop"
    RESTART = "restart"


@dataclass(frozen=True)
class TrialDecision:
    """Scheduler verdict for one result event.

    RESTART carries the replacement config and an optional checkpoint to clone
    training state from; its config keys must match the trial's keys (checked
    at enforcement time by the engine).
    """

    kind: DecisionKind
    new_config: Optional[ConfigMap] = None
    restore_from: Optional[CheckpointRef] = None

    @staticmethod
    def continue_() -> "TrialDecision":
        return TrialDecision(DecisionKind.CONTINUE)

    @staticmethod
    def pause() -> "TrialDecision":
        return TrialDecision(DecisionKind.PAUSE)

    @staticmethod
    def stop() -> "TrialDecision":
        return TrialDecision(DecisionKind.STOP)

    @staticmethod
    def restart(new_config: ConfigMap, restore_from: Optional[CheckpointRef] = None) -> "TrialDecision":
        if new_config is None:
            raise ValueError("restart decision requires a new_config")
        return TrialDecision(DecisionKind.RESTART, dict(new_config), restore_from)


@dataclass(frozen=True)
class ObjectiveSpec:
    """The experiment objective, oriented so smaller-is-better everywhere inside."""

    metric: str
    mode: str = "min"  # "min" | "max"

    def __post_init__(self):
        if self.mode not in ("min", "max"):
            raise ValueError(f"mode must be 'min' or 'max', got {self.mode!r}")

    def canonical(self, metrics: Mapping[str, float]) -> float:
        v = metrics[self.metric]
        return v if self.mode == "min" else -v

    def user_value(self, canonical: float) -> float:
        """Convert a canonical (minimize) value back to the user's orientation."""
        return canonical if self.mode == "min" else -canonical


def apply_transition(trial: Trial, event: str) -> Trial:
    """Apply a lifecycle event, returning the updated trial snapshot."""
    new_status = TRANSITIONS.get((trial.status, event))
    if new_status is None:
        raise IllegalTransition(trial.status, event)
    return replace(trial, status=new_status)


def record_result(trial: Trial, record: ResultRecord, objective: str) -> Trial:
    """Append one result; only RUNNING trials may emit, steps strictly increase."""
    if trial.status is not TrialStatus.RUNNING:
        raise IllegalTransition(trial.status, "record_result")
    if objective not in record.metrics:
        raise MissingObjectiveMetric(objective)
    if record.step <= trial.last_step:
        raise NonMonotonicStep(trial.last_step, record.step)
    return replace(trial, results=trial.results + (record,))


def canonical_best(trial: Trial, objective: ObjectiveSpec) -> Optional[float]:
    """Best-so-far canonical objective over the trial's recorded results."""
    if not trial.results:
        return ERRORED_OBJECTIVE if trial.status is TrialStatus.ERRORED else None
    return min(objective.canonical(r.metrics) for r in trial.results)


def canonical_latest(trial: Trial, objective: ObjectiveSpec) -> Optional[float]:
    """Canonical objective of the most recent result (errored trials rank worst)."""
    if trial.status is TrialStatus.ERRORED:
        return ERRORED_OBJECTIVE
    if not trial.results:
        return None
    return objective.canonical(trial.results[-1].metrics)
