"""Experiment configuration: the declarative JSON schema behind the CLI."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Mapping, Optional, Tuple, Union

from .errors import ConfigInvalid, TuneError
from .schedulers import SCHEDULER_KINDS, make_scheduler
from .sim import SIM_KINDS
from .space import ParamSpace, parse_space, space_to_dict
from .trials import ObjectiveSpec, ResourceRequest


@dataclass(frozen=True)
class SimSpec:
    kind: str


@dataclass(frozen=True)
class CommandSpec:
    argv: Tuple[str, ...]
    env: Mapping[str, str] = field(default_factory=dict)
    workdir: Optional[str] = None

    def __post_init__(self):
        object.__setattr__(self, "argv", tuple(self.argv))
        object.__setattr__(self, "env", dict(self.env))


TrainableSpec = Union[SimSpec, CommandSpec]


@dataclass(frozen=True)
class StoppingCriteria:
    max_steps_per_trial: int
    objective_threshold: Optional[float] = None
    max_total_trials: Optional[int] = None

    def __post_init__(self):
        if not isinstance(self.max_steps_per_trial, int) or self.max_steps_per_trial < 1:
            raise ValueError(
                f"max_steps_per_trial must be a positive integer, got {self.max_steps_per_trial!r}"
            )
        if self.objective_threshold is not None:
            t = float(self.objective_threshold)
            if not math.isfinite(t):
                raise ValueError("objective_threshold must be finite")
            object.__setattr__(self, "objective_threshold", t)
        if self.max_total_trials is not None and (
            not isinstance(self.max_total_trials, int) or self.max_total_trials < 1
        ):
            raise ValueError(
                f"max_total_trials must be a positive integer, got {self.max_total_trials!r}"
            )


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    trainable: TrainableSpec
    space: ParamSpace
    objective: ObjectiveSpec
    scheduler_kind: str
    scheduler_params: Mapping[str, Any]
    total_resources: ResourceRequest
    per_trial_resources: ResourceRequest
    stopping: StoppingCriteria
    seed: int
    output_dir: str
    suggestion_kind: str = "none"  # "none" | "random"
    suggestion_max_trials: Optional[int] = None
    keep_last_checkpoints: int = 2
    snapshot_interval: int = 10

    def __post_init__(self):
        object.__setattr__(self, "scheduler_params", dict(self.scheduler_params))

    def to_dict(self) -> dict:
        if isinstance(self.trainable, SimSpec):
            trainable: Any = f"sim:{self.trainable.kind}"
        else:
            trainable = {
                "cmd": list(self.trainable.argv),
                "env": dict(self.trainable.env),
                "workdir": self.trainable.workdir,
            }
        return {
            "name": self.name,
            "trainable": trainable,
            "space": space_to_dict(self.space),
            "objective": {"metric": self.objective.metric, "mode": self.objective.mode},
            "scheduler": {"kind": self.scheduler_kind, **self.scheduler_params},
            "resources": {
                "total": {"cpus": self.total_resources.cpus, "gpus": self.total_resources.gpus},
                "per_trial": {
                    "cpus": self.per_trial_resources.cpus,
                    "gpus": self.per_trial_resources.gpus,
                },
            },
            "stopping": {
                "max_steps_per_trial": self.stopping.max_steps_per_trial,
                "objective_threshold": self.stopping.objective_threshold,
                "max_total_trials": self.stopping.max_total_trials,
            },
            "seed": self.seed,
            "output_dir": self.output_dir,
            "suggestion": {"kind": self.suggestion_kind, "max_trials": self.suggestion_max_trials},
            "keep_last_checkpoints": self.keep_last_checkpoints,
            "snapshot_interval": self.snapshot_interval,
        }


def _require(doc: Mapping, key: str, field_name: str) -> Any:
    if key not in doc:
        raise ConfigInvalid(field_name, "missing required field")
    return doc[key]


def _parse_trainable(raw: Any) -> TrainableSpec:
    if isinstance(raw, str):
        if not raw.startswith("sim:"):
            raise ConfigInvalid("trainable", f"string trainable must look like 'sim:<kind>', got {raw!r}")
        kind = raw[len("sim:"):]
        if kind not in SIM_KINDS:
            raise ConfigInvalid("trainable", f"unknown sim kind {kind!r} (expected one of {SIM_KINDS})")
        return SimSpec(kind)
    if isinstance(raw, Mapping):
        argv = raw.get("cmd")
        if not isinstance(argv, (list, tuple)) or not argv or not all(isinstance(a, str) for a in argv):
            raise ConfigInvalid("trainable.cmd", "must be a non-empty list of strings")
        env = raw.get("env", {})
        if not isinstance(env, Mapping):
            raise ConfigInvalid("trainable.env", "must be a mapping of strings")
        workdir = raw.get("workdir")
        if workdir is not None and not isinstance(workdir, str):
            raise ConfigInvalid("trainable.workdir", "must be a string path")
        return CommandSpec(tuple(argv), dict(env), workdir)
    raise ConfigInvalid("trainable", f"expected 'sim:<kind>' or {{'cmd': [...]}}, got {raw!r}")


def _parse_resources(raw: Any, field_name: str) -> ResourceRequest:
    if not isinstance(raw, Mapping):
        raise ConfigInvalid(field_name, "must be a mapping with cpus/gpus")
    try:
        return ResourceRequest(cpus=raw.get("cpus", 0), gpus=raw.get("gpus", 0))
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(field_name, str(exc)) from exc


def config_from_dict(doc: Mapping) -> ExperimentConfig:
    """Validate and build an ExperimentConfig from parsed JSON."""
    if not isinstance(doc, Mapping):
        raise ConfigInvalid("<root>", "config must be a JSON object")

    name = _require(doc, "name", "name")
    if not isinstance(name, str) or not name:
        raise ConfigInvalid("name", "must be a non-empty string")

    trainable = _parse_trainable(_require(doc, "trainable", "trainable"))

    try:
        space = parse_space(_require(doc, "space", "space"))
    except TuneError as exc:
        raise ConfigInvalid("space", str(exc)) from exc

    objective_doc = _require(doc, "objective", "objective")
    if not isinstance(objective_doc, Mapping) or "metric" not in objective_doc:
        raise ConfigInvalid("objective", "must be a mapping with 'metric' and optional 'mode'")
    try:
        objective = ObjectiveSpec(
            metric=str(objective_doc["metric"]), mode=objective_doc.get("mode", "min")
        )
    except ValueError as exc:
        raise ConfigInvalid("objective.mode", str(exc)) from exc

    scheduler_doc = _require(doc, "scheduler", "scheduler")
    if not isinstance(scheduler_doc, Mapping) or "kind" not in scheduler_doc:
        raise ConfigInvalid("scheduler", "must be a mapping with a 'kind' field")
    scheduler_kind = scheduler_doc["kind"]
    if scheduler_kind not in SCHEDULER_KINDS:
        raise ConfigInvalid(
            "scheduler.kind", f"unknown scheduler {scheduler_kind!r} (expected one of {SCHEDULER_KINDS})"
        )
    scheduler_params = {k: v for k, v in scheduler_doc.items() if k != "kind"}

    resources_doc = _require(doc, "resources", "resources")
    if not isinstance(resources_doc, Mapping):
        raise ConfigInvalid("resources", "must be a mapping with total/per_trial")
    total = _parse_resources(_require(resources_doc, "total", "resources.total"), "resources.total")
    per_trial = _parse_resources(
        _require(resources_doc, "per_trial", "resources.per_trial"), "resources.per_trial"
    )
    if per_trial.cpus > total.cpus or per_trial.gpus > total.gpus:
        raise ConfigInvalid("resources.per_trial", "per-trial request exceeds total capacity")

    stopping_doc = _require(doc, "stopping", "stopping")
    if not isinstance(stopping_doc, Mapping):
        raise ConfigInvalid("stopping", "must be a mapping")
    try:
        stopping = StoppingCriteria(
            max_steps_per_trial=stopping_doc.get("max_steps_per_trial"),
            objective_threshold=stopping_doc.get("objective_threshold"),
            max_total_trials=stopping_doc.get("max_total_trials"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid("stopping", str(exc)) from exc

    seed = doc.get("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigInvalid("seed", f"must be an integer, got {seed!r}")

    output_dir = _require(doc, "output_dir", "output_dir")
    if not isinstance(output_dir, str) or not output_dir:
        raise ConfigInvalid("output_dir", "must be a non-empty string")

    suggestion_doc = doc.get("suggestion", {"kind": "none"})
    if not isinstance(suggestion_doc, Mapping):
        raise ConfigInvalid("suggestion", "must be a mapping")
    suggestion_kind = suggestion_doc.get("kind", "none")
    if suggestion_kind not in ("none", "random"):
        raise ConfigInvalid("suggestion.kind", f"expected 'none' or 'random', got {suggestion_kind!r}")
    suggestion_max = suggestion_doc.get("max_trials")
    if suggestion_kind == "random":
        if not isinstance(suggestion_max, int) or suggestion_max < 1:
            raise ConfigInvalid(
                "suggestion.max_trials", "random suggestion requires a positive trial budget"
            )
    elif suggestion_max is not None and (not isinstance(suggestion_max, int) or suggestion_max < 1):
        raise ConfigInvalid("suggestion.max_trials", "must be a positive integer when present")

    if not space.is_grid_only() and suggestion_kind == "none":
        raise ConfigInvalid(
            "space",
            "space contains random domains; initial trials require suggestion.kind='random'",
        )

    keep_last = doc.get("keep_last_checkpoints", 2)
    if not isinstance(keep_last, int) or keep_last < 1:
        raise ConfigInvalid("keep_last_checkpoints", "must be a positive integer")
    snapshot_interval = doc.get("snapshot_interval", 10)
    if not isinstance(snapshot_interval, int) or snapshot_interval < 1:
        raise ConfigInvalid("snapshot_interval", "must be a positive integer")

    config = ExperimentConfig(
        name=name,
        trainable=trainable,
        space=space,
        objective=objective,
        scheduler_kind=scheduler_kind,
        scheduler_params=scheduler_params,
        total_resources=total,
        per_trial_resources=per_trial,
        stopping=stopping,
        seed=seed,
        output_dir=output_dir,
        suggestion_kind=suggestion_kind,
        suggestion_max_trials=suggestion_max,
        keep_last_checkpoints=keep_last,
        snapshot_interval=snapshot_interval,
    )
    # fail fast on scheduler parameter problems
    make_scheduler(
        scheduler_kind,
        scheduler_params,
        space=space,
        seed=seed,
        default_max_resource=stopping.max_steps_per_trial,
    )
    return config
