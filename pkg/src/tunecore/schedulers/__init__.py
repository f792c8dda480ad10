"""Trial schedulers: FIFO, median stopping, ASHA, HyperBand, and PBT."""

from __future__ import annotations

from typing import Mapping, Optional

from ..errors import ConfigInvalid
from ..rng import derive_seed
from ..space import ParamSpace
from .asha import AshaConfig, AshaScheduler, asha_milestones
from .base import FifoScheduler, TrialPoolView, TrialScheduler, first_fit
from .hyperband import Bracket, HyperBandConfig, HyperBandScheduler, hyperband_brackets
from .median import MedianStoppingConfig, MedianStoppingRule, running_average
from .pbt import PbtConfig, PopulationBasedTraining, explore

SCHEDULER_KINDS = ("fifo", "median", "asha", "hyperband", "pbt")


def make_scheduler(
    kind: str,
    params: Mapping,
    *,
    space: Optional[ParamSpace] = None,
    seed: int = 0,
    default_max_resource: Optional[int] = None,
) -> TrialScheduler:
    """Build a scheduler from config-file parameters.

    asha/hyperband fall back to the experiment's max_steps_per_trial when
    max_resource is not given explicitly.
    """
    params = dict(params)
    try:
        if kind == "fifo":
            return FifoScheduler()
        if kind == "median":
            return MedianStoppingRule(MedianStoppingConfig(**params))
        if kind == "asha":
            params.setdefault("max_resource", default_max_resource)
            if params["max_resource"] is None:
                raise ValueError("asha requires max_resource (or stopping.max_steps_per_trial)")
            return AshaScheduler(AshaConfig(**params))
        if kind == "hyperband":
            params.setdefault("max_resource", default_max_resource)
            if params["max_resource"] is None:
                raise ValueError("hyperband requires max_resource (or stopping.max_steps_per_trial)")
            return HyperBandScheduler(HyperBandConfig(**params))
        if kind == "pbt":
            if space is None:
                raise ValueError("pbt requires the experiment's parameter space")
            if "perturbation_factors" in params:
                params["perturbation_factors"] = tuple(params["perturbation_factors"])
            params.setdefault("rng_seed", derive_seed(seed, "pbt"))
            return PopulationBasedTraining(PbtConfig(**params), space)
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid("scheduler", str(exc)) from exc
    raise ConfigInvalid("scheduler.kind", f"unknown scheduler kind {kind!r} (expected one of {SCHEDULER_KINDS})")


__all__ = [
    "AshaConfig",
    "AshaScheduler",
    "Bracket",
    "FifoScheduler",
    "HyperBandConfig",
    "HyperBandScheduler",
    "MedianStoppingConfig",
    "MedianStoppingRule",
    "PbtConfig",
    "PopulationBasedTraining",
    "SCHEDULER_KINDS",
    "TrialPoolView",
    "TrialScheduler",
    "asha_milestones",
    "explore",
    "first_fit",
    "hyperband_brackets",
    "make_scheduler",
    "running_average",
]
