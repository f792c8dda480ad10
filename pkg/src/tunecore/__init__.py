"""tunecore: experiment orchestration for hyperparameter search.

Runs many training trials under CPU/GPU resource constraints, routes their
intermediate results through pluggable trial schedulers (FIFO, median
stopping, ASHA, HyperBand, PBT), and enforces the scheduler's decisions with
checkpoint-based fault tolerance.
"""

from .config import (
    CommandSpec,
    ExperimentConfig,
    SimSpec,
    StoppingCriteria,
    config_from_dict,
)
from .engine import Engine, ExperimentReport, ResourcePool, resume_experiment, run_experiment
from .errors import TuneError
from .rng import RNG_ALGORITHM, XorShift128Plus, derive_seed
from .schedulers import (
    AshaConfig,
    AshaScheduler,
    FifoScheduler,
    HyperBandConfig,
    HyperBandScheduler,
    MedianStoppingConfig,
    MedianStoppingRule,
    PbtConfig,
    PopulationBasedTraining,
    TrialPoolView,
    TrialScheduler,
    asha_milestones,
    hyperband_brackets,
    make_scheduler,
)
from .space import (
    Choice,
    Constant,
    Grid,
    LogUniform,
    ParamSpace,
    Uniform,
    expand_grid,
    parse_space,
    sample_config,
)
from .trials import (
    CheckpointRef,
    ObjectiveSpec,
    ResourceRequest,
    ResultRecord,
    Trial,
    TrialDecision,
    TrialStatus,
    apply_transition,
    record_result,
)

__version__ = "0.1.0"

__all__ = [
    "AshaConfig",
    "AshaScheduler",
    "CheckpointRef",
    "Choice",
    "CommandSpec",
    "Constant",
    "Engine",
    "ExperimentConfig",
    "ExperimentReport",
    "FifoScheduler",
    "Grid",
    "HyperBandConfig",
    "HyperBandScheduler",
    "LogUniform",
    "MedianStoppingConfig",
    "MedianStoppingRule",
    "ObjectiveSpec",
    "ParamSpace",
    "PbtConfig",
    "PopulationBasedTraining",
    "RNG_ALGORITHM",
    "ResourcePool",
    "ResourceRequest",
    "ResultRecord",
    "SimSpec",
    "StoppingCriteria",
    "Trial",
    "TrialDecision",
    "TrialPoolView",
    "TrialScheduler",
    "TrialStatus",
    "TuneError",
    "Uniform",
    "XorShift128Plus",
    "apply_transition",
    "asha_milestones",
    "config_from_dict",
    "derive_seed",
    "expand_grid",
    "hyperband_brackets",
    "make_scheduler",
    "parse_space",
    "record_result",
    "resume_experiment",
    "run_experiment",
    "sample_config",
]
