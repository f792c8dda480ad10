import pytest

from tunecore.schedulers import TrialPoolView
from tunecore.trials import (
    ObjectiveSpec,
    ResourceRequest,
    ResultRecord,
    Trial,
    TrialStatus,
)

MIN_LOSS = ObjectiveSpec(metric="loss", mode="min")


def make_trial(tid, steps=(), status=TrialStatus.RUNNING, config=None, cpus=0.0, **kwargs):
    """Trial with a loss history; `steps` is a list of (step, loss) or plain losses."""
    results = []
    for i, item in enumerate(steps):
        if isinstance(item, tuple):
            step, loss = item
        else:
            step, loss = i + 1, item
        results.append(ResultRecord(step=step, metrics={"loss": loss}))
    return Trial(
        id=tid,
        config=config or {"lr": 0.1},
        status=status,
        results=tuple(results),
        resources=ResourceRequest(cpus=cpus),
        **kwargs,
    )


def make_pool(trials, free_cpus=4.0, free_gpus=0.0, objective=MIN_LOSS, **hooks):
    return TrialPoolView(
        {t.id: t for t in trials},
        ResourceRequest(cpus=free_cpus, gpus=free_gpus),
        objective,
        **hooks,
    )


@pytest.fixture
def objective():
    return MIN_LOSS


def sim_config_doc(
    outdir,
    *,
    space=None,
    scheduler=None,
    trainable="sim:exp-curve",
    max_steps=3,
    total_cpus=2.0,
    per_trial_cpus=1.0,
    seed=0,
    suggestion=None,
    **extra,
):
    """Config-document builder shared by engine/CLI/acceptance tests."""
    doc = {
        "name": "test-exp",
        "trainable": trainable,
        "space": space
        or {
            "final_loss": {"grid": [0.2, 0.5, 0.8]},
            "tau": {"grid": [1.0, 2.0]},
        },
        "objective": {"metric": "loss", "mode": "min"},
        "scheduler": scheduler or {"kind": "fifo"},
        "resources": {
            "total": {"cpus": total_cpus, "gpus": 0},
            "per_trial": {"cpus": per_trial_cpus, "gpus": 0},
        },
        "stopping": {"max_steps_per_trial": max_steps},
        "seed": seed,
        "output_dir": str(outdir),
    }
    if suggestion:
        doc["suggestion"] = suggestion
    doc.update(extra)
    return doc
