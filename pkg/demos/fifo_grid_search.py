"""Grid search under the FIFO scheduler.

Expands a 3x2 grid over the simulated exp-curve trainable, runs every trial to
completion on 2 CPUs, and prints the ranked outcome table.

    python3 demos/fifo_grid_search.py
"""

import json
import tempfile
from pathlib import Path

from tunecore import config_from_dict, run_experiment
from tunecore.cli import rank_trials

outdir = Path(tempfile.mkdtemp(prefix="tunecore-fifo-"))
config = config_from_dict(
    {
        "name": "fifo-grid-demo",
        "trainable": "sim:exp-curve",
        "space": {
            "final_loss": {"grid": [0.2, 0.5, 0.8]},
            "tau": {"grid": [1.0, 2.0]},
        },
        "objective": {"metric": "loss", "mode": "min"},
        "scheduler": {"kind": "fifo"},
        "resources": {"total": {"cpus": 2, "gpus": 0}, "per_trial": {"cpus": 1, "gpus": 0}},
        "stopping": {"max_steps_per_trial": 5},
        "seed": 0,
        "output_dir": str(outdir),
    }
)

report = run_experiment(config)
print(f"best trial: {report.best_trial} with loss {report.best_value:.4f}\n")

_, rows, _ = rank_trials(outdir)
for rank, row in enumerate(rows, start=1):
    print(f"{rank}. {row['trial']:<4} loss={row['best_value']:.4f} config={json.dumps(row['config'])}")
print(f"\nartifacts in {outdir}")
