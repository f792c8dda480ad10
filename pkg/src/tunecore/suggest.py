"""Suggestion sources append new trials during an experiment.

Random search is the built-in source; anything implementing next_config /
remaining / export_state / import_state can stand in for it.
"""

from __future__ import annotations

from typing import Optional

from .rng import XorShift128Plus, derive_seed
from .space import ParamSpace, sample_config


class RandomSearch:
    """Seeded random sampling of the whole space, bounded by max_trials."""

    kind = "random"

    def __init__(self, space: ParamSpace, seed: int, max_trials: int):
        if max_trials < 1:
            raise ValueError(f"max_trials must be >= 1, got {max_trials}")
        self.space = space
        self.max_trials = max_trials
        self.emitted = 0
        self.rng = XorShift128Plus(derive_seed(seed, "suggestion"))

    def remaining(self) -> int:
        return self.max_trials - self.emitted

    def next_config(self) -> Optional[dict]:
        if self.remaining() <= 0:
            return None
        self.emitted += 1
        return sample_config(self.space, self.rng)

    def export_state(self) -> dict:
        return {"emitted": self.emitted, "rng": self.rng.getstate()}

    def import_state(self, doc: dict) -> None:
        self.emitted = int(doc["emitted"])
        self.rng.setstate(doc["rng"])
