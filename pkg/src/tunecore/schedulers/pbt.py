"""Population-Based Training: at each perturbation interval, bottom-quantile
trials clone a top trial's checkpoint and continue with a perturbed config."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from ..rng import XorShift128Plus
from ..space import Choice, Constant, Grid, LogUniform, ParamSpace, Uniform, clip, sample_domain
from ..trials import ResultRecord, Trial, TrialDecision
from .base import TrialPoolView, TrialScheduler


@dataclass(frozen=True)
class PbtConfig:
    perturbation_interval: int = 4
    quantile_fraction: float = 0.25
    resample_probability: float = 0.25
    perturbation_factors: Tuple[float, float] = (0.8, 1.2)
    rng_seed: int = 0

    def __post_init__(self):
        if not isinstance(self.perturbation_interval, int) or self.perturbation_interval < 1:
            raise ValueError(
                f"perturbation_interval must be a positive integer, got {self.perturbation_interval!r}"
            )
        if not (0.0 < self.quantile_fraction <= 0.5):
            raise ValueError(
                f"quantile_fraction must lie in (0, 0.5], got {self.quantile_fraction!r}"
            )
        if not (0.0 <= self.resample_probability <= 1.0):
            raise ValueError(
                f"resample_probability must lie in [0, 1], got {self.resample_probability!r}"
            )
        f = tuple(float(x) for x in self.perturbation_factors)
        if len(f) != 2 or f[0] == f[1] or any(x <= 0 for x in f):
            raise ValueError(
                f"perturbation_factors must be two distinct positive reals, got {self.perturbation_factors!r}"
            )
        object.__setattr__(self, "perturbation_factors", f)


def explore(config: Dict, space: ParamSpace, cfg: PbtConfig, rng: XorShift128Plus) -> Dict:
    """Perturb a cloned config: numeric domains are rescaled by a random factor
    (or resampled), categorical domains are occasionally resampled, constants
    pass through untouched."""
    out = {}
    for name, domain in space.items():
        value = config[name]
        if isinstance(domain, (Uniform, LogUniform)):
            if rng.uniform() < cfg.resample_probability:
                out[name] = sample_domain(domain, rng.uniform())
            else:
                factors = cfg.perturbation_factors
                idx = min(int(rng.uniform() * len(factors)), len(factors) - 1)
                out[name] = clip(value * factors[idx], domain)
        elif isinstance(domain, (Choice, Grid)):
            if rng.uniform() < cfg.resample_probability:
                out[name] = sample_domain(domain, rng.uniform())
            else:
                out[name] = value
        else:  # Constant
            out[name] = value
    return out


class PopulationBasedTraining(TrialScheduler):
    kind = "pbt"

    def __init__(self, config: PbtConfig, space: ParamSpace):
        self.config = config
        self.space = space
        self.rng = XorShift128Plus(config.rng_seed)
        self.last_perturb: Dict[str, int] = {}
        # provenance of every exploit decision, for audit and tests
        self.exploit_log: List[dict] = []

    def should_checkpoint(self, trial: Trial, result: ResultRecord, pool: TrialPoolView) -> bool:
        # keep fresh clone sources available at every interval boundary
        return result.step % self.config.perturbation_interval == 0

    def on_result(self, trial: Trial, result: ResultRecord, pool: TrialPoolView) -> TrialDecision:
        cfg = self.config
        last = self.last_perturb.get(trial.id, 0)
        if result.step < last + cfg.perturbation_interval:
            return TrialDecision.continue_()
        self.last_perturb[trial.id] = result.step

        population = [t for t in pool.trials_in_order() if not t.status.is_terminal]
        n = len(population)
        if n < 2:
            return TrialDecision.continue_()

        def rank_key(t: Trial):
            value = pool.canonical_latest(t)
            return (math.inf if value is None else value, t.id)

        ranked = sorted(population, key=rank_key)
        cutoff = max(1, int(cfg.quantile_fraction * n))
        bottom_ids = {t.id for t in ranked[n - cutoff:]}
        if trial.id not in bottom_ids:
            return TrialDecision.continue_()

        top = ranked[:cutoff]
        source = top[min(int(self.rng.uniform() * len(top)), len(top) - 1)]
        if source.latest_checkpoint is None:
            # nothing to clone yet; retry at the next interval
            return TrialDecision.continue_()
        new_config = explore(dict(source.config), self.space, cfg, self.rng)
        self.exploit_log.append(
            {
                "trial": trial.id,
                "step": result.step,
                "source": source.id,
                "source_rank": next(i for i, t in enumerate(ranked) if t.id == source.id),
                "population": n,
                "quantile_size": cutoff,
                "checkpoint_step": source.latest_checkpoint.step,
            }
        )
        return TrialDecision.restart(new_config, restore_from=source.latest_checkpoint)

    def export_state(self) -> dict:
        return {
            "last_perturb": dict(self.last_perturb),
            "rng": self.rng.getstate(),
            "exploit_log": list(self.exploit_log),
        }

    def import_state(self, doc: dict) -> None:
        self.last_perturb = {str(t): int(s) for t, s in doc.get("last_perturb", {}).items()}
        self.rng.setstate(doc["rng"])
        self.exploit_log = list(doc.get("exploit_log", []))
