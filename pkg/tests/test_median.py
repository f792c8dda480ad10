import random

from tunecore.schedulers import MedianStoppingConfig, MedianStoppingRule
from tunecore.trials import DecisionKind

from conftest import make_pool, make_trial


def decide(trial, others, cfg=MedianStoppingConfig()):
    sched = MedianStoppingRule(cfg)
    pool = make_pool([trial] + others)
    return sched.on_result(trial, trial.results[-1], pool)


class TestMedianScenario:
    def test_spec_scenario_stops_trailing_trial(self):
        # oracle, by hand: A avg (1.0+0.9)/2 = 0.95; B avg (0.5+0.4)/2 = 0.45;
        # median = (0.95+0.45)/2 = 0.70; C best-so-far 0.94 > 0.70 -> STOP
        a = make_trial("tA", steps=[1.0, 0.9])
        b = make_trial("tB", steps=[0.5, 0.4])
        c = make_trial("tC", steps=[0.95, 0.94])
        assert decide(c, [a, b]).kind is DecisionKind.STOP

    def test_single_comparison_trial_continues(self):
        a = make_trial("tA", steps=[0.1, 0.1])
        c = make_trial("tC", steps=[0.9, 0.9])
        assert decide(c, [a]).kind is DecisionKind.CONTINUE

    def test_exactly_median_continues(self):
        a = make_trial("tA", steps=[1.0, 0.9])  # avg 0.95
        b = make_trial("tB", steps=[0.5, 0.4])  # avg 0.45
        c = make_trial("tC", steps=[0.8, 0.7])  # best 0.70 == median
        assert decide(c, [a, b]).kind is DecisionKind.CONTINUE

    def test_grace_period(self):
        a = make_trial("tA", steps=[0.1])
        b = make_trial("tB", steps=[0.1])
        c = make_trial("tC", steps=[0.9])
        cfg = MedianStoppingConfig(grace_period=2)
        assert decide(c, [a, b], cfg).kind is DecisionKind.CONTINUE
        # and once past the grace period the same pool stops it
        c2 = make_trial("tC", steps=[0.9, 0.9])
        a2 = make_trial("tA", steps=[0.1, 0.1])
        b2 = make_trial("tB", steps=[0.1, 0.1])
        assert decide(c2, [a2, b2], cfg).kind is DecisionKind.STOP

    def test_running_averages_use_comparable_steps_only(self):
        # other trial has later results which must not count at step 1
        a = make_trial("tA", steps=[1.0, 0.0, 0.0])
        b = make_trial("tB", steps=[1.0, 0.0, 0.0])
        c = make_trial("tC", steps=[0.99])
        # at step 1 the averages are [1.0, 1.0], median 1.0; best 0.99 <= 1.0
        assert decide(c, [a, b]).kind is DecisionKind.CONTINUE


class TestMonotonicity:
    def test_lowering_another_average_never_rescues(self):
        rng = random.Random(42)
        flips = 0
        for _ in range(1000):
            n_others = rng.randint(2, 6)
            n_steps = rng.randint(1, 5)
            others = [
                make_trial(f"o{i}", steps=[rng.uniform(0, 1) for _ in range(n_steps)])
                for i in range(n_others)
            ]
            trial = make_trial("tX", steps=[rng.uniform(0, 1) for _ in range(n_steps)])
            before = decide(trial, others).kind
            # perturb: lower one other trial's losses
            victim = rng.randrange(n_others)
            lowered = make_trial(
                f"o{victim}",
                steps=[max(0.0, r.metrics["loss"] - rng.uniform(0, 0.5)) for r in others[victim].results],
            )
            perturbed = others[:victim] + [lowered] + others[victim + 1:]
            after = decide(trial, perturbed).kind
            if before is DecisionKind.STOP and after is DecisionKind.CONTINUE:
                flips += 1
        assert flips == 0
