"""Acceptance gate: one test per top-level criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the verdict lines.
"""

import contextlib
import json
import math
import random
import time

import pytest

from tunecore.cli import main as cli_main, rank_trials
from tunecore.config import config_from_dict
from tunecore.engine import run_experiment, resume_experiment
from tunecore.protocol import InitCommand, SaveCommand, StepCommand
from tunecore.schedulers import (
    AshaConfig,
    HyperBandConfig,
    MedianStoppingConfig,
    MedianStoppingRule,
    hyperband_brackets,
)
from tunecore.sim import exp_curve_loss
from tunecore.trials import DecisionKind
from tunecore.workers import SimWorker

from conftest import make_pool, make_trial, sim_config_doc
from test_asha import _Harness as AshaHarness, _simulate as asha_simulate, cfg as asha_cfg
from test_engine import FuzzScheduler
from test_resume import SimulatedCrash, crash_after


@contextlib.contextmanager
def criterion(name, budget_seconds):
    start = time.monotonic()
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {name}: FAIL")
        raise
    elapsed = time.monotonic() - start
    assert elapsed < budget_seconds, f"{name} took {elapsed:.1f}s, budget {budget_seconds}s"
    print(f"ACCEPTANCE {name}: PASS ({elapsed:.2f}s)")


class TestAcceptance:
    def test_c1_hyperband_geometry_oracle(self):
        with criterion("hyperband-geometry", 1.0):
            for R, eta, expected in [
                (81, 3, [(81, 1), (34, 3), (15, 9), (8, 27), (5, 81)]),
                (27, 3, [(27, 1), (12, 3), (6, 9), (4, 27)]),
            ]:
                brackets = hyperband_brackets(HyperBandConfig(max_resource=R, reduction_factor=eta))
                pairs = [(b.trial_count, b.initial_resource) for b in brackets]
                assert pairs == expected
                # independent formula evaluation, in-test
                s_max = int(math.floor(math.log(R) / math.log(eta) + 1e-12))
                B = (s_max + 1) * R
                formula = [
                    (math.ceil((B / R) * eta**s / (s + 1)), max(1, round(R * eta**-s)))
                    for s in range(s_max, -1, -1)
                ]
                assert pairs == formula

    def test_c2_asha_scenario_oracle(self):
        with criterion("asha-scenario", 30.0):
            h = AshaHarness(asha_cfg(r=1, R=9, eta=3))
            transcript = [
                h.report("t1", 1, 0.9).kind,
                h.report("t2", 1, 0.5).kind,
                h.report("t3", 1, 0.3).kind,
                h.report("t4", 1, 0.7).kind,
            ]
            assert transcript == [
                DecisionKind.CONTINUE,
                DecisionKind.CONTINUE,
                DecisionKind.CONTINUE,
                DecisionKind.STOP,
            ]
            # best-at-rung never stopped, 10^3 random arrival orders, 27 trials
            for seed in range(1000):
                rng = random.Random(seed)
                values = rng.sample([i / 1000 for i in range(27)], 27)
                qualities = {f"t{i:02d}": v for i, v in enumerate(values)}
                harness, _, stopped_at = asha_simulate(qualities, rng)
                for milestone, rung in harness.sched.rungs.items():
                    if not rung:
                        continue
                    best_tid = min(rung.items(), key=lambda kv: (kv[1], kv[0]))[0]
                    assert best_tid not in stopped_at or stopped_at[best_tid] > milestone

    def test_c3_median_stopping_oracle(self):
        with criterion("median-stopping", 10.0):
            rule = MedianStoppingRule(MedianStoppingConfig())
            a = make_trial("tA", steps=[1.0, 0.9])
            b = make_trial("tB", steps=[0.5, 0.4])
            c = make_trial("tC", steps=[0.95, 0.94])
            pool = make_pool([a, b, c])
            assert rule.on_result(c, c.results[-1], pool).kind is DecisionKind.STOP
            # boundary: best exactly at the median continues
            c_eq = make_trial("tC", steps=[0.8, 0.7])
            pool_eq = make_pool([a, b, c_eq])
            assert rule.on_result(c_eq, c_eq.results[-1], pool_eq).kind is DecisionKind.CONTINUE
            # monotonicity over 10^3 perturbed pools
            rng = random.Random(7)
            for _ in range(1000):
                n = rng.randint(2, 5)
                steps = rng.randint(1, 4)
                others = [
                    make_trial(f"o{i}", steps=[rng.uniform(0, 1) for _ in range(steps)])
                    for i in range(n)
                ]
                target = make_trial("tX", steps=[rng.uniform(0, 1) for _ in range(steps)])
                before = rule.on_result(target, target.results[-1], make_pool(others + [target])).kind
                victim = rng.randrange(n)
                lowered = make_trial(
                    f"o{victim}",
                    steps=[
                        max(0.0, r.metrics["loss"] - rng.uniform(0, 0.5))
                        for r in others[victim].results
                    ],
                )
                perturbed = others[:victim] + [lowered] + others[victim + 1 :]
                after = rule.on_result(target, target.results[-1], make_pool(perturbed + [target])).kind
                assert not (before is DecisionKind.STOP and after is DecisionKind.CONTINUE)

    def test_c4_pbt_effectiveness(self, tmp_path):
        with criterion("pbt-effectiveness", 30.0):
            common = dict(
                trainable="sim:pbt-quadratic",
                space={"h1": {"uniform": [-1.0, 1.0]}, "h2": {"uniform": [-1.0, 1.0]}},
                suggestion={"kind": "random", "max_trials": 8},
                max_steps=40,
                total_cpus=8.0,
                seed=2024,
            )
            pbt_doc = sim_config_doc(
                tmp_path / "pbt",
                scheduler={"kind": "pbt", "perturbation_interval": 4, "rng_seed": 99},
                **common,
            )
            fifo_doc = sim_config_doc(tmp_path / "fifo", scheduler={"kind": "fifo"}, **common)
            pbt_report = run_experiment(config_from_dict(pbt_doc))
            fifo_report = run_experiment(config_from_dict(fifo_doc))
            # both populations start from the same 8 sampled configs
            from tunecore.space import parse_space
            from tunecore.suggest import RandomSearch

            source = RandomSearch(parse_space(common["space"]), seed=2024, max_trials=8)
            initial_configs = [source.next_config() for _ in range(8)]
            assert [t["config"] for t in fifo_report.trials] == initial_configs
            pbt_snapshot = json.loads((tmp_path / "pbt" / "experiment_state.json").read_text())
            lineage = (tmp_path / "pbt" / "lineage.jsonl").read_text().splitlines()
            assert lineage, "PBT must have exploited at least once"
            # canonical objective is the loss itself (mode=min)
            assert pbt_report.best_value < fifo_report.best_value
            # every restart's source ranked in the top quantile at decision time
            exploit_log = pbt_snapshot["scheduler"]["state"]["exploit_log"]
            assert len(exploit_log) >= len(lineage) > 0
            for entry in exploit_log:
                assert entry["source_rank"] < entry["quantile_size"]

    def test_c5_checkpoint_fidelity(self, tmp_path):
        with criterion("checkpoint-fidelity", 5.0):
            import queue as queue_mod

            for kind, params in (
                ("exp-curve", {"final_loss": 0.2, "tau": 2.0}),
                ("pbt-quadratic", {"h1": -0.4, "h2": 0.3}),
            ):
                for n in (1, 3, 7):
                    for m in (1, 3, 7):
                        straight_q = queue_mod.SimpleQueue()
                        w = SimWorker("s", 1, kind, straight_q)
                        w.send(InitCommand("s", params, None))
                        straight = []
                        for _ in range(n + m):
                            w.send(StepCommand())
                            straight.append(straight_q.get_nowait().payload)

                        q1 = queue_mod.SimpleQueue()
                        w1 = SimWorker("a", 1, kind, q1)
                        w1.send(InitCommand("a", params, None))
                        first = []
                        for _ in range(n):
                            w1.send(StepCommand())
                            first.append(q1.get_nowait().payload)
                        ck = str(tmp_path / f"{kind}-{n}-{m}.ckpt")
                        w1.send(SaveCommand(ck))
                        q1.get_nowait()

                        q2 = queue_mod.SimpleQueue()
                        w2 = SimWorker("b", 1, kind, q2)
                        w2.send(InitCommand("b", params, ck))
                        second = []
                        for _ in range(m):
                            w2.send(StepCommand())
                            second.append(q2.get_nowait().payload)

                        assert first + second == straight  # bit-exact

    def test_c6_crash_resume_determinism(self, tmp_path):
        with criterion("crash-resume", 30.0):
            baseline_doc = sim_config_doc(tmp_path / "base")
            run_experiment(config_from_dict(baseline_doc))
            baseline = json.loads((tmp_path / "base" / "report.json").read_text())
            for kill_at in (5, 11, 23):
                outdir = tmp_path / f"kill{kill_at}"
                doc = sim_config_doc(outdir)
                with pytest.raises(SimulatedCrash):
                    run_experiment(config_from_dict(doc), event_hook=crash_after(kill_at))
                resume_experiment(outdir)
                resumed = json.loads((outdir / "report.json").read_text())
                assert resumed == baseline, f"report mismatch after kill at event {kill_at}"

    def test_c7_resource_safety_fuzz(self, tmp_path):
        with criterion("resource-safety", 60.0):
            events_total = 0
            seed = 0
            while events_total < 10_000:
                seed += 1
                doc = sim_config_doc(
                    tmp_path / f"fuzz{seed}",
                    space={
                        "final_loss": {"grid": [0.2, 0.3, 0.4, 0.5, 0.6, 0.7]},
                        "tau": {"grid": [0.5, 1.0, 2.0]},
                    },
                    max_steps=30,
                    total_cpus=3.0,
                )
                counter = [0]

                def hook(engine, n, counter=counter):
                    engine.check_invariants()
                    counter[0] += 1

                run_experiment(config_from_dict(doc), scheduler=FuzzScheduler(seed), event_hook=hook)
                events_total += counter[0]
            assert events_total >= 10_000

    def test_c9_secondary_protocol_conformance(self, tmp_path):
        import re
        import shutil
        from pathlib import Path

        from tunecore.schedulers import FifoScheduler

        trainer = Path(__file__).resolve().parent.parent / "client" / "dist" / "examples" / "quadratic_trainer.js"
        if not trainer.exists():
            pytest.fail("client SDK not built; run `npm install && npm run build` in client/")
        if shutil.which("node") is None:
            pytest.fail("node is required for the secondary conformance criterion")

        class ForcedSave(FifoScheduler):
            kind = "forced-save"

            def should_checkpoint(self, trial, result, pool):
                return result.step == 3

        with criterion("secondary-protocol-conformance", 30.0):
            doc = {
                "name": "secondary-conformance",
                "trainable": {"cmd": ["node", str(trainer)]},
                "space": {"h1": {"constant": -0.5}, "h2": {"constant": 0.25}},
                "objective": {"metric": "loss", "mode": "min"},
                "scheduler": {"kind": "fifo"},
                "resources": {"total": {"cpus": 1, "gpus": 0}, "per_trial": {"cpus": 1, "gpus": 0}},
                "stopping": {"max_steps_per_trial": 5},
                "seed": 0,
                "output_dir": str(tmp_path / "out"),
            }
            report = run_experiment(config_from_dict(doc), scheduler=ForcedSave())
            assert report.trials[0]["status"] == "completed"

            golden_dir = Path(__file__).parent / "golden"
            masked = re.sub(
                r'"wall_time":[0-9.eE+-]+',
                '"wall_time":0.0',
                (tmp_path / "out" / "results.jsonl").read_text(),
            )
            assert masked == (golden_dir / "secondary_results.jsonl").read_text()
            checkpoint = (tmp_path / "out" / "checkpoints" / "t1" / "step_3.ckpt").read_bytes()
            assert checkpoint == (golden_dir / "secondary_checkpoint.json").read_bytes()
            snapshot = json.loads((tmp_path / "out" / "experiment_state.json").read_text())
            assert [c["step"] for c in snapshot["trials"][0]["checkpoints"]] == [3]

    def test_c8_grid_end_to_end(self, tmp_path, capsys):
        with criterion("grid-end-to-end", 30.0):
            outdir = tmp_path / "out"
            config_path = tmp_path / "config.json"
            config_path.write_text(json.dumps(sim_config_doc(outdir, max_steps=3)))
            assert cli_main(["run", str(config_path)]) == 0
            report = json.loads((outdir / "report.json").read_text())
            assert len(report["trials"]) == 6
            assert all(t["status"] == "completed" for t in report["trials"])
            # cmd_report ranking equals the closed-form oracle's ordering
            _, rows, skipped = rank_trials(outdir, top_n=6)
            assert skipped == 0
            configs = {t["id"]: t["config"] for t in report["trials"]}
            oracle = sorted(
                configs,
                key=lambda tid: (
                    exp_curve_loss(configs[tid]["final_loss"], configs[tid]["tau"], 2),
                    tid,
                ),
            )
            assert [row["trial"] for row in rows] == oracle
