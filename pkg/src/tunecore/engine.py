"""Experiment engine: a single logical event loop binding schedulers to workers.

Responsibilities: resource accounting, decision enforcement, engine-level
stopping criteria, result/lineage logging, console progress, and snapshot-based
crash recovery. Parallelism lives in workers; schedulers and all mutable state
are confined to this loop.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import os
import queue as queue_mod
import time
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .checkpoints import CheckpointStore
from .config import CommandSpec, ExperimentConfig, SimSpec, config_from_dict
from .errors import (
    ConfigInvalid,
    ExperimentError,
    ReleaseWithoutAllocate,
    SchedulerContractViolation,
    SnapshotVersionMismatch,
    TuneError,
)
from .protocol import (
    DoneEvent,
    ErrorEvent,
    InitCommand,
    ResultEvent,
    SaveCommand,
    SavedEvent,
    StepCommand,
    StopCommand,
)
from .rng import RNG_ALGORITHM
from .schedulers import TrialPoolView, TrialScheduler, make_scheduler
from .space import expand_grid
from .suggest import RandomSearch
from .trials import (
    INITIAL,
    SUGGESTED,
    CheckpointRef,
    ObjectiveSpec,
    ResourceRequest,
    ResultRecord,
    Trial,
    TrialDecision,
    DecisionKind,
    TrialOrigin,
    TrialStatus,
    apply_transition,
    canonical_best,
    record_result,
)
from .workers import SimWorker, SubprocessWorker, WorkerEvent, WorkerExit

logger = logging.getLogger("tunecore.engine")

SNAPSHOT_VERSION = 1
SNAPSHOT_FILENAME = "experiment_state.json"
RESULTS_FILENAME = "results.jsonl"
LINEAGE_FILENAME = "lineage.jsonl"
REPORT_FILENAME = "report.json"
SAVE_TIMEOUT_S = 60.0
_EPS = 1e-9


@dataclass
class ResourcePool:
    """Capacity ledger; allocated never exceeds total in any dimension."""

    total: ResourceRequest
    allocated_cpus: float = 0.0
    allocated_gpus: float = 0.0

    @property
    def free(self) -> ResourceRequest:
        return ResourceRequest(
            cpus=max(0.0, self.total.cpus - self.allocated_cpus),
            gpus=max(0.0, self.total.gpus - self.allocated_gpus),
        )

    def try_allocate(self, req: ResourceRequest) -> bool:
        if req.fits(self.free):
            self.allocated_cpus += req.cpus
            self.allocated_gpus += req.gpus
            return True
        return False

    def release(self, req: ResourceRequest) -> None:
        self.allocated_cpus = max(0.0, self.allocated_cpus - req.cpus)
        self.allocated_gpus = max(0.0, self.allocated_gpus - req.gpus)

    def ok(self) -> bool:
        return (
            -_EPS <= self.allocated_cpus <= self.total.cpus + _EPS
            and -_EPS <= self.allocated_gpus <= self.total.gpus + _EPS
        )


@dataclass(frozen=True)
class ExperimentReport:
    name: str
    objective: ObjectiveSpec
    best_trial: Optional[str]
    best_value: Optional[float]
    trials: tuple

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "objective": {"metric": self.objective.metric, "mode": self.objective.mode},
            "best_trial": self.best_trial,
            "best_value": self.best_value,
            "trials": list(self.trials),
        }


@dataclass
class _Runtime:
    """Supervision state for one live worker."""

    worker: object
    gen: int
    awaiting: str = "result"  # "result" | "saved"
    saved_purpose: Optional[str] = None  # "decide" | "pause"
    stashed_result: Optional[ResultRecord] = None
    save_path: Optional[str] = None
    save_deadline: Optional[float] = None
    stop_requested: bool = False
    catch_up_until: int = 0
    inbox: deque = field(default_factory=deque)


class Engine:
    """One experiment run. Construct via run_experiment / resume_experiment."""

    def __init__(
        self,
        config: ExperimentConfig,
        *,
        scheduler: Optional[TrialScheduler] = None,
        event_hook=None,
        max_concurrent: Optional[int] = None,
        _resume_doc: Optional[dict] = None,
    ):
        self.config = config
        self.objective = config.objective
        self.outdir = Path(config.output_dir)
        self.outdir.mkdir(parents=True, exist_ok=True)
        (self.outdir / "logs").mkdir(exist_ok=True)

        self.pool = ResourcePool(total=config.total_resources)
        self.store = CheckpointStore(self.outdir / "checkpoints", keep_last=config.keep_last_checkpoints)
        self.scheduler = scheduler or make_scheduler(
            config.scheduler_kind,
            config.scheduler_params,
            space=config.space,
            seed=config.seed,
            default_max_resource=config.stopping.max_steps_per_trial,
        )
        self.suggestion: Optional[RandomSearch] = None
        if config.suggestion_kind == "random":
            self.suggestion = RandomSearch(config.space, config.seed, config.suggestion_max_trials)

        self.trials: Dict[str, Trial] = {}
        self._alloc: Dict[str, ResourceRequest] = {}
        self._runtimes: Dict[str, _Runtime] = {}
        self._closing: Dict[Tuple[str, int], object] = {}
        self._gens: Dict[str, int] = {}
        self._queue: "queue_mod.SimpleQueue[WorkerEvent]" = queue_mod.SimpleQueue()
        self._events = 0
        self._results_logged = 0
        self._lineage_logged = 0
        self._next_index = 1
        self._event_hook = event_hook
        self._max_concurrent = max_concurrent
        # checkpoint files pruned from trial state but possibly still named by
        # the last on-disk snapshot; deleted only after the next snapshot write
        self._pending_deletes: set = set()

        if _resume_doc is not None:
            self._load_snapshot_doc(_resume_doc)
        else:
            if config.space.is_grid_only():
                initial_configs = expand_grid(config.space)
                cap = config.stopping.max_total_trials
                if cap is not None and len(initial_configs) > cap:
                    raise ConfigInvalid(
                        "stopping.max_total_trials",
                        f"grid produces {len(initial_configs)} trials, above the cap of {cap}",
                    )
                for cfg in initial_configs:
                    self._create_trial(cfg, INITIAL)

        mode = "ab" if _resume_doc is not None else "wb"
        self._results_fh = open(self.outdir / RESULTS_FILENAME, mode)
        self._lineage_fh = open(self.outdir / LINEAGE_FILENAME, mode)

    # ------------------------------------------------------------------
    # trial bookkeeping

    def _create_trial(self, config_map: dict, origin: TrialOrigin) -> str:
        cap = self.config.stopping.max_total_trials
        if cap is not None and len(self.trials) >= cap:
            raise TuneError(f"max_total_trials={cap} reached; cannot create another trial")
        tid = f"t{self._next_index}"
        self._next_index += 1
        self.trials[tid] = Trial(
            id=tid,
            config=config_map,
            status=TrialStatus.PENDING,
            resources=self.config.per_trial_resources,
            origin=origin,
        )
        return tid

    def _view(self) -> Tuple[TrialPoolView, List[str]]:
        stops: List[str] = []
        view = TrialPoolView(
            self.trials,
            self.pool.free,
            self.objective,
            suggest_cb=lambda cfg: self._create_trial(dict(cfg), SUGGESTED),
            stop_cb=stops.append,
            tag_cb=self._set_bracket_tag,
        )
        return view, stops

    def _set_bracket_tag(self, tid: str, tag: str) -> None:
        trial = self.trials.get(tid)
        if trial is not None:
            self.trials[tid] = replace(trial, bracket_tag=tag)

    def _release(self, tid: str) -> None:
        req = self._alloc.pop(tid, None)
        if req is None:
            raise ReleaseWithoutAllocate(f"trial {tid} holds no allocation")
        self.pool.release(req)

    # ------------------------------------------------------------------
    # worker lifecycle

    def _spawn_worker(self, tid: str, config_map: dict, restore_path: Optional[str]):
        gen = self._gens.get(tid, 0) + 1
        self._gens[tid] = gen
        trainable = self.config.trainable
        if isinstance(trainable, SimSpec):
            worker = SimWorker(tid, gen, trainable.kind, self._queue)
        else:
            worker = SubprocessWorker(
                tid,
                gen,
                trainable.argv,
                self._queue,
                env=trainable.env,
                workdir=trainable.workdir,
                stderr_path=str(self.outdir / "logs" / f"{tid}.stderr"),
            )
        worker.send(InitCommand(trial_id=tid, params=config_map, restore_path=restore_path))
        return worker, gen

    def _close_runtime(self, tid: str, *, kill: bool = False) -> None:
        rt = self._runtimes.pop(tid, None)
        if rt is None:
            return
        if kill:
            rt.worker.terminate()
        else:
            rt.worker.send(StopCommand())
            self._closing[(tid, rt.gen)] = rt.worker

    def _reap_closing(self, ev: WorkerEvent) -> None:
        if isinstance(ev.payload, (DoneEvent, WorkerExit)):
            worker = self._closing.pop((ev.trial_id, ev.gen), None)
            if worker is not None:
                worker.terminate()

    # ------------------------------------------------------------------
    # launching

    def _fill_slots(self) -> None:
        while True:
            if self._max_concurrent is not None and len(self._runtimes) >= self._max_concurrent:
                return
            view, stops = self._view()
            try:
                tid = self.scheduler.choose_trial_to_run(view)
            except TuneError:
                raise
            except Exception as exc:
                raise ExperimentError(f"scheduler choose_trial_to_run failed: {exc}") from exc
            self._apply_stop_requests(stops)
            if tid is None:
                if self._maybe_suggest():
                    continue
                return
            trial = self.trials.get(tid)
            if (
                trial is None
                or trial.status not in (TrialStatus.PENDING, TrialStatus.PAUSED)
                or not trial.resources.fits(self.pool.free)
            ):
                status = trial.status.value if trial else "unknown"
                raise SchedulerContractViolation(
                    f"choose_trial_to_run returned {tid!r} (status={status}) which is not runnable"
                )
            self._launch(tid)

    def _maybe_suggest(self) -> bool:
        if self.suggestion is None or self.suggestion.remaining() <= 0:
            return False
        cap = self.config.stopping.max_total_trials
        if cap is not None and len(self.trials) >= cap:
            return False
        if not self.config.per_trial_resources.fits(self.pool.free):
            return False
        config_map = self.suggestion.next_config()
        if config_map is None:
            return False
        self._create_trial(config_map, SUGGESTED)
        return True

    def _launch(self, tid: str) -> None:
        trial = self.trials[tid]
        if not self.pool.try_allocate(trial.resources):
            raise SchedulerContractViolation(f"allocation failed for {tid} despite fit check")
        self._alloc[tid] = trial.resources
        event = "start" if trial.status is TrialStatus.PENDING else "resume"
        self.trials[tid] = apply_transition(trial, event)
        restore = trial.restore_point
        catch_up = trial.last_step if trial.last_step > (restore.step if restore else 0) else 0
        try:
            if restore is not None:
                self.store.verify(restore)
            worker, gen = self._spawn_worker(
                tid, dict(trial.config), restore.path if restore else None
            )
        except (TuneError, OSError) as exc:
            self._fail_trial(tid, f"launch failed: {exc}")
            return
        self._runtimes[tid] = _Runtime(worker=worker, gen=gen, catch_up_until=catch_up)
        worker.send(StepCommand())
        logger.debug("launched %s (gen %d, restore=%s, catch_up=%d)", tid, gen, restore, catch_up)

    # ------------------------------------------------------------------
    # event handling

    def _next_event(self) -> Optional[WorkerEvent]:
        while True:
            now = time.monotonic()
            for tid, rt in list(self._runtimes.items()):
                if rt.awaiting == "saved" and rt.save_deadline is not None and now > rt.save_deadline:
                    self._fail_trial(tid, f"SaveTimeout: worker did not confirm save of {rt.save_path}")
            try:
                return self._queue.get(timeout=0.05)
            except queue_mod.Empty:
                if not self._runtimes:
                    return None

    def _dispatch(self, ev: WorkerEvent) -> None:
        rt = self._runtimes.get(ev.trial_id)
        if rt is None or rt.gen != ev.gen:
            self._reap_closing(ev)
            return
        payload = ev.payload
        if rt.awaiting == "saved" and isinstance(payload, (ResultEvent, DoneEvent)):
            # cooperative clients run one report ahead of the command stream;
            # park their traffic until the in-flight save settles
            rt.inbox.append(ev)
            return
        if isinstance(payload, ResultEvent):
            self._handle_result(ev, rt)
        elif isinstance(payload, SavedEvent):
            self._handle_saved(ev, rt)
        elif isinstance(payload, DoneEvent):
            self._complete_trial(ev.trial_id)
        elif isinstance(payload, ErrorEvent):
            self._fail_trial(ev.trial_id, payload.message)
        elif isinstance(payload, WorkerExit):
            self._fail_trial(
                ev.trial_id,
                f"worker exited with code {payload.returncode}"
                + (f"; stderr tail:\n{payload.stderr_tail}" if payload.stderr_tail else ""),
            )

    def _drain_inbox(self, tid: str) -> None:
        while True:
            rt = self._runtimes.get(tid)
            if rt is None or rt.awaiting == "saved" or not rt.inbox:
                return
            self._dispatch(rt.inbox.popleft())

    def _handle_result(self, ev: WorkerEvent, rt: _Runtime) -> None:
        tid = ev.trial_id
        payload: ResultEvent = ev.payload
        if rt.stop_requested:
            self._terminate_trial(tid, "stop")
            return
        if payload.step < rt.catch_up_until:
            # replaying steps already recorded before a crash; their scheduler
            # effects are all in the snapshot, so just keep stepping
            rt.worker.send(StepCommand())
            return
        if rt.catch_up_until and payload.step == rt.catch_up_until:
            # the crash may have interrupted this step's decision or its
            # checkpoint; re-run the decision path against the stored record
            # (stateful schedulers treat the replay idempotently)
            rt.catch_up_until = 0
            trial = self.trials[tid]
            rec = trial.results[-1]
            view, stops = self._view()
            wants_checkpoint = self.scheduler.should_checkpoint(trial, rec, view)
            self._apply_stop_requests(stops)
            if wants_checkpoint and (
                trial.latest_checkpoint is None or trial.latest_checkpoint.step < rec.step
            ):
                self._send_save(tid, rt, purpose="decide", stash=rec)
                return
            self._decide(tid, rec)
            return
        trial = self.trials[tid]
        try:
            rec = ResultRecord(step=payload.step, metrics=payload.metrics, wall_time=ev.wall_time)
            updated = record_result(trial, rec, self.objective.metric)
        except TuneError as exc:
            self._fail_trial(tid, f"rejected result: {exc}")
            return
        self.trials[tid] = updated
        self._log_result(tid, rec)

        canonical = self.objective.canonical(rec.metrics)
        stopping = self.config.stopping
        if rec.step >= stopping.max_steps_per_trial or (
            stopping.objective_threshold is not None and canonical <= stopping.objective_threshold
        ):
            self._complete_trial(tid)
            return

        view, stops = self._view()
        wants_checkpoint = self.scheduler.should_checkpoint(updated, rec, view)
        self._apply_stop_requests(stops)
        if wants_checkpoint and (
            updated.latest_checkpoint is None or updated.latest_checkpoint.step < rec.step
        ):
            self._send_save(tid, rt, purpose="decide", stash=rec)
            return
        self._decide(tid, rec)

    def _decide(self, tid: str, rec: ResultRecord) -> None:
        trial = self.trials[tid]
        view, stops = self._view()
        try:
            decision = self.scheduler.on_result(trial, rec, view)
        except TuneError:
            raise
        except Exception as exc:
            raise ExperimentError(f"scheduler on_result failed for {tid}: {exc}") from exc
        self._apply_stop_requests(stops)
        if not isinstance(decision, TrialDecision):
            raise SchedulerContractViolation(f"scheduler returned {decision!r} instead of a TrialDecision")
        rt = self._runtimes.get(tid)
        if rt is None:  # trial was culled by a stop request during the callback
            return
        if decision.kind is DecisionKind.CONTINUE:
            if rt.stop_requested:
                self._terminate_trial(tid, "stop")
                return
            rt.awaiting = "result"
            rt.worker.send(StepCommand())
        elif decision.kind is DecisionKind.PAUSE:
            trial = self.trials[tid]
            if trial.latest_checkpoint is not None and trial.latest_checkpoint.step == trial.last_step:
                self._finish_pause(tid)
            else:
                self._send_save(tid, rt, purpose="pause")
        elif decision.kind is DecisionKind.STOP:
            self._terminate_trial(tid, "stop")
        elif decision.kind is DecisionKind.RESTART:
            self._restart_trial(tid, decision)
        else:  # pragma: no cover - enum is closed
            raise SchedulerContractViolation(f"unknown decision {decision.kind!r}")

    def _send_save(self, tid: str, rt: _Runtime, purpose: str, stash: Optional[ResultRecord] = None) -> None:
        trial = self.trials[tid]
        path = self.store.path_for(tid, trial.last_step)
        self._pending_deletes.discard(path)
        rt.awaiting = "saved"
        rt.saved_purpose = purpose
        rt.stashed_result = stash
        rt.save_path = path
        rt.save_deadline = time.monotonic() + SAVE_TIMEOUT_S
        rt.worker.send(SaveCommand(path=path))

    def _handle_saved(self, ev: WorkerEvent, rt: _Runtime) -> None:
        tid = ev.trial_id
        if rt.awaiting != "saved":
            logger.warning("unsolicited saved event from %s ignored", tid)
            return
        trial = self.trials[tid]
        # the state in the file corresponds to the trial's last recorded step
        # (cooperative clients may have reported once more since the request)
        try:
            ref, refs, pruned = self.store.record_saved(trial, ev.payload.path, trial.last_step)
        except TuneError as exc:
            self._fail_trial(tid, f"checkpoint save failed: {exc}")
            return
        self._pending_deletes.update(pruned)
        self.trials[tid] = replace(trial, checkpoints=refs)
        purpose, stash = rt.saved_purpose, rt.stashed_result
        rt.awaiting = "result"
        rt.saved_purpose = None
        rt.stashed_result = None
        rt.save_path = None
        rt.save_deadline = None
        if purpose == "pause" or rt.stop_requested:
            self._finish_pause(tid)
        elif purpose == "decide":
            self._decide(tid, stash)
        self._drain_inbox(tid)

    def _finish_pause(self, tid: str) -> None:
        rt = self._runtimes.get(tid)
        stop_requested = rt.stop_requested if rt else False
        self._close_runtime(tid)
        self._release(tid)
        event = "stop" if stop_requested else "pause"
        self.trials[tid] = apply_transition(self.trials[tid], event)

    def _terminate_trial(self, tid: str, event: str) -> None:
        self._close_runtime(tid)
        self._release(tid)
        self.trials[tid] = apply_transition(self.trials[tid], event)

    def _complete_trial(self, tid: str) -> None:
        self._terminate_trial(tid, "complete")
        view, stops = self._view()
        try:
            self.scheduler.on_trial_complete(self.trials[tid], view)
        except TuneError:
            raise
        except Exception as exc:
            raise ExperimentError(f"scheduler on_trial_complete failed: {exc}") from exc
        self._apply_stop_requests(stops)

    def _fail_trial(self, tid: str, message: str) -> None:
        self._close_runtime(tid, kill=True)
        if tid in self._alloc:
            self._release(tid)
        trial = self.trials[tid]
        if trial.status is TrialStatus.RUNNING:
            trial = apply_transition(trial, "error")
        self.trials[tid] = replace(trial, error_message=message)
        logger.warning("trial %s errored: %s", tid, message.splitlines()[0] if message else "")
        view, stops = self._view()
        try:
            self.scheduler.on_trial_error(self.trials[tid], view)
        except TuneError:
            raise
        except Exception as exc:
            raise ExperimentError(f"scheduler on_trial_error failed: {exc}") from exc
        self._apply_stop_requests(stops)

    def _restart_trial(self, tid: str, decision: TrialDecision) -> None:
        trial = self.trials[tid]
        if set(decision.new_config.keys()) != set(trial.config.keys()):
            raise SchedulerContractViolation(
                f"restart config keys {sorted(decision.new_config)} != trial config keys {sorted(trial.config)}"
            )
        ref = decision.restore_from
        self._log_lineage(
            {
                "trial": tid,
                "event": "restart",
                "source": ref.trial_id if ref else None,
                "checkpoint_step": ref.step if ref else None,
                "new_config": dict(decision.new_config),
            }
        )
        baseline = None
        if ref is not None:
            try:
                baseline = self.store.copy_baseline(ref, tid)
            except TuneError as exc:
                self._fail_trial(tid, f"restart restore failed: {exc}")
                return
            self._pending_deletes.discard(baseline.path)
        self._close_runtime(tid)
        keep = baseline.path if baseline else None
        self._pending_deletes.update(self.store.discard_paths(trial.checkpoints, keep_path=keep))
        if trial.baseline is not None and (baseline is None or trial.baseline.path != baseline.path):
            self._pending_deletes.add(trial.baseline.path)
        origin = TrialOrigin("cloned", ref.trial_id) if ref is not None else trial.origin
        self.trials[tid] = replace(
            trial,
            config=dict(decision.new_config),
            results=(),
            checkpoints=(),
            baseline=baseline,
            origin=origin,
        )
        try:
            worker, gen = self._spawn_worker(
                tid, dict(decision.new_config), baseline.path if baseline else None
            )
        except (TuneError, OSError) as exc:
            self._fail_trial(tid, f"restart launch failed: {exc}")
            return
        self._runtimes[tid] = _Runtime(worker=worker, gen=gen)
        worker.send(StepCommand())

    def _apply_stop_requests(self, stops: List[str]) -> None:
        for tid in stops:
            trial = self.trials.get(tid)
            if trial is None:
                continue
            if trial.status is TrialStatus.PAUSED:
                self.trials[tid] = apply_transition(trial, "stop")
            elif trial.status is TrialStatus.RUNNING and tid in self._runtimes:
                self._runtimes[tid].stop_requested = True
            elif not trial.status.is_terminal:
                logger.warning("stop request for %s in state %s ignored", tid, trial.status.value)

    # ------------------------------------------------------------------
    # logs / snapshot / report

    def _log_result(self, tid: str, rec: ResultRecord) -> None:
        line = json.dumps(
            {"trial": tid, "step": rec.step, "metrics": dict(rec.metrics), "wall_time": rec.wall_time},
            separators=(",", ":"),
            allow_nan=False,
        )
        self._results_fh.write(line.encode("utf-8") + b"\n")
        self._results_fh.flush()
        self._results_logged += 1

    def _log_lineage(self, doc: dict) -> None:
        self._lineage_fh.write(json.dumps(doc, separators=(",", ":"), allow_nan=False).encode("utf-8") + b"\n")
        self._lineage_fh.flush()
        self._lineage_logged += 1

    def _rel_path(self, path: str) -> str:
        try:
            return os.path.relpath(path, self.outdir)
        except ValueError:
            return path

    def _abs_path(self, path: str) -> str:
        return path if os.path.isabs(path) else str(self.outdir / path)

    def _encode_trial(self, trial: Trial) -> dict:
        return {
            "id": trial.id,
            "config": dict(trial.config),
            "status": trial.status.value,
            "origin": {"kind": trial.origin.kind, "parent": trial.origin.parent},
            "bracket_tag": trial.bracket_tag,
            "error_message": trial.error_message,
            "results": [
                {"step": r.step, "metrics": dict(r.metrics), "wall_time": r.wall_time}
                for r in trial.results
            ],
            "checkpoints": [
                {"step": c.step, "path": self._rel_path(c.path), "digest": c.digest}
                for c in trial.checkpoints
            ],
            "baseline": None
            if trial.baseline is None
            else {
                "step": trial.baseline.step,
                "path": self._rel_path(trial.baseline.path),
                "digest": trial.baseline.digest,
            },
        }

    def _decode_trial(self, doc: dict) -> Trial:
        status = TrialStatus(doc["status"])
        results = tuple(
            ResultRecord(step=r["step"], metrics=r["metrics"], wall_time=r["wall_time"])
            for r in doc["results"]
        )
        checkpoints = tuple(
            CheckpointRef(
                trial_id=doc["id"], step=c["step"], path=self._abs_path(c["path"]), digest=c["digest"]
            )
            for c in doc["checkpoints"]
        )
        origin_doc = doc.get("origin", {"kind": "initial", "parent": None})
        baseline_doc = doc.get("baseline")
        baseline = None
        if baseline_doc is not None:
            baseline = CheckpointRef(
                trial_id=doc["id"],
                step=baseline_doc["step"],
                path=self._abs_path(baseline_doc["path"]),
                digest=baseline_doc["digest"],
            )
        return Trial(
            id=doc["id"],
            config=doc["config"],
            status=status,
            results=results,
            resources=self.config.per_trial_resources,
            checkpoints=checkpoints,
            baseline=baseline,
            bracket_tag=doc.get("bracket_tag"),
            origin=TrialOrigin(origin_doc["kind"], origin_doc.get("parent")),
            error_message=doc.get("error_message"),
        )

    def snapshot_doc(self) -> dict:
        doc = {
            "version": SNAPSHOT_VERSION,
            "rng_algorithm": RNG_ALGORITHM,
            "event_counter": self._events,
            "results_logged": self._results_logged,
            "lineage_logged": self._lineage_logged,
            "next_trial_index": self._next_index,
            "config": self.config.to_dict(),
            "scheduler": {"kind": self.scheduler.kind, "state": self.scheduler.export_state()},
            "suggestion": self.suggestion.export_state() if self.suggestion else None,
            "trials": [self._encode_trial(t) for t in self.trials.values()],
        }
        return doc

    def _write_snapshot(self) -> None:
        path = self.outdir / SNAPSHOT_FILENAME
        tmp = path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self.snapshot_doc(), fh, indent=2, allow_nan=False)
        os.replace(tmp, path)
        # the snapshot on disk no longer references these files
        self.store.delete_files(self._pending_deletes)
        self._pending_deletes.clear()

    def _load_snapshot_doc(self, doc: dict) -> None:
        if doc.get("version") != SNAPSHOT_VERSION:
            raise SnapshotVersionMismatch(
                f"snapshot version {doc.get('version')!r} != supported {SNAPSHOT_VERSION}"
            )
        if doc.get("rng_algorithm") != RNG_ALGORITHM:
            raise SnapshotVersionMismatch(
                f"snapshot rng algorithm {doc.get('rng_algorithm')!r} != {RNG_ALGORITHM!r}"
            )
        self._events = int(doc["event_counter"])
        self._results_logged = int(doc["results_logged"])
        self._lineage_logged = int(doc["lineage_logged"])
        self._next_index = int(doc["next_trial_index"])
        for trial_doc in doc["trials"]:
            trial = self._decode_trial(trial_doc)
            if trial.status is TrialStatus.RUNNING:
                # live workers are gone; relaunch from the latest checkpoint
                # (or from scratch) and catch up to the recorded history
                trial = replace(trial, status=TrialStatus.PENDING)
            self.trials[trial.id] = trial
        if doc["scheduler"]["kind"] != self.scheduler.kind:
            raise ConfigInvalid(
                "scheduler.kind",
                f"snapshot was written by scheduler {doc['scheduler']['kind']!r}",
            )
        self.scheduler.import_state(doc["scheduler"]["state"])
        if self.suggestion is not None and doc.get("suggestion") is not None:
            self.suggestion.import_state(doc["suggestion"])
        self._truncate_log(self.outdir / RESULTS_FILENAME, self._results_logged)
        self._truncate_log(self.outdir / LINEAGE_FILENAME, self._lineage_logged)

    @staticmethod
    def _truncate_log(path: Path, keep: int) -> None:
        if not path.exists():
            if keep:
                logger.warning("log %s missing; replay will regenerate only new records", path)
            return
        with open(path, "rb") as fh:
            lines = fh.readlines()
        if len(lines) < keep:
            logger.warning("log %s shorter than snapshot expects (%d < %d)", path, len(lines), keep)
            keep = len(lines)
        with open(path, "wb") as fh:
            fh.writelines(lines[:keep])

    def build_report(self) -> ExperimentReport:
        rows = []
        best_id: Optional[str] = None
        best_canonical: Optional[float] = None
        for trial in self.trials.values():
            if trial.results:
                bc = canonical_best(trial, self.objective)
                value = self.objective.user_value(bc)
                if best_canonical is None or (bc, trial.id) < (best_canonical, best_id):
                    best_canonical, best_id = bc, trial.id
            else:
                value = None
            rows.append(
                {
                    "id": trial.id,
                    "status": trial.status.value,
                    "config": dict(trial.config),
                    "best_value": value,
                    "last_step": trial.last_step,
                    "num_results": len(trial.results),
                    "origin": {"kind": trial.origin.kind, "parent": trial.origin.parent},
                }
            )
        return ExperimentReport(
            name=self.config.name,
            objective=self.objective,
            best_trial=best_id,
            best_value=None if best_canonical is None else self.objective.user_value(best_canonical),
            trials=tuple(rows),
        )

    def _log_progress(self) -> None:
        if not logger.isEnabledFor(logging.INFO):
            return
        lines = [f"{'trial':<8}{'status':<12}{'step':>6}  best"]
        for trial in self.trials.values():
            best = canonical_best(trial, self.objective) if trial.results else None
            shown = "-" if best is None else f"{self.objective.user_value(best):.6g}"
            lines.append(f"{trial.id:<8}{trial.status.value:<12}{trial.last_step:>6}  {shown}")
        logger.info("experiment %r after %d events:\n%s", self.config.name, self._events, "\n".join(lines))

    # ------------------------------------------------------------------
    # main loop

    def check_invariants(self) -> None:
        """Resource-safety assertions; tests call this from an event hook."""
        assert self.pool.ok(), f"resource pool out of bounds: {self.pool}"
        sum_cpus = sum(r.cpus for r in self._alloc.values())
        sum_gpus = sum(r.gpus for r in self._alloc.values())
        assert abs(sum_cpus - self.pool.allocated_cpus) < 1e-6, "allocation ledger drift (cpus)"
        assert abs(sum_gpus - self.pool.allocated_gpus) < 1e-6, "allocation ledger drift (gpus)"
        for tid, trial in self.trials.items():
            if trial.status is not TrialStatus.RUNNING:
                assert tid not in self._alloc, f"{tid} is {trial.status.value} but holds resources"

    def run(self) -> ExperimentReport:
        logger.info("starting experiment %r in %s", self.config.name, self.outdir)
        self._write_snapshot()
        try:
            while True:
                self._fill_slots()
                ev = self._next_event()
                if ev is None:
                    break
                self._dispatch(ev)
                self._events += 1
                if self._events % self.config.snapshot_interval == 0:
                    self._write_snapshot()
                    self._log_progress()
                if self._event_hook is not None:
                    self._event_hook(self, self._events)
        except BaseException:
            for rt in self._runtimes.values():
                rt.worker.terminate()
            for worker in self._closing.values():
                worker.terminate()
            self._results_fh.close()
            self._lineage_fh.close()
            raise
        return self._finalize()

    def _finalize(self) -> ExperimentReport:
        for tid, trial in list(self.trials.items()):
            if trial.status is TrialStatus.PAUSED:
                self.trials[tid] = apply_transition(trial, "stop")
        for worker in self._closing.values():
            worker.terminate()
        self._closing.clear()
        self._results_fh.close()
        self._lineage_fh.close()
        self._write_snapshot()
        report = self.build_report()
        with open(self.outdir / REPORT_FILENAME, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, allow_nan=False)
        self._log_progress()
        logger.info(
            "experiment %r finished: best trial %s (value %s)",
            self.config.name,
            report.best_trial,
            report.best_value,
        )
        return report

    @classmethod
    def from_snapshot(cls, outdir, *, scheduler=None, event_hook=None, max_concurrent=None) -> "Engine":
        outdir = Path(outdir)
        state_path = outdir / SNAPSHOT_FILENAME
        if not state_path.exists():
            raise ConfigInvalid("output_dir", f"no {SNAPSHOT_FILENAME} in {outdir}")
        with open(state_path, "r", encoding="utf-8") as fh:
            doc = json.load(fh)
        if not isinstance(doc, dict) or "config" not in doc:
            raise ConfigInvalid("output_dir", f"{state_path} is not an experiment snapshot")
        if doc.get("version") != SNAPSHOT_VERSION:
            raise SnapshotVersionMismatch(
                f"snapshot version {doc.get('version')!r} != supported {SNAPSHOT_VERSION}"
            )
        config = config_from_dict(doc["config"])
        config = dataclasses.replace(config, output_dir=str(outdir))
        return cls(
            config,
            scheduler=scheduler,
            event_hook=event_hook,
            max_concurrent=max_concurrent,
            _resume_doc=doc,
        )


def run_experiment(
    config: ExperimentConfig,
    *,
    scheduler: Optional[TrialScheduler] = None,
    event_hook=None,
    max_concurrent: Optional[int] = None,
) -> ExperimentReport:
    """Run an experiment to completion and return its report."""
    engine = Engine(config, scheduler=scheduler, event_hook=event_hook, max_concurrent=max_concurrent)
    return engine.run()


def resume_experiment(
    outdir,
    *,
    event_hook=None,
    max_concurrent: Optional[int] = None,
) -> ExperimentReport:
    """Resume an interrupted experiment from its snapshot directory."""
    engine = Engine.from_snapshot(outdir, event_hook=event_hook, max_concurrent=max_concurrent)
    return engine.run()
