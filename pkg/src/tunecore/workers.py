"""Trial workers: an in-process deterministic sim worker and a subprocess
worker speaking the line-delimited JSON protocol over stdin/stdout.

Every worker pushes its events onto the engine's single ordered queue, tagged
with (trial id, generation). The generation increments whenever the engine
replaces a trial's worker, so stale events from a superseded worker are
dropped without ambiguity.
"""

from __future__ import annotations

import os
import subprocess
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Union

from .errors import ProtocolError
from .protocol import (
    Command,
    DoneEvent,
    ErrorEvent,
    Event,
    InitCommand,
    ResultEvent,
    SaveCommand,
    SavedEvent,
    StepCommand,
    StopCommand,
    decode_event,
    encode_command,
)
from .sim import SimConfigError, SimTrainable


@dataclass(frozen=True)
class WorkerExit:
    """Synthetic event: the worker process ended (cleanly or not)."""

    returncode: int
    stderr_tail: str = ""


@dataclass(frozen=True)
class WorkerEvent:
    trial_id: str
    gen: int
    payload: Union[Event, WorkerExit]
    wall_time: float = 0.0


class SimWorker:
    """Synchronous in-process worker; each command enqueues its reply immediately.

    Results carry wall_time 0.0 so sim experiments produce bit-identical logs.
    """

    def __init__(self, trial_id: str, gen: int, kind: str, queue):
        self.trial_id = trial_id
        self.gen = gen
        self.kind = kind
        self._queue = queue
        self._trainable: Optional[SimTrainable] = None
        self._stopped = False

    def _emit(self, payload) -> None:
        self._queue.put(WorkerEvent(self.trial_id, self.gen, payload, wall_time=0.0))

    def send(self, cmd: Command) -> None:
        if self._stopped:
            return
        try:
            if isinstance(cmd, InitCommand):
                self._trainable = SimTrainable(self.kind, cmd.params)
                if cmd.restore_path is not None:
                    self._trainable.restore(cmd.restore_path)
            elif isinstance(cmd, StepCommand):
                record = self._trainable.step()
                self._emit(ResultEvent(step=record.step, metrics=record.metrics))
            elif isinstance(cmd, SaveCommand):
                self._trainable.save(cmd.path)
                self._emit(SavedEvent(path=cmd.path))
            elif isinstance(cmd, StopCommand):
                self._stopped = True
                self._emit(DoneEvent())
            else:
                raise ProtocolError(f"unknown command {cmd!r}")
        except (SimConfigError, ProtocolError, OSError, ValueError, KeyError, AttributeError) as exc:
            self._stopped = True
            self._emit(ErrorEvent(message=f"{type(exc).__name__}: {exc}"))

    def terminate(self) -> None:
        self._stopped = True


class SubprocessWorker:
    """One trial in its own OS process, supervised by a stdout reader thread."""

    def __init__(
        self,
        trial_id: str,
        gen: int,
        argv,
        queue,
        *,
        env: Optional[Mapping[str, str]] = None,
        workdir: Optional[str] = None,
        stderr_path: Optional[str] = None,
    ):
        self.trial_id = trial_id
        self.gen = gen
        self._queue = queue
        self._start = time.monotonic()
        self._stderr_path = stderr_path
        full_env = dict(os.environ)
        if env:
            full_env.update({str(k): str(v) for k, v in env.items()})
        stderr_file = open(stderr_path, "ab") if stderr_path else subprocess.DEVNULL
        self._stderr_file = stderr_file if stderr_path else None
        self._proc = subprocess.Popen(
            list(argv),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=stderr_file,
            cwd=workdir,
            env=full_env,
        )
        self._reader = threading.Thread(target=self._read_loop, daemon=True)
        self._reader.start()

    def _emit(self, payload) -> None:
        self._queue.put(
            WorkerEvent(self.trial_id, self.gen, payload, wall_time=time.monotonic() - self._start)
        )

    def _read_loop(self) -> None:
        stream = self._proc.stdout
        for line in stream:
            if not line.strip():
                continue
            try:
                event = decode_event(line)
            except ProtocolError as exc:
                self._emit(ErrorEvent(message=f"protocol error: {exc}"))
                continue
            self._emit(event)
        returncode = self._proc.wait()
        if self._stderr_file:
            self._stderr_file.flush()
        self._emit(WorkerExit(returncode=returncode, stderr_tail=self._stderr_tail()))

    def _stderr_tail(self, limit: int = 2048) -> str:
        if not self._stderr_path or not os.path.exists(self._stderr_path):
            return ""
        try:
            with open(self._stderr_path, "rb") as fh:
                fh.seek(0, os.SEEK_END)
                size = fh.tell()
                fh.seek(max(0, size - limit))
                return fh.read().decode("utf-8", errors="replace")
        except OSError:
            return ""

    def send(self, cmd: Command) -> None:
        if self._proc.poll() is not None:
            return  # exit event already on its way
        try:
            self._proc.stdin.write(encode_command(cmd))
            self._proc.stdin.flush()
        except (BrokenPipeError, ValueError, OSError):
            pass

    def terminate(self) -> None:
        if self._proc.poll() is None:
            self._proc.kill()
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        self._reader.join(timeout=2.0)
        if self._stderr_file:
            try:
                self._stderr_file.close()
            except OSError:
                pass


Worker = Union[SimWorker, SubprocessWorker]
