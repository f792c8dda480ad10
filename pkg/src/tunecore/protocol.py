"""Newline-delimited JSON wire protocol between the engine and trial workers.

Commands travel engine -> worker on stdin; events travel worker -> engine on
stdout. One UTF-8 JSON object per line. Encoding uses json.dumps' default
separators, so e.g. the step command is exactly the 16 bytes
b'{"cmd": "step"}\\n'.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Union

from .errors import MalformedLine, MissingVariantKey, NonFiniteMetric, ProtocolError


@dataclass(frozen=True)
class InitCommand:
    trial_id: str
    params: Mapping
    restore_path: Optional[str] = None


@dataclass(frozen=True)
class StepCommand:
    pass


@dataclass(frozen=True)
class SaveCommand:
    path: str


@dataclass(frozen=True)
class StopCommand:
    pass


Command = Union[InitCommand, StepCommand, SaveCommand, StopCommand]


@dataclass(frozen=True)
class ResultEvent:
    step: int
    metrics: Mapping[str, float]


@dataclass(frozen=True)
class SavedEvent:
    path: str


@dataclass(frozen=True)
class DoneEvent:
    pass


@dataclass(frozen=True)
class ErrorEvent:
    message: str


Event = Union[ResultEvent, SavedEvent, DoneEvent, ErrorEvent]


def _dump(obj: dict) -> bytes:
    return (json.dumps(obj, allow_nan=False) + "\n").encode("utf-8")


def encode_command(cmd: Command) -> bytes:
    if isinstance(cmd, InitCommand):
        return _dump(
            {
                "cmd": "init",
                "trial_id": cmd.trial_id,
                "params": dict(cmd.params),
                "restore_path": cmd.restore_path,
            }
        )
    if isinstance(cmd, StepCommand):
        return _dump({"cmd": "step"})
    if isinstance(cmd, SaveCommand):
        return _dump({"cmd": "save", "path": cmd.path})
    if isinstance(cmd, StopCommand):
        return _dump({"cmd": "stop"})
    raise ProtocolError(f"cannot encode {cmd!r}")


def encode_event(event: Event) -> bytes:
    if isinstance(event, ResultEvent):
        return _dump({"event": "result", "step": event.step, "metrics": dict(event.metrics)})
    if isinstance(event, SavedEvent):
        return _dump({"event": "saved", "path": event.path})
    if isinstance(event, DoneEvent):
        return _dump({"event": "done"})
    if isinstance(event, ErrorEvent):
        return _dump({"event": "error", "message": event.message})
    raise ProtocolError(f"cannot encode {event!r}")


def _load_line(line: Union[bytes, str]) -> dict:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedLine(f"line is not valid UTF-8: {exc}") from exc
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(f"line is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedLine(f"line must be a JSON object, got {type(obj).__name__}")
    return obj


def decode_event(line: Union[bytes, str]) -> Event:
    """Decode one worker -> engine line; unknown keys are ignored."""
    obj = _load_line(line)
    variant = obj.get("event")
    if variant is None:
        raise MissingVariantKey("event line lacks an 'event' key")
    if variant == "result":
        step = obj.get("step")
        metrics = obj.get("metrics")
        if isinstance(step, bool) or not isinstance(step, int) or step < 1:
            raise MalformedLine(f"result step must be a positive integer, got {step!r}")
        if not isinstance(metrics, dict):
            raise MalformedLine("result metrics must be an object")
        cleaned = {}
        for name, value in metrics.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(float(value)):
                raise NonFiniteMetric(name, value)
            cleaned[str(name)] = float(value)
        return ResultEvent(step=step, metrics=cleaned)
    if variant == "saved":
        path = obj.get("path")
        if not isinstance(path, str):
            raise MalformedLine("saved event requires a string path")
        return SavedEvent(path=path)
    if variant == "done":
        return DoneEvent()
    if variant == "error":
        message = obj.get("message", "")
        if not isinstance(message, str):
            raise MalformedLine("error message must be a string")
        return ErrorEvent(message=message)
    raise MalformedLine(f"unknown event variant {variant!r}")


def decode_command(line: Union[bytes, str]) -> Command:
    """Decode one engine -> worker line (used by workers and test harnesses)."""
    obj = _load_line(line)
    variant = obj.get("cmd")
    if variant is None:
        raise MissingVariantKey("command line lacks a 'cmd' key")
    if variant == "init":
        trial_id = obj.get("trial_id")
        params = obj.get("params")
        restore_path = obj.get("restore_path")
        if not isinstance(trial_id, str):
            raise MalformedLine("init requires a string trial_id")
        if not isinstance(params, dict):
            raise MalformedLine("init requires a params object")
        if restore_path is not None and not isinstance(restore_path, str):
            raise MalformedLine("init restore_path must be a string or null")
        return InitCommand(trial_id=trial_id, params=params, restore_path=restore_path)
    if variant == "step":
        return StepCommand()
    if variant == "save":
        path = obj.get("path")
        if not isinstance(path, str):
            raise MalformedLine("save requires a string path")
        return SaveCommand(path=path)
    if variant == "stop":
        return StopCommand()
    raise MalformedLine(f"unknown command variant {variant!r}")
