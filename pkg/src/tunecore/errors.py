"""Exception types shared across trials, schedulers, executors, and the engine."""

from __future__ import annotations


class TuneError(Exception):
    """Base class for every error raised by tunecore."""


class IllegalTransition(TuneError):
    """A lifecycle event was applied to a trial status that does not accept it."""

    def __init__(self, status, event: str):
        super().__init__(f"illegal transition: {getattr(status, 'value', status)!s} + {event}")
        self.status = status
        self.event = event


class NonMonotonicStep(TuneError):
    def __init__(self, last_step: int, step: int):
        super().__init__(f"result step {step} is not greater than last recorded step {last_step}")
        self.last_step = last_step
        self.step = step


class MissingObjectiveMetric(TuneError):
    def __init__(self, metric: str):
        super().__init__(f"result metrics do not contain the objective metric {metric!r}")
        self.metric = metric


class NonFiniteMetric(TuneError):
    def __init__(self, name: str, value):
        super().__init__(f"metric {name!r} has non-finite or non-numeric value {value!r}")
        self.name = name
        self.value = value


# --- search space ---

class UnknownDomainKind(TuneError):
    pass


class EmptyGrid(TuneError):
    pass


class BadBounds(TuneError):
    pass


class NonGridDomain(TuneError):
    pass


# --- wire protocol ---

class ProtocolError(TuneError):
    """Base for malformed traffic on the worker wire protocol."""


class MalformedLine(ProtocolError):
    pass


class MissingVariantKey(ProtocolError):
    pass


# --- schedulers ---

class TrialWithoutBracket(TuneError):
    pass


class SchedulerContractViolation(TuneError):
    pass


# --- executor / checkpoints ---

class SaveTimeout(TuneError):
    pass


class DigestMismatch(TuneError):
    pass


class MissingFile(TuneError):
    pass


class MissingCheckpointFile(MissingFile):
    pass


# --- engine / config / cli ---

class ConfigInvalid(TuneError):
    def __init__(self, field: str, message: str):
        super().__init__(f"invalid config field {field!r}: {message}")
        self.field = field


class ExperimentError(TuneError):
    """The experiment itself failed (scheduler fault, contract violation)."""


class ReleaseWithoutAllocate(TuneError):
    pass


class SnapshotVersionMismatch(TuneError):
    pass


class MissingLog(TuneError):
    pass
