"""Declarative hyperparameter spaces: grid expansion and seeded random sampling."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Any, Iterator, List, Mapping, Tuple, Union

from .errors import BadBounds, EmptyGrid, NonGridDomain, UnknownDomainKind
from .rng import XorShift128Plus


def _check_scalar(kind: str, value: Any) -> Any:
    if isinstance(value, bool) or not isinstance(value, (int, float, str)):
        raise UnknownDomainKind(f"{kind} values must be numbers or strings, got {value!r}")
    if isinstance(value, (int, float)) and not math.isfinite(float(value)):
        raise BadBounds(f"{kind} value {value!r} is not finite")
    return value


@dataclass(frozen=True)
class Grid:
    values: Tuple[Any, ...]

    def __post_init__(self):
        if len(self.values) == 0:
            raise EmptyGrid("grid list must be non-empty")
        object.__setattr__(self, "values", tuple(_check_scalar("grid", v) for v in self.values))


@dataclass(frozen=True)
class Choice:
    values: Tuple[Any, ...]

    def __post_init__(self):
        if len(self.values) == 0:
            raise EmptyGrid("choice list must be non-empty")
        object.__setattr__(self, "values", tuple(_check_scalar("choice", v) for v in self.values))


def _check_bounds(kind: str, lo: Any, hi: Any, positive_lo: bool = False) -> Tuple[float, float]:
    try:
        lo = float(lo)
        hi = float(hi)
    except (TypeError, ValueError):
        raise BadBounds(f"{kind} bounds must be numbers, got {lo!r}, {hi!r}")
    if not (math.isfinite(lo) and math.isfinite(hi)):
        raise BadBounds(f"{kind} bounds must be finite, got [{lo}, {hi}]")
    if lo >= hi:
        raise BadBounds(f"{kind} requires lo < hi, got [{lo}, {hi}]")
    if positive_lo and lo <= 0:
        raise BadBounds(f"{kind} requires lo > 0, got lo={lo}")
    return lo, hi


@dataclass(frozen=True)
class Uniform:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = _check_bounds("uniform", self.lo, self.hi)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


@dataclass(frozen=True)
class LogUniform:
    lo: float
    hi: float

    def __post_init__(self):
        lo, hi = _check_bounds("loguniform", self.lo, self.hi, positive_lo=True)
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)


@dataclass(frozen=True)
class Constant:
    value: Any

    def __post_init__(self):
        _check_scalar("constant", self.value)


ParamDomain = Union[Grid, Choice, Uniform, LogUniform, Constant]


class ParamSpace:
    """Ordered map of parameter name -> domain; insertion order is significant."""

    def __init__(self, domains: Mapping[str, ParamDomain]):
        cleaned = {}
        for name, domain in domains.items():
            if not isinstance(name, str) or not name:
                raise UnknownDomainKind(f"parameter names must be non-empty strings, got {name!r}")
            if not isinstance(domain, (Grid, Choice, Uniform, LogUniform, Constant)):
                raise UnknownDomainKind(f"unknown domain object for {name!r}: {domain!r}")
            cleaned[name] = domain
        self._domains = cleaned

    def __iter__(self) -> Iterator[str]:
        return iter(self._domains)

    def __len__(self) -> int:
        return len(self._domains)

    def __getitem__(self, name: str) -> ParamDomain:
        return self._domains[name]

    def __contains__(self, name: str) -> bool:
        return name in self._domains

    def __eq__(self, other) -> bool:
        return isinstance(other, ParamSpace) and self._domains == other._domains

    def items(self):
        return self._domains.items()

    def names(self) -> List[str]:
        return list(self._domains)

    def is_grid_only(self) -> bool:
        return all(isinstance(d, (Grid, Constant)) for d in self._domains.values())


_DOMAIN_KINDS = ("grid", "uniform", "loguniform", "choice", "constant")


def parse_space(spec: Mapping[str, Any]) -> ParamSpace:
    """Parse the config-file space fragment: {name: {kind: args}}."""
    if not isinstance(spec, Mapping):
        raise UnknownDomainKind(f"space must be a mapping, got {type(spec).__name__}")
    domains = {}
    for name, frag in spec.items():
        if not isinstance(frag, Mapping) or len(frag) != 1:
            raise UnknownDomainKind(
                f"domain for {name!r} must be a one-key mapping of kind -> args, got {frag!r}"
            )
        kind, args = next(iter(frag.items()))
        if kind == "grid":
            if not isinstance(args, (list, tuple)):
                raise UnknownDomainKind(f"grid for {name!r} must be a list")
            domains[name] = Grid(tuple(args))
        elif kind == "choice":
            if not isinstance(args, (list, tuple)):
                raise UnknownDomainKind(f"choice for {name!r} must be a list")
            domains[name] = Choice(tuple(args))
        elif kind == "uniform":
            if not isinstance(args, (list, tuple)) or len(args) != 2:
                raise BadBounds(f"uniform for {name!r} must be [lo, hi]")
            domains[name] = Uniform(args[0], args[1])
        elif kind == "loguniform":
            if not isinstance(args, (list, tuple)) or len(args) != 2:
                raise BadBounds(f"loguniform for {name!r} must be [lo, hi]")
            domains[name] = LogUniform(args[0], args[1])
        elif kind == "constant":
            domains[name] = Constant(args)
        else:
            raise UnknownDomainKind(f"unknown domain kind {kind!r} for {name!r} (expected one of {_DOMAIN_KINDS})")
    return ParamSpace(domains)


def space_to_dict(space: ParamSpace) -> dict:
    """Inverse of parse_space, for embedding in snapshots and configs."""
    out = {}
    for name, d in space.items():
        if isinstance(d, Grid):
            out[name] = {"grid": list(d.values)}
        elif isinstance(d, Choice):
            out[name] = {"choice": list(d.values)}
        elif isinstance(d, Uniform):
            out[name] = {"uniform": [d.lo, d.hi]}
        elif isinstance(d, LogUniform):
            out[name] = {"loguniform": [d.lo, d.hi]}
        else:
            out[name] = {"constant": d.value}
    return out


def expand_grid(space: ParamSpace) -> List[dict]:
    """Cartesian product of an all-grid space, lexicographic in insertion order.

    Constants appear in every config; the empty space expands to one empty config.
    """
    names = []
    value_lists = []
    for name, domain in space.items():
        if isinstance(domain, Grid):
            names.append(name)
            value_lists.append(domain.values)
        elif isinstance(domain, Constant):
            names.append(name)
            value_lists.append((domain.value,))
        else:
            raise NonGridDomain(f"parameter {name!r} has a non-grid domain {type(domain).__name__}")
    return [dict(zip(names, combo)) for combo in itertools.product(*value_lists)]


def sample_domain(domain: ParamDomain, u: float) -> Any:
    """Map one unit uniform into the domain.

    Uniform: lo + u*(hi-lo).  LogUniform: exp(ln lo + u*(ln hi - ln lo)).
    Grid/Choice: element at floor(u*len), clamped to len-1 at u=1.
    """
    if isinstance(domain, Uniform):
        return domain.lo + u * (domain.hi - domain.lo)
    if isinstance(domain, LogUniform):
        return math.exp(math.log(domain.lo) + u * (math.log(domain.hi) - math.log(domain.lo)))
    if isinstance(domain, (Grid, Choice)):
        idx = min(int(math.floor(u * len(domain.values))), len(domain.values) - 1)
        return domain.values[idx]
    if isinstance(domain, Constant):
        return domain.value
    raise UnknownDomainKind(f"cannot sample {domain!r}")


def sample_config(space: ParamSpace, rng: XorShift128Plus) -> dict:
    """Draw one config; consumes exactly one unit uniform per parameter
    (including constants) so draw sequences stay aligned across space edits."""
    return {name: sample_domain(domain, rng.uniform()) for name, domain in space.items()}


def clip(value: float, domain: Union[Uniform, LogUniform]) -> float:
    return min(max(value, domain.lo), domain.hi)
