"""Deterministic in-process trainables used as test oracles and for demos.

Two curve families:

- "exp-curve": loss(t) = b + (1-b) * exp(-t / tau) with b = params["final_loss"]
  and tau = params["tau"]; monotone decreasing toward b.
- "pbt-quadratic": two-parameter surrogate-gradient toy. State theta starts at
  (0.9, 0.9); each step reports loss = -(1.2 - theta1^2 - theta2^2) and then
  updates theta_i <- theta_i - 0.01 * (-2 * h_i * theta_i) with h_i read from
  params ("h1", "h2"). Negative h shrinks theta toward the optimum at 0.
"""

from __future__ import annotations

import json
import math
from typing import Mapping, Optional

from .errors import TuneError
from .trials import ResultRecord

SIM_KINDS = ("exp-curve", "pbt-quadratic")


class SimConfigError(TuneError):
    pass


class SimTrainable:
    """Direct-control trainable: step / save / restore as plain methods."""

    def __init__(self, kind: str, params: Mapping):
        if kind not in SIM_KINDS:
            raise SimConfigError(f"unknown sim kind {kind!r} (expected one of {SIM_KINDS})")
        self.kind = kind
        self.t = 0
        if kind == "exp-curve":
            try:
                self.b = float(params["final_loss"])
                self.tau = float(params["tau"])
            except (KeyError, TypeError, ValueError) as exc:
                raise SimConfigError(f"exp-curve requires numeric final_loss and tau params: {exc}")
            if not (0.0 < self.b < 1.0):
                raise SimConfigError(f"final_loss must lie in (0, 1), got {self.b}")
            if not (self.tau > 0.0 and math.isfinite(self.tau)):
                raise SimConfigError(f"tau must be positive and finite, got {self.tau}")
        else:
            try:
                self.h = (float(params["h1"]), float(params["h2"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise SimConfigError(f"pbt-quadratic requires numeric h1 and h2 params: {exc}")
            self.theta = (0.9, 0.9)

    def step(self) -> ResultRecord:
        """Report the loss at the current state, then advance one step."""
        if self.kind == "exp-curve":
            loss = self.b + (1.0 - self.b) * math.exp(-self.t / self.tau)
        else:
            q = 1.2 - self.theta[0] ** 2 - self.theta[1] ** 2
            loss = -q
            self.theta = tuple(
                th - 0.01 * (-2.0 * h * th) for th, h in zip(self.theta, self.h)
            )
        self.t += 1
        return ResultRecord(step=self.t, metrics={"loss": loss}, wall_time=0.0)

    def save(self, path: str) -> None:
        state = {"kind": self.kind, "t": self.t}
        if self.kind == "pbt-quadratic":
            state["theta"] = list(self.theta)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(state, fh)

    def restore(self, path: str) -> None:
        """Recover step counter and state; hyperparameters stay as configured."""
        with open(path, "r", encoding="utf-8") as fh:
            state = json.load(fh)
        if state.get("kind") != self.kind:
            raise SimConfigError(
                f"checkpoint kind {state.get('kind')!r} does not match trainable kind {self.kind!r}"
            )
        self.t = int(state["t"])
        if self.kind == "pbt-quadratic":
            theta = state["theta"]
            self.theta = (float(theta[0]), float(theta[1]))


def exp_curve_loss(final_loss: float, tau: float, t: int) -> float:
    """Closed form of the exp-curve loss at step counter t (before increment)."""
    return final_loss + (1.0 - final_loss) * math.exp(-t / tau)
