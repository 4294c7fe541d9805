"""Literal evaluation of the smallness conditions of the global-existence theorem.

The constants B1, B2, B3, L, L' are never computed by the theory; they default
to 1 and are labeled as such in every report.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from ..errors import NonPositiveConstant

UNPROVIDED = "not provided by the theory; user-supplied (default 1)"


@dataclass(frozen=True)
class ThresholdInputs:
    epsilon: float
    a: float
    b: float = 0.0
    fluct0: float = 1.0
    mean0: float = 0.0  # ‖∫_T u0 dx‖_{L²_y}, bare-integral convention
    B1: float = 1.0
    B2: float = 1.0
    B3: float = 1.0
    L: float = 1.0
    L_prime: float = 1.0
    lambda1: float = 1.0


@dataclass(frozen=True)
class Condition:
    lhs: float
    rhs: float

    @property
    def holds(self):
        return self.lhs <= self.rhs

    @property
    def margin(self):
        return self.rhs - self.lhs


@dataclass(frozen=True)
class ThresholdReport:
    inputs: ThresholdInputs
    K: float
    cubic_smallness: Condition
    mean_part_smallness: Condition
    a_bound_dissipation: Condition
    a_bound_decay: Condition

    @property
    def conditions(self):
        return {
            "cubic_smallness": self.cubic_smallness,
            "mean_part_smallness": self.mean_part_smallness,
            "a_bound_dissipation": self.a_bound_dissipation,
            "a_bound_decay": self.a_bound_decay,
        }

    @property
    def all_hold(self):
        return all(c.holds for c in self.conditions.values())

    def to_dict(self):
        return {
            "inputs": asdict(self.inputs),
            "constants_note": UNPROVIDED,
            "K": self.K,
            "conditions": {
                name: {"lhs": c.lhs, "rhs": c.rhs, "holds": c.holds, "margin": c.margin}
                for name, c in self.conditions.items()
            },
        }

    def lines(self):
        out = [f"K = {self.K!r}"]
        for name, c in self.conditions.items():
            out.append(f"{name}: lhs = {c.lhs!r}, bound = {c.rhs!r}, holds = {c.holds}")
        out.append(f"B1, B2, B3, L, L' {UNPROVIDED}")
        return out


def _div(num, den):
    return math.inf if den == 0 else num / den


def _cubic_lhs(i: ThresholdInputs):
    """a² B2 exp(B2 ‖u_∦(0)‖⁴) ‖u_∦(0)‖⁶, evaluated in logs so huge exponents give inf."""
    if i.a == 0 or i.fluct0 == 0:
        return 0.0
    log_val = 2 * math.log(abs(i.a)) + math.log(i.B2) + i.B2 * i.fluct0**4 + 6 * math.log(i.fluct0)
    return math.exp(log_val) if log_val < 700 else math.inf


def threshold_report(inputs: ThresholdInputs) -> ThresholdReport:
    i = inputs
    for name in ("epsilon", "B1", "B2", "B3", "L", "L_prime", "lambda1"):
        if not getattr(i, name) > 0:
            raise NonPositiveConstant(f"{name} must be positive, got {getattr(i, name)}")
    if i.fluct0 < 0 or i.mean0 < 0:
        raise NonPositiveConstant("norms fluct0 and mean0 must be non-negative")

    base = i.epsilon * i.lambda1**2 / (4.0 * i.B1)
    K = min(1.0, base ** 0.375)
    cubic = Condition(_cubic_lhs(i), min(1.0 / 12.0, base**0.75 / 12.0))
    mean_part = Condition(
        i.mean0,
        min(1.0 / 12.0, base**0.375 / 12.0) / (i.B2 * math.exp(i.B2)),
    )
    diss = Condition(abs(i.a), _div(i.epsilon, 1e7 * i.L * i.fluct0**2))
    decay = Condition(abs(i.a), _div(i.epsilon, 1e6 * i.L_prime * math.sqrt(i.B3) * i.fluct0))
    return ThresholdReport(i, K, cubic, mean_part, diss, decay)
