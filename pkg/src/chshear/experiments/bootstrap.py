"""Checks of the two a-priori decay/dissipation inequalities along a trajectory.

For checkpoint pairs s < t:

    ratio1 = ‖u_∦(t)‖ / (exp(-λ(t-s)/4) ‖u_∦(s)‖)        (bounds 20, then 16)
    ratio2 = εγ ∫_s^t ‖Δu_∦‖² / ‖u_∦(s)‖²                (bounds 10, then 5)

plus the short-time growth bound ‖u_∦(t)‖ <= 3/2 ‖u_∦(s)‖ and the contraction
‖u_∦(s + 4/λ)‖ <= ‖u_∦(s)‖ / e.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from ..errors import MissingDiagnostics

RATIO1_BOUND = 20.0
RATIO1_IMPROVED = 16.0
RATIO2_BOUND = 10.0
RATIO2_IMPROVED = 5.0
GROWTH_BOUND = 1.5


@dataclass(frozen=True)
class PairCheck:
    s: float
    t: float
    ratio1: float
    ratio2: float
    growth: float
    degenerate: bool = False

    @property
    def ratio1_ok(self):
        return self.ratio1 <= RATIO1_BOUND

    @property
    def ratio1_improved_ok(self):
        return self.ratio1 <= RATIO1_IMPROVED

    @property
    def ratio2_ok(self):
        return self.ratio2 <= RATIO2_BOUND

    @property
    def ratio2_improved_ok(self):
        return self.ratio2 <= RATIO2_IMPROVED


@dataclass
class BootstrapReport:
    lambda_gamma: float
    lambda_source: str
    checkpoints: np.ndarray
    pairs: list
    contraction: list = field(default_factory=list)  # (s, ‖u(s+τ*)‖/‖u(s)‖)

    @property
    def tau_star(self):
        return 4.0 / self.lambda_gamma

    def _max(self, attr):
        vals = [getattr(p, attr) for p in self.pairs]
        return max(vals) if vals else 0.0

    @property
    def worst_ratio1(self):
        return self._max("ratio1")

    @property
    def worst_ratio2(self):
        return self._max("ratio2")

    @property
    def worst_growth(self):
        return self._max("growth")

    @property
    def holds(self):
        """Both original bounds (20, 10) at every pair."""
        return all(p.ratio1_ok and p.ratio2_ok for p in self.pairs)

    @property
    def holds_improved(self):
        return all(p.ratio1_improved_ok and p.ratio2_improved_ok for p in self.pairs)

    @property
    def growth_holds(self):
        return all(p.growth <= GROWTH_BOUND for p in self.pairs)

    @property
    def contraction_holds(self):
        return all(r <= 1.0 / math.e for _, r in self.contraction)

    @property
    def degenerate(self):
        return any(p.degenerate for p in self.pairs)

    def first_violation(self, bound=RATIO1_BOUND, s=None):
        """Earliest t with ratio1 > bound (restricted to pairs starting at ``s`` if given)."""
        ts = [p.t for p in self.pairs if p.ratio1 > bound and (s is None or p.s == s)]
        return min(ts) if ts else None

    def summary(self):
        return {
            "lambda_gamma": self.lambda_gamma,
            "lambda_source": self.lambda_source,
            "n_pairs": len(self.pairs),
            "worst_ratio1": self.worst_ratio1,
            "worst_ratio2": self.worst_ratio2,
            "ratio1_le_20": all(p.ratio1_ok for p in self.pairs),
            "ratio1_le_16": all(p.ratio1_improved_ok for p in self.pairs),
            "ratio2_le_10": all(p.ratio2_ok for p in self.pairs),
            "ratio2_le_5": all(p.ratio2_improved_ok for p in self.pairs),
            "growth_le_3_2": self.growth_holds,
            "tau_star": self.tau_star,
            "contraction_checks": len(self.contraction),
            "contraction_le_1_over_e": self.contraction_holds,
            "degenerate": self.degenerate,
        }


def bootstrap_monitor(
    traj,
    lambda_gamma: float,
    checkpoints: Optional[Sequence[float]] = None,
    lambda_source: str = "given",
) -> BootstrapReport:
    """Evaluate both inequalities at every checkpoint pair.

    Values between recorded times are linearly interpolated. Default
    checkpoints are the recorded times.
    """
    if lambda_gamma <= 0:
        raise ValueError("lambda_gamma must be positive")
    t = traj.column("t")
    fl = traj.column("fluct_l2")
    fd = traj.column("fluct_diss_cum")
    if np.any(np.isnan(fd)):
        raise MissingDiagnostics("trajectory lacks the cumulative fluctuation dissipation")
    cps = np.asarray(t if checkpoints is None else checkpoints, dtype=np.float64)
    cps = cps[(cps >= t[0]) & (cps <= t[-1])]
    flc = np.interp(cps, t, fl)
    fdc = np.interp(cps, t, fd)

    pairs = []
    for i in range(len(cps)):
        base = flc[i]
        for j in range(i + 1, len(cps)):
            gap = cps[j] - cps[i]
            if base == 0:
                degenerate = flc[j] == 0
                r1 = 0.0 if degenerate else math.inf
                r2 = 0.0 if fdc[j] - fdc[i] == 0 else math.inf
                pairs.append(PairCheck(cps[i], cps[j], r1, r2, r1, True))
                continue
            r1 = flc[j] / (math.exp(-lambda_gamma * gap / 4.0) * base)
            r2 = (fdc[j] - fdc[i]) / base**2
            pairs.append(PairCheck(cps[i], cps[j], r1, r2, flc[j] / base))

    contraction = []
    tau = 4.0 / lambda_gamma
    for s, base in zip(cps, flc):
        if s + tau > t[-1] or base == 0:
            continue
        contraction.append((float(s), float(np.interp(s + tau, t, fl) / base)))
    return BootstrapReport(lambda_gamma, lambda_source, cps, pairs, contraction)
