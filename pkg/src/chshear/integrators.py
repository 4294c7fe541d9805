"""Integrating-factor RK4 time stepping with adaptive dt and blow-up detection.

The hyperdiffusion is applied exactly as the diagonal multiplier
exp(-εγ|k|⁴ dt); advection and the nonlinear flux are explicit (Lawson RK4).
The k = 0 coefficient is never touched, so the mean is preserved exactly.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .diagnostics import column, snapshot
from .errors import MissingDiagnostics
from .operators import PhysicalParams, ShearProfile, SpectralOperator
from .spectral import AREA, Field, read_coeffs, write_coeffs


class Status(str, enum.Enum):
    REACHED_T_END = "ReachedTEnd"
    BLOW_UP = "BlowUp"
    DT_UNDERFLOW = "DtUnderflow"
    MAX_STEPS = "MaxSteps"


@dataclass(frozen=True)
class SimState:
    t: float
    u: Field
    step_index: int = 0
    dt_current: Optional[float] = None  # None: use the controller's dt_init

    def __post_init__(self):
        if not self.u.spectral:
            object.__setattr__(self, "u", Field(self.u.grid, self.u.coeffs, spectral=True))


@dataclass(frozen=True)
class StepController:
    """Adaptive step policy.

    A step is rejected (and dt halved) when ‖u‖ grows by more than
    ``growth_limit`` in one step. After ``accepts_before_increase`` consecutive
    accepted steps dt is multiplied by ``dt_increase``. dt never exceeds
    ``dt_max`` nor ``cfl_safety·Δx / (A·max|v1|)``.
    """

    dt_init: float = 1e-3
    dt_min: float = 1e-12
    dt_max: float = 1e-1
    cfl_safety: float = 0.5
    growth_limit: float = 1.25
    dt_increase: float = 1.1
    accepts_before_increase: int = 10
    blowup_threshold: Optional[float] = None
    blowup_factor: float = 1e3
    max_steps: int = 10_000_000

    def __post_init__(self):
        if not 0 < self.dt_min <= self.dt_init <= self.dt_max:
            raise ValueError("need 0 < dt_min <= dt_init <= dt_max")
        if not 0 < self.cfl_safety < 1:
            raise ValueError("cfl_safety must lie in (0, 1)")
        if self.growth_limit <= 1 or self.dt_increase < 1:
            raise ValueError("growth_limit must exceed 1 and dt_increase must be >= 1")
        if self.blowup_threshold is not None and self.blowup_threshold <= 0:
            raise ValueError("blowup_threshold must be positive")

    def cfl_limit(self, grid, params: PhysicalParams, shear: ShearProfile):
        speed = params.advection_coeff * shear.max_abs
        if speed == 0:
            return math.inf
        return self.cfl_safety * min(grid.dx, grid.dy) / speed


@dataclass
class Trajectory:
    records: list
    status: Status
    t_detect: Optional[float] = None
    final_state: Optional[SimState] = None
    threshold: float = math.inf
    accumulated: bool = True
    steps: int = 0
    rejections: int = 0

    def column(self, name):
        return column(self.records, name)

    @property
    def blow_up(self):
        return self.status is Status.BLOW_UP


class Stepper:
    """Lawson (integrating-factor) RK4 on raw coefficient arrays."""

    def __init__(self, op: SpectralOperator):
        self.op = op
        self._cache = {}

    def _factors(self, dt):
        f = self._cache.get(dt)
        if f is None:
            if len(self._cache) > 8:
                self._cache.clear()
            f = (np.exp(self.op.linear * dt), np.exp(self.op.linear * (0.5 * dt)))
            self._cache[dt] = f
        return f

    def step(self, u_hat, dt):
        E, E2 = self._factors(dt)
        N = self.op.explicit
        if not (self.op.has_advection or self.op.has_nonlinear):
            return E * u_hat
        k1 = N(u_hat)
        Eu = E2 * u_hat
        k2 = N(Eu + (0.5 * dt) * (E2 * k1))
        k3 = N(Eu + (0.5 * dt) * k2)
        k4 = N(E * u_hat + dt * (E2 * k3))
        return E * u_hat + (dt / 6.0) * (E * k1 + 2.0 * E2 * (k2 + k3) + k4)


def step(state: SimState, dt: float, p: PhysicalParams, v: ShearProfile) -> SimState:
    """Advance one integrating-factor RK4 step of size ``dt``."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    grid = state.u.grid
    stepper = Stepper(SpectralOperator(grid, p, v))
    u_new = stepper.step(state.u.coeffs * grid.mask, dt)
    return SimState(state.t + dt, Field(grid, u_new, spectral=True), state.step_index + 1, dt)


class _Integrands:
    """Instantaneous rates whose time integrals enter the energy identity.

    Returns the rates and their time derivatives, so each step can use the
    Hermite-corrected trapezoid rule h/2 (f0 + f1) + h²/12 (f0' - f1'),
    which is fourth order like the stepper itself.
    """

    def __init__(self, op: SpectralOperator):
        self.op = op
        self.K4 = op.K4
        self.nu = op.params.hyperdiffusion

    def __call__(self, u_hat):
        op = self.op
        grid = op.grid
        u_phys = grid.ifft(u_hat * op.mask)
        u_t = op.linear * u_hat + op.explicit(u_hat)
        weighted = self.K4 * (u_hat.real**2 + u_hat.imag**2)
        dweighted = self.K4 * (np.conj(u_hat) * u_t).real
        rate = np.zeros(3)
        drate = np.zeros(3)
        rate[0] = 2.0 * self.nu * AREA * float(weighted.sum())
        rate[1] = self.nu * AREA * float(weighted[:, 1:].sum())
        drate[0] = 4.0 * self.nu * AREA * float(dweighted.sum())
        drate[1] = 2.0 * self.nu * AREA * float(dweighted[:, 1:].sum())
        if op.has_nonlinear:
            a, b, c = op._poly
            flux = op.flux(u_hat, u_phys)
            w = grid.ifft(u_t * op.mask)
            dflux = op.flux_symbol * grid.fft((c + u_phys * (2.0 * b + 3.0 * a * u_phys)) * w)
            rate[2] = 2.0 * AREA * float(np.sum((np.conj(u_hat) * flux).real))
            drate[2] = 2.0 * AREA * float(
                np.sum((np.conj(u_t) * flux).real) + np.sum((np.conj(u_hat) * dflux).real)
            )
        return rate, drate


def _l2(u_hat):
    return math.sqrt(AREA * float(np.sum(u_hat.real**2 + u_hat.imag**2)))


def integrate(
    state: SimState,
    t_end: float,
    ctrl: StepController,
    p: PhysicalParams,
    v: ShearProfile,
    output_interval: Optional[float] = None,
    accumulate: bool = True,
) -> Trajectory:
    """Integrate from ``state`` to ``t_end`` with adaptive steps.

    Diagnostics are recorded at ``state.t``, every ``output_interval`` (every
    accepted step when ``None``) and at termination. The energy-identity
    integrals are accumulated on every accepted step with the
    Hermite-corrected trapezoid rule.
    """
    if not t_end > state.t:
        raise ValueError("t_end must exceed the current time")
    grid = state.u.grid
    op = SpectralOperator(grid, p, v)
    stepper = Stepper(op)
    rates = _Integrands(op) if accumulate else None

    u = state.u.coeffs * grid.mask
    t0 = t = float(state.t)
    dt_cap = min(ctrl.dt_max, ctrl.cfl_limit(grid, p, v))
    dt_nom = min(max(state.dt_current or ctrl.dt_init, ctrl.dt_min), dt_cap)
    l2 = _l2(u)
    if ctrl.blowup_threshold is not None:
        threshold = ctrl.blowup_threshold
    else:
        threshold = ctrl.blowup_factor * l2 if l2 > 0 else math.inf

    cums = np.zeros(3) if accumulate else np.full(3, np.nan)
    rate_old = rates(u) if accumulate else None
    records = [snapshot(u, grid, p, t, dt_nom, cums)]
    out_index = 1

    def next_output():
        if output_interval is None:
            return math.inf
        return t0 + out_index * output_interval

    status = None
    t_detect = None
    steps = rejections = accepts = 0
    step_index = state.step_index
    while True:
        if t >= t_end:
            status = Status.REACHED_T_END
            break
        if steps >= ctrl.max_steps:
            status = Status.MAX_STEPS
            break
        t_out = next_output()
        target = min(t_end, t_out)
        h = dt_nom
        landing = t + h >= target
        if landing:
            h = target - t
        u_new = stepper.step(u, h)
        l2_new = _l2(u_new)
        grew = l2 > 0 and l2_new > ctrl.growth_limit * l2
        if not math.isfinite(l2_new) or grew:
            rejections += 1
            accepts = 0
            dt_nom = 0.5 * h
            if dt_nom < ctrl.dt_min:
                status = Status.DT_UNDERFLOW
                t_detect = t
                break
            continue

        if accumulate:
            rate_new = rates(u_new)
            cums = cums + 0.5 * h * (rate_old[0] + rate_new[0]) + h * h / 12.0 * (rate_old[1] - rate_new[1])
            rate_old = rate_new
        t = target if landing else t + h
        u = u_new
        l2 = l2_new
        steps += 1
        step_index += 1
        accepts += 1
        if accepts >= ctrl.accepts_before_increase:
            dt_nom = min(dt_nom * ctrl.dt_increase, dt_cap)
            accepts = 0

        blew_up = l2 > threshold
        hit_output = output_interval is None or (landing and t == t_out)
        while output_interval is not None and next_output() <= t:
            out_index += 1
        if hit_output or blew_up or t >= t_end:
            records.append(snapshot(u, grid, p, t, h, cums))
        if blew_up:
            status = Status.BLOW_UP
            t_detect = t
            break

    if records[-1].t != t:
        records.append(snapshot(u, grid, p, t, dt_nom, cums))
    final = SimState(t, Field(grid, u, spectral=True), step_index, dt_nom)
    return Trajectory(records, status, t_detect, final, threshold, accumulate, steps, rejections)


def energy_identity_residual(traj: Trajectory) -> float:
    """max_t |‖u0‖² + work(t) - ‖u(t)‖² - diss(t)| / ‖u0‖² over recorded times."""
    if not traj.accumulated:
        raise MissingDiagnostics("trajectory was integrated without energy accumulators")
    l2 = traj.column("l2")
    diss = traj.column("diss_cum")
    work = traj.column("work_cum")
    if np.any(np.isnan(diss)) or np.any(np.isnan(work)):
        raise MissingDiagnostics("cumulative dissipation/work columns are missing")
    e0 = l2[0] ** 2
    resid = np.abs(e0 + work - l2**2 - diss)
    if e0 == 0:
        return float(resid.max())
    return float(resid.max() / e0)


def save_checkpoint(state: SimState, path):
    meta = json.dumps(
        {"t": state.t, "step_index": state.step_index, "dt_current": state.dt_current}
    ).encode()
    write_coeffs(path, state.u.grid, state.u.coeffs, meta)


def load_checkpoint(path) -> SimState:
    grid, coeffs, meta = read_coeffs(path)
    m = json.loads(meta.decode())
    return SimState(m["t"], Field(grid, coeffs, spectral=True), m["step_index"], m["dt_current"])
