"""Running configured scenarios and writing their outputs."""

from __future__ import annotations

import json
import logging
import math
import os
import tempfile
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional

import numpy as np

from ..diagnostics import records_to_csv
from ..errors import WindowTooShort
from ..integrators import SimState, Status, Trajectory, integrate, save_checkpoint
from ..semigroup import DecayCurve, DecayFit, estimate_lambda, measure_lambda
from .bootstrap import BootstrapReport, bootstrap_monitor
from .config import RunConfig
from .initial import make_initial_data, probe_field

log = logging.getLogger(__name__)


@dataclass
class ScenarioResult:
    config: RunConfig
    trajectory: Trajectory
    fit: Optional[DecayFit] = None
    bootstrap: Optional[BootstrapReport] = None
    files: dict = field(default_factory=dict)

    def status_dict(self):
        traj = self.trajectory
        recs = traj.records
        out = {
            "name": self.config.outputs.name,
            "status": traj.status.value,
            "blow_up": traj.status is Status.BLOW_UP,
            "t_detect": traj.t_detect,
            "t_final": recs[-1].t,
            "initial_l2": recs[0].l2,
            "final_l2": recs[-1].l2,
            "threshold": traj.threshold if math.isfinite(traj.threshold) else None,
            "steps": traj.steps,
            "rejections": traj.rejections,
            "decay_fit": None,
            "bootstrap": None,
        }
        if self.fit is not None:
            f = self.fit
            out["decay_fit"] = {"rate": f.rate, "amplitude": f.amplitude, "r2": f.r_squared,
                                "t_lo": f.t_lo, "t_hi": f.t_hi}
        if self.bootstrap is not None:
            out["bootstrap"] = self.bootstrap.summary()
        return out


def atomic_write(path, text):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def tail_fit(traj: Trajectory, window=0.5) -> DecayFit:
    """Exponential fit of ‖u‖_{L²} on the last (1 - window) fraction of the run."""
    t = traj.column("t")
    curve = DecayCurve(t - t[0], traj.column("l2"))
    fit = estimate_lambda(curve, window=(window, 1.0))
    return replace(fit, t_lo=fit.t_lo + t[0], t_hi=fit.t_hi + t[0])


def bootstrap_lambda(cfg: RunConfig):
    """λ_γ for the monitor: configured value, else measured on the same (ε, γ, v1).

    Falls back to C·γ^(2/(2+m)) when the measurement fails and a prefactor C is set.
    """
    bs = cfg.bootstrap
    if bs.lambda_gamma is not None:
        return bs.lambda_gamma, "given"
    shear = cfg.shear()
    try:
        fit, _ = measure_lambda(probe_field(cfg.grid, bs.probe_seed), cfg.params, shear)
        if fit.rate > 0:
            return fit.rate, "measured"
    except (WindowTooShort, ValueError) as exc:
        log.warning("lambda measurement failed: %s", exc)
    if bs.prefactor is not None and shear.m is not None:
        return bs.prefactor * cfg.params.gamma ** (2.0 / (2.0 + shear.m)), "formula"
    raise RuntimeError("could not determine lambda_gamma; set [bootstrap] lambda_gamma or prefactor")


def run_scenario(cfg: RunConfig, out_dir=None, write=True) -> ScenarioResult:
    """Integrate the configured problem; optionally write diagnostics CSV and status JSON."""
    grid = cfg.grid
    shear = cfg.shear()
    u0 = make_initial_data(cfg.initial, grid)
    state = SimState(0.0, u0, 0, cfg.controller.dt_init)
    traj = integrate(state, cfg.t_end, cfg.controller, cfg.params, shear,
                     output_interval=cfg.output_interval, accumulate=cfg.outputs.accumulate)
    result = ScenarioResult(cfg, traj)

    if cfg.outputs.tail_fit and traj.status is Status.REACHED_T_END:
        try:
            result.fit = tail_fit(traj, cfg.outputs.fit_window)
        except (WindowTooShort, ValueError) as exc:
            log.warning("tail fit skipped: %s", exc)

    if cfg.bootstrap.enabled:
        lam, source = bootstrap_lambda(cfg)
        cps = None
        if cfg.bootstrap.checkpoint_interval:
            t_last = traj.records[-1].t
            cps = np.arange(0.0, t_last + 1e-12, cfg.bootstrap.checkpoint_interval)
        result.bootstrap = bootstrap_monitor(traj, lam, cps, source)

    if write:
        out = Path(out_dir or ".")
        diag = out / cfg.outputs.diagnostics
        status = out / cfg.outputs.status
        atomic_write(diag, records_to_csv(traj.records))
        atomic_write(status, json.dumps(result.status_dict(), indent=2) + "\n")
        result.files = {"diagnostics": str(diag), "status": str(status)}
        if cfg.outputs.checkpoint:
            ck = out / cfg.outputs.checkpoint
            save_checkpoint(traj.final_state, ck)
            result.files["checkpoint"] = str(ck)
    return result
