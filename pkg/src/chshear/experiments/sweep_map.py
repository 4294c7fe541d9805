"""(a, A) sweep: one scenario per cell, merged into a suppression map."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from ..integrators import Status
from .config import RunConfig, SweepSpec
from .scenario import atomic_write, run_scenario

log = logging.getLogger(__name__)

SWEEP_COLUMNS = ("a", "A", "status", "final_l2", "decay_rate", "r2")


@dataclass(frozen=True)
class SweepRow:
    a: float
    A: float
    status: str
    final_l2: float
    decay_rate: float
    r2: float
    error: Optional[str] = None


def cell_config(base: RunConfig, a: float, A: float) -> RunConfig:
    params = replace(base.params, a=float(a), gamma=1.0 / float(A))
    outputs = replace(base.outputs, tail_fit=True, checkpoint=None)
    bootstrap = replace(base.bootstrap, enabled=False)
    return replace(base, params=params, outputs=outputs, bootstrap=bootstrap)


def run_cell(args) -> SweepRow:
    base, a, A = args
    try:
        res = run_scenario(cell_config(base, a, A), write=False)
    except Exception as exc:  # recorded per cell, the sweep carries on
        log.error("sweep cell a=%r A=%r failed: %s", a, A, exc)
        return SweepRow(a, A, "Error", math.nan, math.nan, math.nan, str(exc))
    fit = res.fit
    return SweepRow(
        a, A, res.trajectory.status.value, res.trajectory.records[-1].l2,
        fit.rate if fit else math.nan, fit.r_squared if fit else math.nan,
    )


def sweep(base: RunConfig, spec: SweepSpec, jobs: int = 1):
    """Run every (a, A) cell; rows come back sorted by (a, A) whatever the pool order."""
    cells = sorted({(float(a), float(A)) for a in spec.a_values for A in spec.amplitudes})
    if not cells:
        raise ValueError("empty sweep grid")
    tasks = [(base, a, A) for a, A in cells]
    if jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as ex:
            rows = list(ex.map(run_cell, tasks))
    else:
        rows = [run_cell(t) for t in tasks]
    return sorted(rows, key=lambda r: (r.a, r.A))


def sweep_csv(rows) -> str:
    lines = [",".join(SWEEP_COLUMNS)]
    for r in rows:
        lines.append(f"{r.a!r},{r.A!r},{r.status},{r.final_l2!r},{r.decay_rate!r},{r.r2!r}")
    return "\n".join(lines) + "\n"


def write_sweep(rows, path):
    atomic_write(Path(path), sweep_csv(rows))


def monotonicity_violations(rows):
    """Cells where, at fixed a < 0, a larger A blows up although a smaller A was suppressed."""
    out = []
    by_a = {}
    for r in rows:
        by_a.setdefault(r.a, []).append(r)
    for a, group in by_a.items():
        if a >= 0:
            continue
        group = sorted(group, key=lambda r: r.A)
        suppressed_at = None
        for r in group:
            if r.status == Status.REACHED_T_END.value and suppressed_at is None:
                suppressed_at = r.A
            elif r.status == Status.BLOW_UP.value and suppressed_at is not None:
                out.append((a, suppressed_at, r.A))
    for a, lo, hi in out:
        log.warning("non-monotone cell: a=%r suppressed at A=%r but blew up at A=%r", a, lo, hi)
    return out
