"""Per-record scalar diagnostics and their CSV form."""

from __future__ import annotations

import csv
import io
from dataclasses import astuple, dataclass, fields

import numpy as np

from .operators import PhysicalParams, free_energy
from .spectral import AREA, Field, l2_norm_coeffs

COLUMNS = (
    "t",
    "l2",
    "h2",
    "mean",
    "mean_part_l2",
    "fluct_l2",
    "free_energy",
    "diss_cum",
    "fluct_diss_cum",
    "work_cum",
    "dt",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    """One row of the diagnostics table.

    ``mean_part_l2`` is ‖⟨u⟩‖_{L²(y)} with ⟨u⟩ the x-average, so that
    ``l2² = 2π·mean_part_l2² + fluct_l2²``. Multiply by 2π for the bare-integral
    convention. Cumulative columns are NaN when accumulation was disabled.
    """

    t: float
    l2: float
    h2: float
    mean: float
    mean_part_l2: float
    fluct_l2: float
    free_energy: float
    diss_cum: float
    fluct_diss_cum: float
    work_cum: float
    dt: float

    @property
    def mean_part_l2_integral(self):
        return 2.0 * np.pi * self.mean_part_l2


assert tuple(f.name for f in fields(DiagnosticsRecord)) == COLUMNS


def snapshot(u_hat, grid, params: PhysicalParams, t, dt, cums=(np.nan, np.nan, np.nan)):
    """Build a record from spectral coefficients ``u_hat`` at time ``t``."""
    K2 = grid.K2
    power = u_hat.real**2 + u_hat.imag**2
    l2 = float(np.sqrt(AREA * power.sum()))
    h2 = float(np.sqrt(AREA * np.sum(K2**2 * power)))
    mean_col = u_hat[:, 0]
    # x-average as a function of y: ‖avg‖²_{L²(y)} = 2π Σ_ky |û(0, ky)|²
    mean_part_l2 = float(np.sqrt(2.0 * np.pi * np.sum(np.abs(mean_col) ** 2)))
    fluct_l2 = l2_norm_coeffs(u_hat[:, 1:])
    fe = free_energy(Field(grid, u_hat, spectral=True), params, params.epsilon)
    return DiagnosticsRecord(
        float(t), l2, h2, float(u_hat[0, 0].real), mean_part_l2, fluct_l2, fe,
        float(cums[0]), float(cums[1]), float(cums[2]), float(dt),
    )


def records_to_csv(records, path=None):
    """Fixed column order; floats written with repr precision so reruns compare byte-for-byte."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS)
    for r in records:
        w.writerow([repr(float(x)) for x in astuple(r)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    return text


def records_from_csv(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if tuple(rows[0]) != COLUMNS:
        raise ValueError(f"{path}: unexpected header {rows[0]}")
    return [DiagnosticsRecord(*map(float, r)) for r in rows[1:]]


def column(records, name):
    return np.array([getattr(r, name) for r in records], dtype=np.float64)
