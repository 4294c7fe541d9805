"""Initial data: a single Fourier mode or a seeded band-limited random field."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Tuple, Union

import numpy as np

from ..errors import BandOutOfRange
from ..spectral import AREA, Field, TorusGrid


@dataclass(frozen=True)
class SingleMode:
    """``amp * sin(kx x + ky y)``."""

    k: Tuple[int, int] = (1, 0)
    amp: float = 1.0


@dataclass(frozen=True)
class SeededRandom:
    """Gaussian coefficients on ``band[0] <= |k| <= band[1]``, total mean zero.

    Both parts are measured in L²(T²): the x-dependent part is scaled to norm
    ``amp``, the x-average part to ``mean_frac * amp`` (and removed entirely
    when ``mean_frac`` is 0).
    """

    seed: int
    band: Tuple[int, int] = (1, 8)
    amp: float = 1.0
    mean_frac: float = 0.0


InitialData = Union[SingleMode, SeededRandom]


def _kmax_allowed(grid: TorusGrid):
    return min(grid.nx, grid.ny) / 3


def make_initial_data(spec: InitialData, grid: TorusGrid) -> Field:
    if spec.amp <= 0:
        raise ValueError(f"amp must be positive, got {spec.amp}")
    if isinstance(spec, SingleMode):
        kx, ky = spec.k
        if (kx, ky) == (0, 0):
            raise BandOutOfRange("single mode k = (0, 0) has no sine component")
        if abs(kx) > grid.nx / 3 or abs(ky) > grid.ny / 3:
            raise BandOutOfRange(f"mode {spec.k} lies outside the dealiased range")
        return Field.from_function(grid, lambda X, Y: spec.amp * np.sin(kx * X + ky * Y))

    lo, hi = spec.band
    if lo < 1 or hi < lo or hi > _kmax_allowed(grid):
        raise BandOutOfRange(
            f"band {spec.band} must satisfy 1 <= lo <= hi <= {_kmax_allowed(grid):g}"
        )
    if spec.mean_frac < 0:
        raise ValueError("mean_frac must be non-negative")
    rng = np.random.default_rng(spec.seed)
    kmag = np.sqrt(grid.K2)
    band = (kmag >= lo) & (kmag <= hi)
    raw = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    # real part of the inverse transform keeps the band and enforces conjugate symmetry
    vals = grid.ifft(np.where(band, raw, 0.0))
    c = grid.fft(vals) * band
    c[0, 0] = 0.0

    fluct = c.copy()
    fluct[:, 0] = 0.0
    mean = np.zeros_like(c)
    mean[:, 0] = c[:, 0]
    fluct *= spec.amp / np.sqrt(AREA * np.sum(np.abs(fluct) ** 2))
    mnorm = np.sqrt(AREA * np.sum(np.abs(mean) ** 2))
    if spec.mean_frac == 0 or mnorm == 0:
        mean[:] = 0.0
    else:
        mean *= spec.mean_frac * spec.amp / mnorm
    return Field(grid, grid.ifft(fluct + mean))


def probe_field(grid: TorusGrid, seed: int, band=(1, 8)) -> Field:
    """L²-normalized band-limited probe with zero x-average."""
    return make_initial_data(SeededRandom(seed, band, 1.0, 0.0), grid)
