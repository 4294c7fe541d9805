"""
Discrete function spaces on the 2π-periodic torus.

Physical arrays have shape ``(ny, nx)`` with ``arr[j, i] = f(x_i, y_j)``.
Spectral arrays have the same shape and hold the normalized coefficients

    f̂_k = (2π)^-2 ∫ f(x) exp(-i k·x) dx  ≈  fft2(f) / (nx * ny),

so a constant field 1 has coefficient 1 at k = 0 and all norms are
integral-based (‖1‖_L² = 2π).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.fft as sfft

from .errors import NonZeroMean

TWO_PI = 2.0 * np.pi
AREA = TWO_PI**2
MEAN_TOL = 1e-10


def _int_wavenumbers(n):
    # {-n/2+1, ..., n/2} in FFT storage order, Nyquist kept positive
    k = np.fft.fftfreq(n, d=1.0 / n)
    k[n // 2] = n // 2
    return k.astype(np.float64)


@dataclass(frozen=True)
class TorusGrid:
    """Uniform ``nx`` x ``ny`` grid on [0, 2π)², with wavenumber tables and 2/3 mask."""

    nx: int
    ny: int
    kx: np.ndarray = field(init=False, repr=False, compare=False)
    ky: np.ndarray = field(init=False, repr=False, compare=False)
    KX: np.ndarray = field(init=False, repr=False, compare=False)
    KY: np.ndarray = field(init=False, repr=False, compare=False)
    K2: np.ndarray = field(init=False, repr=False, compare=False)
    mask: np.ndarray = field(init=False, repr=False, compare=False)
    dkx: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        for name in ("nx", "ny"):
            n = getattr(self, name)
            if int(n) != n or n < 8 or n % 2:
                raise ValueError(f"{name} must be an even integer >= 8, got {n}")
        kx = _int_wavenumbers(self.nx)
        ky = _int_wavenumbers(self.ny)
        KX, KY = np.meshgrid(kx, ky)  # shape (ny, nx)
        mask = (np.abs(KX) <= self.nx / 3) & (np.abs(KY) <= self.ny / 3)
        # derivative symbol: Nyquist column zeroed (odd derivative of a real field)
        dkx = kx.copy()
        dkx[self.nx // 2] = 0.0
        for name, val in (
            ("kx", kx), ("ky", ky), ("KX", KX), ("KY", KY),
            ("K2", KX**2 + KY**2), ("mask", mask), ("dkx", dkx[None, :]),
        ):
            val.setflags(write=False)
            object.__setattr__(self, name, val)

    @property
    def shape(self):
        return (self.ny, self.nx)

    @property
    def dx(self):
        return TWO_PI / self.nx

    @property
    def dy(self):
        return TWO_PI / self.ny

    @property
    def x(self):
        return np.arange(self.nx) * self.dx

    @property
    def y(self):
        return np.arange(self.ny) * self.dy

    def mesh(self):
        """Return ``(X, Y)`` physical coordinate arrays of shape ``(ny, nx)``."""
        return np.meshgrid(self.x, self.y)

    @property
    def lambda1(self):
        """Smallest positive eigenvalue of -Δ on the grid (always 1 on the 2π-torus)."""
        k2 = self.K2[self.mask]
        return float(k2[k2 > 0].min())

    # raw array transforms, used directly by the hot loops
    def fft(self, values):
        return sfft.fft2(values) / (self.nx * self.ny)

    def ifft(self, coeffs):
        return sfft.ifft2(coeffs * (self.nx * self.ny)).real


class Field:
    """A real scalar field on a :class:`TorusGrid`, held in one of two views.

    ``spectral=False`` means ``data`` are real grid values; ``spectral=True``
    means ``data`` are the complex Fourier coefficients described in the module
    docstring. Operations return new fields and never mutate ``data``.
    """

    __slots__ = ("grid", "data", "spectral")

    def __init__(self, grid: TorusGrid, data, spectral: bool = False):
        data = np.asarray(data, dtype=np.complex128 if spectral else np.float64)
        if data.shape != grid.shape:
            raise ValueError(f"data shape {data.shape} does not match grid {grid.shape}")
        self.grid = grid
        self.data = data
        self.spectral = bool(spectral)

    @classmethod
    def from_function(cls, grid, func):
        X, Y = grid.mesh()
        return cls(grid, np.broadcast_to(func(X, Y), grid.shape).astype(np.float64))

    @classmethod
    def zeros(cls, grid, spectral=False):
        dtype = np.complex128 if spectral else np.float64
        return cls(grid, np.zeros(grid.shape, dtype=dtype), spectral)

    @property
    def values(self) -> np.ndarray:
        return self.data if not self.spectral else self.grid.ifft(self.data)

    @property
    def coeffs(self) -> np.ndarray:
        return self.data if self.spectral else self.grid.fft(self.data)

    @property
    def mean(self) -> float:
        """Spatial average (1/(2π)²)∫f, i.e. the k = 0 coefficient."""
        if self.spectral:
            return float(self.data[0, 0].real)
        return float(self.data.mean())

    def _new(self, data, spectral):
        return Field(self.grid, data, spectral)

    def __add__(self, other):
        if self.spectral:
            return self._new(self.data + other.coeffs, True)
        return self._new(self.data + other.values, False)

    def __sub__(self, other):
        if self.spectral:
            return self._new(self.data - other.coeffs, True)
        return self._new(self.data - other.values, False)

    def __mul__(self, scalar):
        return self._new(self.data * scalar, self.spectral)

    __rmul__ = __mul__

    def __neg__(self):
        return self._new(-self.data, self.spectral)

    def __repr__(self):
        view = "spectral" if self.spectral else "physical"
        return f"Field({self.grid.nx}x{self.grid.ny}, {view})"

    # serialization: one text header line then raw little-endian float64 values
    def save(self, path):
        """Write physical values row-major (y rows, x fastest) after a text header."""
        header = f"CHFIELD nx={self.grid.nx} ny={self.grid.ny} view=physical\n"
        vals = np.ascontiguousarray(self.values, dtype="<f8")
        with open(path, "wb") as fh:
            fh.write(header.encode("ascii"))
            fh.write(vals.tobytes())

    @classmethod
    def load(cls, path, grid=None):
        raw = Path(path).read_bytes()
        nl = raw.index(b"\n")
        parts = dict(p.split("=") for p in raw[:nl].decode("ascii").split()[1:])
        nx, ny = int(parts["nx"]), int(parts["ny"])
        if grid is None:
            grid = TorusGrid(nx, ny)
        elif grid.shape != (ny, nx):
            raise ValueError(f"file holds a {nx}x{ny} field, grid is {grid.nx}x{grid.ny}")
        vals = np.frombuffer(raw[nl + 1:], dtype="<f8").reshape(ny, nx)
        return cls(grid, vals.copy())

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write(f"# nx={self.grid.nx} ny={self.grid.ny} view=physical\n")
            np.savetxt(fh, self.values, delimiter=",", fmt="%.17g")


def to_spectral(f: Field) -> Field:
    if f.spectral:
        return f
    return Field(f.grid, f.grid.fft(f.data), spectral=True)


def to_physical(f: Field) -> Field:
    if not f.spectral:
        return f
    return Field(f.grid, f.grid.ifft(f.data), spectral=False)


def dealias(f: Field) -> Field:
    """Zero every mode outside the 2/3 mask. Returns a spectral-view field."""
    return Field(f.grid, f.coeffs * f.grid.mask, spectral=True)


@dataclass(frozen=True)
class MeanFluctPair:
    """x-average ⟨u⟩(y) (stored as the average, not the bare integral) and u - ⟨u⟩."""

    mean_part: np.ndarray
    fluct_part: Field

    def reconstruct(self) -> Field:
        grid = self.fluct_part.grid
        return Field(grid, self.fluct_part.values + self.mean_part[:, None])

    def mean_part_l2(self) -> float:
        """‖⟨u⟩‖_{L²(T_y)} with ⟨u⟩ the x-average."""
        dy = self.fluct_part.grid.dy
        return float(np.sqrt(dy * np.sum(self.mean_part**2)))


def split_mean_fluct(u: Field) -> MeanFluctPair:
    c = u.coeffs
    grid = u.grid
    mean_hat = np.zeros_like(c)
    mean_hat[:, 0] = c[:, 0]
    fluct_hat = c - mean_hat
    fluct_hat[:, 0] = 0.0
    mean_part = grid.ifft(mean_hat)[:, 0].copy()
    return MeanFluctPair(mean_part, Field(grid, fluct_hat, spectral=True))


def _weighted_energy(coeffs, K2, s):
    power = np.abs(coeffs) ** 2
    if s == 0:
        return AREA * float(power.sum())
    nz = K2 > 0
    return AREA * float(np.sum(K2[nz] ** s * power[nz]))


def sobolev_norm(f: Field, s: float) -> float:
    """Homogeneous Ḣ^s norm, (2π)² Σ |k|^{2s} |f̂_k|², square-rooted.

    s = 0 is the full L² norm. For s < 0 the field must be mean-zero.
    """
    c = f.coeffs
    if s < 0 and abs(c[0, 0]) > MEAN_TOL:
        raise NonZeroMean(f"H^{s} norm needs a mean-zero field, mean = {c[0, 0].real:.3e}")
    return float(np.sqrt(_weighted_energy(c, f.grid.K2, s)))


def l2_norm_coeffs(coeffs) -> float:
    return float(np.sqrt(AREA * np.sum(coeffs.real**2 + coeffs.imag**2)))


def shift_x(f: Field, cells: int) -> Field:
    """Translate by ``cells`` grid cells in +x (exact, spectral)."""
    grid = f.grid
    phase = np.exp(-1j * grid.KX * cells * grid.dx)
    return Field(grid, f.coeffs * phase, spectral=True)


_CKPT_MAGIC = b"CHCKPT1\n"


def write_coeffs(path, grid, coeffs, meta: bytes = b""):
    """Binary dump: magic, header struct, meta blob, complex128 coefficients."""
    with open(path, "wb") as fh:
        fh.write(_CKPT_MAGIC)
        fh.write(struct.pack("<iiI", grid.nx, grid.ny, len(meta)))
        fh.write(meta)
        fh.write(np.ascontiguousarray(coeffs, dtype="<c16").tobytes())


def read_coeffs(path):
    raw = Path(path).read_bytes()
    if not raw.startswith(_CKPT_MAGIC):
        raise ValueError(f"{path} is not a checkpoint file")
    off = len(_CKPT_MAGIC)
    nx, ny, nmeta = struct.unpack_from("<iiI", raw, off)
    off += struct.calcsize("<iiI")
    meta = raw[off:off + nmeta]
    off += nmeta
    coeffs = np.frombuffer(raw[off:], dtype="<c16").reshape(ny, nx).copy()
    return TorusGrid(nx, ny), coeffs, meta
