"""Spatial operators and functionals of the advective Cahn-Hilliard equation.

Rescaled form::

    u_t + v1(y) ∂x u + εγ Δ²u = γ Δ(a u³ + b u² + c u)

Original form (shear amplitude A = 1/γ)::

    u_t + A v1(y) ∂x u + ε Δ²u = Δ(a u³ + b u² + c u)
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import NonZeroMean
from .spectral import AREA, MEAN_TOL, Field, MeanFluctPair, TorusGrid


class Form(str, enum.Enum):
    RESCALED = "rescaled"
    ORIGINAL = "original"


@dataclass(frozen=True)
class PhysicalParams:
    epsilon: float
    gamma: float
    a: float = 0.0
    b: float = 0.0
    c: float = 0.0
    form: Form = Form.RESCALED

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not self.gamma > 0:
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        object.__setattr__(self, "form", Form(self.form))

    @classmethod
    def from_amplitude(cls, epsilon, amplitude, a=0.0, b=0.0, c=0.0, form=Form.ORIGINAL):
        return cls(epsilon, 1.0 / amplitude, a, b, c, form)

    @property
    def amplitude(self):
        return 1.0 / self.gamma

    @property
    def advection_coeff(self):
        """Multiplier of v1(y) ∂x u in the equation actually integrated."""
        return 1.0 if self.form is Form.RESCALED else 1.0 / self.gamma

    @property
    def nonlinear_coeff(self):
        return self.gamma if self.form is Form.RESCALED else 1.0

    @property
    def hyperdiffusion(self):
        """Coefficient of Δ²u: εγ (rescaled) or ε (original)."""
        return self.epsilon * self.nonlinear_coeff

    @property
    def is_linear(self):
        return self.a == 0 and self.b == 0 and self.c == 0


@dataclass(frozen=True)
class ShearProfile:
    """Samples of v1 on the grid's y points plus its declared critical-point order.

    ``m`` is ``None`` for the non-mixing controls (zero and constant shear).
    ``func`` evaluates the profile off-grid when an analytic form is known.
    """

    name: str
    values: np.ndarray
    m: Optional[int]
    lipschitz: float
    func: Optional[Callable[[np.ndarray], np.ndarray]] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.ndim != 1:
            raise ValueError("shear values must be a 1D column of ny samples")
        if not np.all(np.isfinite(vals)):
            raise ValueError("shear values must be finite")
        if self.m is not None and self.m < 2:
            raise ValueError(f"critical-point order m must be >= 2, got {self.m}")
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    @property
    def max_abs(self):
        return float(np.max(np.abs(self.values))) if self.values.size else 0.0

    @property
    def is_zero(self):
        return not np.any(self.values)

    def evaluate(self, y):
        """v1 at arbitrary points; trigonometric interpolation of the samples if no formula."""
        y = np.asarray(y, dtype=np.float64)
        if self.func is not None:
            return np.broadcast_to(self.func(y), y.shape).astype(np.float64)
        n = self.values.size
        coeffs = np.fft.fft(self.values) / n
        k = np.fft.fftfreq(n, d=1.0 / n)
        out = np.real(np.exp(1j * np.multiply.outer(y, k)) @ coeffs)
        return out


_BUILTIN = {
    # name: (formula, m, ‖v‖_∞ + ‖v'‖_∞)
    "cos": (lambda y: np.cos(y), 2, 2.0),
    "sin3": (lambda y: np.sin(y) ** 3, 3, 1.0 + 2.0 / math.sqrt(3.0)),
    "const": (lambda y: np.ones_like(y), None, 1.0),
    "none": (lambda y: np.zeros_like(y), None, 0.0),
}


def shear_profile(name: str, grid: TorusGrid) -> ShearProfile:
    """Built-in profiles: ``cos`` (m=2), ``sin3`` (m=3), ``const`` and ``none`` controls."""
    try:
        func, m, lip = _BUILTIN[name]
    except KeyError:
        raise ValueError(f"unknown shear profile {name!r}; choose from {sorted(_BUILTIN)}") from None
    return ShearProfile(name, func(grid.y), m, lip, func)


def load_shear_profile(path, grid: TorusGrid, m: int, name=None) -> ShearProfile:
    """Custom profile: a text column of ``ny`` values, one per line."""
    vals = np.loadtxt(path, dtype=np.float64, ndmin=1)
    if vals.shape != (grid.ny,):
        raise ValueError(f"{path}: expected {grid.ny} samples, found {vals.size}")
    n = vals.size
    dv = np.fft.ifft(1j * np.fft.fftfreq(n, d=1.0 / n) * np.fft.fft(vals)).real
    lip = float(np.abs(vals).max() + np.abs(dv).max())
    return ShearProfile(name or str(path), vals, m, lip)


class SpectralOperator:
    """Precomputed array kernels for one (grid, params, shear) triple.

    Works on raw coefficient arrays; the Field-level functions below and the
    integrators both go through it.
    """

    def __init__(self, grid: TorusGrid, params: PhysicalParams, shear: ShearProfile):
        if shear.values.shape != (grid.ny,):
            raise ValueError("shear profile was sampled on a different grid")
        self.grid = grid
        self.params = params
        self.shear = shear
        self.mask = grid.mask
        self.K2 = grid.K2
        self.K4 = grid.K2**2
        self.linear = -params.hyperdiffusion * self.K4
        self.ikx_adv = (1j * params.advection_coeff) * grid.dkx * self.mask
        self.v_col = shear.values[:, None]
        self.has_advection = params.advection_coeff != 0 and not shear.is_zero
        a, b, c = params.a, params.b, params.c
        self._poly = (a, b, c)
        self.has_nonlinear = not params.is_linear
        self.flux_symbol = -params.nonlinear_coeff * self.K2 * self.mask

    def advection(self, u_hat, u_phys=None):
        """Spectral coefficients of A_eff v1 ∂x u, dealiased (conservative form ∂x(v1 u))."""
        if not self.has_advection:
            return np.zeros_like(u_hat)
        if u_phys is None:
            u_phys = self.grid.ifft(u_hat * self.mask)
        return self.ikx_adv * self.grid.fft(self.v_col * u_phys)

    def polynomial(self, u_phys):
        a, b, c = self._poly
        return u_phys * (c + u_phys * (b + a * u_phys))

    def flux(self, u_hat, u_phys=None):
        """Coefficients of γ_eff Δ(a u³ + b u² + c u), dealiased."""
        if not self.has_nonlinear:
            return np.zeros_like(u_hat)
        if u_phys is None:
            u_phys = self.grid.ifft(u_hat * self.mask)
        return self.flux_symbol * self.grid.fft(self.polynomial(u_phys))

    def explicit(self, u_hat):
        """Everything except hyperdiffusion: -advection + γ_eff·flux."""
        if not (self.has_advection or self.has_nonlinear):
            return np.zeros_like(u_hat)
        u_phys = self.grid.ifft(u_hat * self.mask)
        out = np.zeros_like(u_hat)
        if self.has_nonlinear:
            out += self.flux(u_hat, u_phys)
        if self.has_advection:
            out -= self.advection(u_hat, u_phys)
        return out

    def full(self, u_hat):
        return self.linear * u_hat + self.explicit(u_hat)


def _require_mean_zero(f: Field):
    m = f.coeffs[0, 0]
    if abs(m) > MEAN_TOL:
        raise NonZeroMean(f"operation needs a mean-zero field, mean = {m.real:.3e}")


def apply_laplacian_power(f: Field, p: float) -> Field:
    """Signed Δ^p for integer p, unsigned (-Δ)^p for fractional p.

    Negative powers act on mean-zero fields and map the k = 0 mode to 0.
    """
    grid = f.grid
    c = f.coeffs
    if p < 0:
        _require_mean_zero(f)
    K2 = grid.K2
    if float(p).is_integer():
        n = int(p)
        if n >= 0:
            sym = (-K2) ** n
        else:
            sym = np.zeros_like(K2)
            nz = K2 > 0
            sym[nz] = (-K2[nz]) ** n
    else:
        sym = np.zeros_like(K2)
        nz = K2 > 0
        sym[nz] = K2[nz] ** p
    return Field(grid, c * sym, spectral=True)


def shear_advect(u: Field, v: ShearProfile, amplitude: float) -> Field:
    """amplitude · v1(y) ∂x u, pseudo-spectral and dealiased."""
    grid = u.grid
    u_hat = u.coeffs * grid.mask
    if amplitude == 0 or v.is_zero:
        return Field(grid, np.zeros_like(u_hat), spectral=True)
    u_phys = grid.ifft(u_hat)
    out = (1j * amplitude) * grid.dkx * grid.mask * grid.fft(v.values[:, None] * u_phys)
    return Field(grid, out, spectral=True)


def nonlinear_flux(u: Field, p: PhysicalParams) -> Field:
    """Δ(a u³ + b u² + c u) without the γ factor, dealiased in and out."""
    grid = u.grid
    u_phys = grid.ifft(u.coeffs * grid.mask)
    poly = u_phys * (p.c + u_phys * (p.b + p.a * u_phys))
    return Field(grid, -grid.K2 * grid.mask * grid.fft(poly), spectral=True)


def rhs(u: Field, p: PhysicalParams, v: ShearProfile) -> Field:
    op = SpectralOperator(u.grid, p, v)
    return Field(u.grid, op.full(u.coeffs * u.grid.mask), spectral=True)


def averaged_rhs(pair: MeanFluctPair, p: PhysicalParams) -> np.ndarray:
    """Right side of the x-averaged equation, as values of a function of y.

    Computed from the 1D mean profile with ∂y⁴ and from the x-average of the
    full nonlinear flux; shear drops out because v1 ∂x u has zero x-average.
    """
    grid = pair.fluct_part.grid
    ny = grid.ny
    mean = pair.mean_part
    ky = grid.ky
    mean_hat = np.fft.fft(mean) / ny
    hyper = -p.hyperdiffusion * ky**4 * mean_hat * grid.mask[:, 0]
    total = pair.fluct_part.values + mean[:, None]
    u_hat = grid.fft(total) * grid.mask
    u_phys = grid.ifft(u_hat)
    poly = u_phys * (p.c + u_phys * (p.b + p.a * u_phys))
    # x-average of Δ(poly) is ∂y² of the x-average of poly
    poly_avg_hat = (grid.fft(poly) * grid.mask)[:, 0]
    flux_avg_hat = -p.nonlinear_coeff * ky**2 * poly_avg_hat
    return np.fft.ifft((hyper + flux_avg_hat) * ny).real


def free_energy(u: Field, p: PhysicalParams, grad_coeff: float) -> float:
    """∫ (a u⁴/4 + b u³/3) + (grad_coeff/2) |∇u|² over the torus."""
    grid = u.grid
    vals = u.values
    bulk = (AREA / vals.size) * float(np.sum(vals**3 * (p.a * vals / 4.0 + p.b / 3.0)))
    if grad_coeff == 0:
        return bulk
    grad2 = AREA * float(np.sum(grid.K2 * np.abs(u.coeffs) ** 2))
    return bulk + 0.5 * grad_coeff * grad2
