import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from chshear.errors import NonZeroMean
from chshear.operators import (
    Form,
    PhysicalParams,
    ShearProfile,
    SpectralOperator,
    apply_laplacian_power,
    averaged_rhs,
    free_energy,
    load_shear_profile,
    nonlinear_flux,
    rhs,
    shear_advect,
    shear_profile,
)
from chshear.spectral import Field, TorusGrid, split_mean_fluct


def fd_laplacian(vals, h):
    """Fourth-order central differences, periodic."""
    def d2(a, axis):
        return (-np.roll(a, 2, axis) + 16 * np.roll(a, 1, axis) - 30 * a
                + 16 * np.roll(a, -1, axis) - np.roll(a, -2, axis)) / (12 * h * h)
    return d2(vals, 0) + d2(vals, 1)


def smooth_field(grid, seed):
    rng = np.random.default_rng(seed)
    X, Y = grid.mesh()
    out = np.zeros(grid.shape)
    for kx, ky in [(1, 0), (0, 1), (1, 2), (2, -1), (3, 1)]:
        a, b = rng.normal(size=2)
        out += a * np.cos(kx * X + ky * Y) + b * np.sin(kx * X + ky * Y)
    return Field(grid, out)


# ---------------------------------------------------------------- params


def test_params_validation_and_forms():
    with pytest.raises(ValueError):
        PhysicalParams(0.0, 1.0)
    with pytest.raises(ValueError):
        PhysicalParams(1.0, -1.0)
    r = PhysicalParams(0.1, 1e-2, a=-1)
    assert r.advection_coeff == 1 and r.nonlinear_coeff == 1e-2
    assert r.hyperdiffusion == pytest.approx(1e-3)
    o = PhysicalParams.from_amplitude(0.1, 100.0, a=-1)
    assert o.form is Form.ORIGINAL and o.gamma == pytest.approx(1e-2)
    assert o.advection_coeff == pytest.approx(100.0) and o.hyperdiffusion == 0.1
    assert PhysicalParams(1, 1, form="original").form is Form.ORIGINAL
    assert PhysicalParams(1, 1).is_linear and not r.is_linear


def test_original_form_is_time_rescaled_copy(grid32):
    """u_t + A v ∂x u + εΔ²u = Δf equals (1/γ)·(rescaled right side)."""
    u = smooth_field(grid32, 1)
    v = shear_profile("cos", grid32)
    gamma = 0.05
    orig = rhs(u, PhysicalParams(0.3, gamma, a=-1, b=0.5, form="original"), v)
    resc = rhs(u, PhysicalParams(0.3, gamma, a=-1, b=0.5, form="rescaled"), v)
    assert np.allclose(orig.coeffs * gamma, resc.coeffs, atol=1e-13)


# ---------------------------------------------------------------- shear


def test_builtin_profiles(grid32):
    cos = shear_profile("cos", grid32)
    assert cos.m == 2 and cos.lipschitz == 2.0
    assert np.allclose(cos.values, np.cos(grid32.y))
    sin3 = shear_profile("sin3", grid32)
    assert sin3.m == 3 and sin3.lipschitz == pytest.approx(1 + 2 / math.sqrt(3))
    assert shear_profile("const", grid32).m is None
    assert shear_profile("none", grid32).is_zero
    with pytest.raises(ValueError):
        shear_profile("tanh", grid32)
    with pytest.raises(ValueError):
        ShearProfile("bad", np.zeros(4), 1, 0.0)


def test_profile_interpolation_and_file(tmp_path, grid32):
    y = np.linspace(0, 6, 17)
    loaded_path = tmp_path / "v.txt"
    np.savetxt(loaded_path, np.cos(grid32.y))
    v = load_shear_profile(loaded_path, grid32, 2)
    assert np.allclose(v.evaluate(y), np.cos(y), atol=1e-12)
    assert v.lipschitz == pytest.approx(2.0, abs=1e-2)
    np.savetxt(loaded_path, np.ones(5))
    with pytest.raises(ValueError):
        load_shear_profile(loaded_path, grid32, 2)


def test_shear_advect_analytic(grid32):
    u = Field.from_function(grid32, lambda X, Y: np.sin(2 * X + Y))
    out = shear_advect(u, shear_profile("cos", grid32), 3.0)
    X, Y = grid32.mesh()
    expect = 3.0 * np.cos(Y) * 2 * np.cos(2 * X + Y)
    assert np.max(np.abs(out.values - expect)) < 1e-12


def test_advection_kills_x_average(grid32):
    u = smooth_field(grid32, 2)
    out = shear_advect(u, shear_profile("sin3", grid32), 7.0)
    assert np.abs(out.coeffs[:, 0]).max() == 0.0


@given(st.integers(0, 2**31), st.sampled_from(["cos", "sin3", "const"]))
@settings(max_examples=20, deadline=None)
def test_advection_is_skew_property(seed, name):
    """∫ u v ∂x u = 0 for dealiased data: transport conserves L²."""
    g = TorusGrid(24, 24)
    u = smooth_field(g, seed)
    adv = shear_advect(u, shear_profile(name, g), 1.0)
    inner = float(np.sum((np.conj(u.coeffs) * adv.coeffs).real))
    assert abs(inner) < 1e-12 * max(1.0, float(np.sum(np.abs(u.coeffs) ** 2)))


# ---------------------------------------------------------------- Laplacian powers


def test_laplacian_powers_single_mode(grid32):
    f = Field.from_function(grid32, lambda X, Y: np.sin(2 * X + 3 * Y))
    assert np.allclose(apply_laplacian_power(f, 1).values, -13 * f.values, atol=1e-12)
    assert np.allclose(apply_laplacian_power(f, 2).values, 169 * f.values, rtol=0, atol=1e-10 * 169)
    assert np.allclose(apply_laplacian_power(f, -1).values, -f.values / 13, atol=1e-14)
    assert np.allclose(apply_laplacian_power(f, 0.5).values, math.sqrt(13) * f.values, atol=1e-12)


def test_laplacian_matches_finite_differences():
    g = TorusGrid(64, 64)
    f = smooth_field(g, 4)
    spec = apply_laplacian_power(f, 1).values
    fd = fd_laplacian(f.values, g.dx)
    assert np.max(np.abs(spec - fd)) < 1e-4 * np.max(np.abs(spec))


def test_inverse_laplacian_needs_mean_zero(grid32):
    f = Field.from_function(grid32, lambda X, Y: 1 + np.sin(X))
    with pytest.raises(NonZeroMean):
        apply_laplacian_power(f, -1)


@given(st.integers(0, 2**31), st.integers(1, 3))
@settings(max_examples=20, deadline=None)
def test_laplacian_inverse_property(seed, n):
    g = TorusGrid(16, 16)
    f = smooth_field(g, seed)
    back = apply_laplacian_power(apply_laplacian_power(f, n), -n)
    assert np.allclose(back.values, f.values, atol=1e-11)


# ---------------------------------------------------------------- nonlinear flux


def test_flux_cubic_analytic(grid32):
    u = Field.from_function(grid32, lambda X, Y: np.sin(X))
    out = nonlinear_flux(u, PhysicalParams(1, 1, a=1.0))
    X, _ = grid32.mesh()
    # sin³x = (3 sin x - sin 3x)/4
    expect = (-3 * np.sin(X) + 9 * np.sin(3 * X)) / 4
    assert np.max(np.abs(out.values - expect)) < 1e-12


def test_flux_matches_finite_differences():
    # cubic of a k <= 3 field reaches k = 9, so the stencil needs a fine grid
    g = TorusGrid(128, 128)
    u = smooth_field(g, 5) * 0.3
    p = PhysicalParams(1, 1, a=-1.0, b=0.4, c=0.2)
    spec = nonlinear_flux(u, p).values
    vals = u.values
    fd = fd_laplacian(p.a * vals**3 + p.b * vals**2 + p.c * vals, g.dx)
    assert np.max(np.abs(spec - fd)) < 1e-3 * np.max(np.abs(spec))


@given(st.integers(0, 2**31))
@settings(max_examples=20, deadline=None)
def test_rhs_preserves_mean_property(seed):
    g = TorusGrid(16, 16)
    u = smooth_field(g, seed) + Field.from_function(g, lambda X, Y: 0.5 + 0 * X)
    p = PhysicalParams(0.1, 0.5, a=-1, b=1, c=0.3)
    out = rhs(u, p, shear_profile("cos", g))
    assert out.coeffs[0, 0] == 0


def test_operator_rejects_foreign_profile(grid32):
    with pytest.raises(ValueError):
        SpectralOperator(grid32, PhysicalParams(1, 1), shear_profile("cos", TorusGrid(16, 16)))


def test_linear_operator_symbol(grid32):
    p = PhysicalParams(0.2, 0.5)
    u = Field.from_function(grid32, lambda X, Y: np.sin(2 * X + 3 * Y))
    out = rhs(u, p, shear_profile("none", grid32))
    assert np.allclose(out.values, -0.1 * 169 * u.values, rtol=0, atol=1e-12 * 16.9)


# ---------------------------------------------------------------- averaged equation


def test_averaged_rhs_matches_x_average_of_rhs(grid32):
    u = smooth_field(grid32, 6) * 0.5 + Field.from_function(grid32, lambda X, Y: np.cos(Y))
    p = PhysicalParams(0.3, 0.2, a=-1, b=0.5, c=0.1)
    full = rhs(u, p, shear_profile("cos", grid32)).values.mean(axis=1)
    avg = averaged_rhs(split_mean_fluct(u), p)
    assert np.allclose(avg, full, atol=1e-12)


# ---------------------------------------------------------------- free energy


def test_free_energy_sin_x(grid32):
    u = Field.from_function(grid32, lambda X, Y: np.sin(X))
    p = PhysicalParams(0.5, 1.0, a=-1.0)
    assert free_energy(u, p, 0.0) == pytest.approx(-3 * math.pi**2 / 8, rel=1e-13)
    assert free_energy(u, p, 0.5) == pytest.approx(-3 * math.pi**2 / 8 + 0.5 * math.pi**2, rel=1e-13)


def test_free_energy_cubic_term(grid32):
    u = Field.from_function(grid32, lambda X, Y: 1 + np.sin(X))
    p = PhysicalParams(1, 1, b=3.0)
    # ∫ (1 + sin x)³ = (2π)² (1 + 3/2)
    assert free_energy(u, p, 0.0) == pytest.approx(4 * math.pi**2 * 2.5, rel=1e-13)
