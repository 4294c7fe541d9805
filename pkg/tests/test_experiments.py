import json
import math
from dataclasses import replace

import numpy as np
import pytest

from chshear.errors import BandOutOfRange, ConfigError, MissingDiagnostics, NonPositiveConstant
from chshear.experiments import (
    SeededRandom,
    SingleMode,
    SweepRow,
    ThresholdInputs,
    bootstrap_monitor,
    load_run_config,
    make_initial_data,
    monotonicity_violations,
    run_scenario,
    sweep,
    sweep_csv,
    threshold_report,
    validate,
)
from chshear.experiments import sweep_map as sweep_mod
from chshear.experiments.config import read_config, sweep_spec
from chshear.integrators import SimState, Status, StepController, integrate, load_checkpoint
from chshear.operators import PhysicalParams, shear_profile
from chshear.spectral import Field, TorusGrid, sobolev_norm, split_mean_fluct

BASE_INI = """
[grid]
nx = 32
ny = 32

[params]
epsilon = 1.0
gamma = 0.1
a = 0.0

[shear]
profile = none

[initial_data]
kind = single_mode
kx = 1
ky = 0
amp = 1.0

[controller]
t_end = 20
output_interval = 0.1
"""


def write_ini(tmp_path, text, name="c.ini"):
    path = tmp_path / name
    path.write_text(text)
    return path


# ----------------------------------------------------------- initial data


def test_single_mode_values(grid32):
    u = make_initial_data(SingleMode((2, 1), 3.0), grid32)
    X, Y = grid32.mesh()
    assert np.allclose(u.values, 3 * np.sin(2 * X + Y))
    with pytest.raises(BandOutOfRange):
        make_initial_data(SingleMode((15, 0)), grid32)
    with pytest.raises(BandOutOfRange):
        make_initial_data(SingleMode((0, 0)), grid32)


def test_seeded_random_norms_and_determinism(grid32):
    spec = SeededRandom(seed=42, band=(2, 6), amp=1.5, mean_frac=0.2)
    u = make_initial_data(spec, grid32)
    pair = split_mean_fluct(u)
    assert abs(u.mean) < 1e-15
    assert sobolev_norm(pair.fluct_part, 0) == pytest.approx(1.5, rel=1e-12)
    # mean_part_l2 is the L²(y) norm of the x-average; over T² it gains √(2π)
    assert math.sqrt(2 * math.pi) * pair.mean_part_l2() == pytest.approx(0.3, rel=1e-12)
    again = make_initial_data(spec, grid32)
    assert np.array_equal(u.values, again.values)
    other = make_initial_data(replace(spec, seed=43), grid32)
    assert not np.allclose(u.values, other.values)
    K = np.sqrt(grid32.K2)
    live = np.abs(u.coeffs) > 1e-14
    assert K[live].min() >= 2 - 1e-12 and K[live].max() <= 6 + 1e-12


def test_seeded_random_band_checks(grid32):
    with pytest.raises(BandOutOfRange):
        make_initial_data(SeededRandom(1, band=(0, 4)), grid32)
    with pytest.raises(BandOutOfRange):
        make_initial_data(SeededRandom(1, band=(2, 20)), grid32)


# ----------------------------------------------------------- bootstrap monitor


def hyperdiffusion_traj(grid, eps_gamma=0.1, t_end=60.0, dt_out=0.1):
    u0 = Field.from_function(grid, lambda X, Y: np.sin(X))
    return integrate(SimState(0.0, u0), t_end, StepController(), PhysicalParams(eps_gamma, 1.0),
                     shear_profile("none", grid), output_interval=dt_out)


def test_bootstrap_first_violation_matches_analytic(grid32):
    nu = 0.1
    traj = hyperdiffusion_traj(grid32, nu)
    # λ = 7ν makes ratio1 = e^{-ν Δ} / e^{-7ν Δ/4} = e^{3ν Δ/4}
    rep = bootstrap_monitor(traj, 7 * nu, checkpoints=np.arange(0, 60.0001, 0.1))
    bound = 4 * math.log(20) / (3 * nu)
    first = rep.first_violation(20.0, s=0.0)
    assert abs(first - bound) <= 0.1 + 1e-9
    assert not rep.holds


def test_bootstrap_holds_with_bare_rate(grid32):
    traj = hyperdiffusion_traj(grid32, 0.1, t_end=60.0, dt_out=1.0)
    rep = bootstrap_monitor(traj, 0.1)
    # ratio1 = e^{-3νΔ/4} <= 1 and ratio2 <= 1/2 (half the energy leaves through the fluctuation)
    assert rep.holds and rep.holds_improved and rep.growth_holds
    assert rep.worst_ratio1 <= 1.0 + 1e-12
    assert rep.worst_ratio2 <= 0.5 + 1e-9
    # τ* = 40 and e^{-ν τ*} = e^{-4} <= 1/e
    assert rep.contraction and rep.contraction_holds
    s = rep.summary()
    assert s["ratio1_le_20"] and s["tau_star"] == pytest.approx(40.0)


def test_bootstrap_zero_solution_is_degenerate(grid32):
    traj = integrate(SimState(0.0, Field.zeros(grid32)), 1.0, StepController(), PhysicalParams(1, 1),
                     shear_profile("none", grid32), output_interval=0.25)
    rep = bootstrap_monitor(traj, 1.0)
    assert rep.degenerate and rep.holds
    assert rep.worst_ratio1 == 0.0


def test_bootstrap_needs_dissipation_column(grid32):
    traj = integrate(SimState(0.0, Field.from_function(grid32, lambda X, Y: np.sin(X))), 1.0,
                     StepController(), PhysicalParams(1, 1), shear_profile("none", grid32),
                     accumulate=False)
    with pytest.raises(MissingDiagnostics):
        bootstrap_monitor(traj, 1.0)
    with pytest.raises(ValueError):
        bootstrap_monitor(hyperdiffusion_traj(grid32, t_end=1.0), 0.0)


# ----------------------------------------------------------- thresholds


def test_threshold_k_value():
    rep = threshold_report(ThresholdInputs(epsilon=1.0, a=0.0))
    assert rep.K == pytest.approx(4 ** -0.375, rel=1e-15)
    assert rep.K == pytest.approx(0.5946, abs=1e-4)


def test_threshold_a_zero_passes_cubic():
    for b2, fl in [(1.0, 1.0), (50.0, 3.0), (0.1, 100.0)]:
        rep = threshold_report(ThresholdInputs(epsilon=1.0, a=0.0, B2=b2, fluct0=fl))
        assert rep.cubic_smallness.lhs == 0.0 and rep.cubic_smallness.holds
    huge = threshold_report(ThresholdInputs(epsilon=1.0, a=-1.0, B2=50.0, fluct0=3.0))
    assert huge.cubic_smallness.lhs == math.inf and not huge.cubic_smallness.holds


def test_threshold_dissipation_bound():
    rep = threshold_report(ThresholdInputs(epsilon=1.0, a=0.0, L=1.0, fluct0=1.0))
    assert rep.a_bound_dissipation.rhs == 1e-7
    assert rep.a_bound_decay.rhs == 1e-6
    bad = threshold_report(ThresholdInputs(epsilon=1.0, a=2e-7))
    assert not bad.a_bound_dissipation.holds and not bad.all_hold


def test_threshold_report_is_pure_and_labeled():
    inp = ThresholdInputs(epsilon=0.3, a=-1e-9, b=0.2, fluct0=0.5, mean0=0.01)
    a, b = threshold_report(inp), threshold_report(inp)
    assert a == b and a.to_dict() == b.to_dict()
    assert "not provided" in a.to_dict()["constants_note"]
    assert any("not provided" in line for line in a.lines())


def test_threshold_rejects_nonpositive():
    with pytest.raises(NonPositiveConstant):
        threshold_report(ThresholdInputs(epsilon=0.0, a=0.0))
    with pytest.raises(NonPositiveConstant):
        threshold_report(ThresholdInputs(epsilon=1.0, a=0.0, B2=-1.0))


# ----------------------------------------------------------- config


def test_config_roundtrip(tmp_path):
    cfg = load_run_config(write_ini(tmp_path, BASE_INI))
    assert cfg.grid == TorusGrid(32, 32)
    assert cfg.params.hyperdiffusion == pytest.approx(0.1)
    assert cfg.t_end == 20 and cfg.output_interval == 0.1
    assert cfg.outputs.name == "c"
    assert validate(tmp_path / "c.ini") == ["run"]


@pytest.mark.parametrize(
    "old,new,key",
    [
        ("epsilon = 1.0\n", "", "epsilon"),
        ("nx = 32", "nx = 31", "grid"),
        ("gamma = 0.1", "gamma = -0.1", "gamma"),
        ("gamma = 0.1", "gamma = 0.1\namplitude = 10", "gamma"),
        ("profile = none", "profile = wiggle", "profile"),
        ("kx = 1", "kx = 20", "initial_data"),
        ("kx = 1", "kx = one", "kx"),
        ("t_end = 20", "t_end = 20\ncolour = red", "colour"),
        ("[shear]", "[extras]\nx = 1\n[shear]", "extras"),
    ],
)
def test_config_errors_name_the_key(tmp_path, old, new, key):
    assert old in BASE_INI
    path = write_ini(tmp_path, BASE_INI.replace(old, new))
    with pytest.raises(ConfigError) as exc:
        validate(path)
    assert key in str(exc.value)


def test_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        validate(tmp_path / "nope.ini")


def test_config_file_profile(tmp_path):
    np.savetxt(tmp_path / "v.txt", np.cos(TorusGrid(32, 32).y))
    text = BASE_INI.replace("profile = none", "profile = file\npath = v.txt\nm = 2")
    cfg = load_run_config(write_ini(tmp_path, text))
    assert cfg.shear().m == 2
    with pytest.raises(ConfigError):
        validate(write_ini(tmp_path, text.replace("m = 2", "m = 1"), "d.ini"))


def test_with_seed_overrides_random_data(tmp_path):
    text = BASE_INI.replace("kind = single_mode", "kind = seeded_random\nseed = 5")
    cfg = load_run_config(write_ini(tmp_path, text))
    assert cfg.with_seed(9).initial.seed == 9
    assert cfg.with_seed(9).bootstrap.probe_seed == 9


# ----------------------------------------------------------- scenarios


def test_hyperdiffusion_control_scenario(fixtures_dir, tmp_path):
    cfg = load_run_config(fixtures_dir / "hyperdiffusion_control.ini")
    res = run_scenario(cfg, tmp_path)
    assert res.trajectory.status is Status.REACHED_T_END
    eg = cfg.params.hyperdiffusion
    assert res.fit.rate == pytest.approx(eg, rel=0.01)
    status = json.loads((tmp_path / "status.json").read_text())
    assert status["status"] == "ReachedTEnd" and status["blow_up"] is False
    assert status["decay_fit"]["rate"] == pytest.approx(eg, rel=0.01)
    header = (tmp_path / "diagnostics.csv").read_text().splitlines()[0]
    assert header == "t,l2,h2,mean,mean_part_l2,fluct_l2,free_energy,diss_cum,fluct_diss_cum,work_cum,dt"
    assert not list(tmp_path.glob("*.tmp"))


def test_scenario_writes_checkpoint(tmp_path):
    text = BASE_INI.replace("t_end = 20", "t_end = 1") + "\n[outputs]\ncheckpoint = end.ck\n"
    cfg = load_run_config(write_ini(tmp_path, text))
    res = run_scenario(cfg, tmp_path / "out")
    state = load_checkpoint(res.files["checkpoint"])
    assert state.t == 1.0
    assert np.allclose(state.u.values, res.trajectory.final_state.u.values)


def test_blowup_scenario_reports_status(fixtures_dir, tmp_path):
    cfg = load_run_config(fixtures_dir / "unstable_noshear.ini")
    res = run_scenario(cfg, tmp_path)
    status = json.loads((tmp_path / "status.json").read_text())
    assert status["blow_up"] is True and status["status"] == "BlowUp"
    assert status["final_l2"] > status["threshold"]
    assert res.trajectory.t_detect == status["t_detect"]


def test_bootstrap_lambda_sources(tmp_path):
    from chshear.experiments import bootstrap_lambda

    text = BASE_INI.replace("profile = none", "profile = cos")
    given = load_run_config(write_ini(tmp_path, text + "\n[bootstrap]\nlambda_gamma = 0.5\n"))
    assert bootstrap_lambda(given) == (0.5, "given")


# ----------------------------------------------------------- sweep


def sweep_base(tmp_path):
    text = BASE_INI.replace("a = 0.0", "a = -1.0").replace("profile = none", "profile = cos")
    text = text.replace("amp = 1.0", "amp = 2.0").replace("t_end = 20", "t_end = 5")
    text += "\n[sweep]\na_values = 0.0, -1.0\namplitudes = 1000, 1\n"
    path = write_ini(tmp_path, text)
    return load_run_config(path), sweep_spec(read_config(path))


def test_sweep_ordering_and_stable_cells(tmp_path):
    base, spec = sweep_base(tmp_path)
    rows = sweep(base, spec)
    assert [(r.a, r.A) for r in rows] == [(-1.0, 1.0), (-1.0, 1000.0), (0.0, 1.0), (0.0, 1000.0)]
    assert all(r.status == "ReachedTEnd" for r in rows if r.a == 0)
    assert rows[0].status == "BlowUp"
    text = sweep_csv(rows)
    assert text.splitlines()[0] == "a,A,status,final_l2,decay_rate,r2"
    assert monotonicity_violations(rows) == []


def test_single_cell_sweep_equals_scenario(tmp_path):
    base, _ = sweep_base(tmp_path)
    spec = sweep_mod.SweepSpec((-1.0,), (1000.0,))
    row = sweep(base, spec)[0]
    res = run_scenario(sweep_mod.cell_config(base, -1.0, 1000.0), write=False)
    assert row.status == res.trajectory.status.value
    assert row.final_l2 == res.trajectory.records[-1].l2
    assert row.decay_rate == res.fit.rate


def test_sweep_records_cell_failures(tmp_path, monkeypatch):
    base, spec = sweep_base(tmp_path)
    real = sweep_mod.run_scenario

    def flaky(cfg, *a, **kw):
        if cfg.params.a == 0.0 and cfg.params.amplitude == 1.0:
            raise RuntimeError("boom")
        return real(cfg, *a, **kw)

    monkeypatch.setattr(sweep_mod, "run_scenario", flaky)
    rows = sweep(base, spec)
    failed = [r for r in rows if r.status == "Error"]
    assert len(failed) == 1 and failed[0].error == "boom"
    assert len(rows) == 4


def test_monotonicity_check_flags_reversal():
    rows = [SweepRow(-1.0, 1.0, "ReachedTEnd", 1.0, 0.1, 1.0),
            SweepRow(-1.0, 10.0, "BlowUp", 1e4, math.nan, math.nan),
            SweepRow(0.0, 10.0, "ReachedTEnd", 1.0, 0.1, 1.0)]
    assert monotonicity_violations(rows) == [(-1.0, 1.0, 10.0)]


def test_empty_sweep_rejected(tmp_path):
    base, _ = sweep_base(tmp_path)
    with pytest.raises(ValueError):
        sweep(base, sweep_mod.SweepSpec((), (1.0,)))
