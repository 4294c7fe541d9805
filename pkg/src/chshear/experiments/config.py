"""INI run configuration.

Sections: ``[grid]``, ``[params]``, ``[shear]``, ``[initial_data]``,
``[controller]``, ``[outputs]``, plus optional ``[bootstrap]``, ``[sweep]``,
``[semigroup]`` and ``[mixing]`` for the other commands. A complete example::

    [grid]
    nx = 64
    ny = 64

    [params]
    epsilon = 1.0
    amplitude = 1000     ; or gamma = 1e-3
    a = -1.0
    b = 0.0
    c = 0.0
    form = rescaled      ; rescaled | original

    [shear]
    profile = cos        ; cos | sin3 | const | none | file (needs path, m)

    [initial_data]
    kind = single_mode   ; single_mode (kx, ky, amp) | seeded_random (seed, band_min, band_max, amp, mean_frac)
    kx = 1
    ky = 0
    amp = 2.0

    [controller]
    t_end = 100
    output_interval = 0.5

    [outputs]
    tail_fit = true
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Optional, Tuple

from ..errors import ConfigError
from ..integrators import StepController
from ..operators import Form, PhysicalParams, ShearProfile, load_shear_profile, shear_profile
from ..spectral import TorusGrid
from .initial import InitialData, SeededRandom, SingleMode

RUN_SECTIONS = ("grid", "params", "shear", "initial_data", "controller")
PROFILES = ("cos", "sin3", "const", "none", "file")

_KNOWN_KEYS = {
    "grid": {"nx", "ny"},
    "params": {"epsilon", "gamma", "amplitude", "a", "b", "c", "form"},
    "shear": {"profile", "path", "m"},
    "initial_data": {"kind", "kx", "ky", "amp", "seed", "band_min", "band_max", "mean_frac"},
    "controller": {
        "t_end", "dt_init", "dt_min", "dt_max", "cfl_safety", "growth_limit", "dt_increase",
        "accepts_before_increase", "blowup_factor", "blowup_threshold", "max_steps",
        "output_interval",
    },
    "outputs": {"name", "diagnostics", "status", "tail_fit", "fit_window", "checkpoint", "accumulate"},
    "bootstrap": {"enabled", "lambda_gamma", "checkpoint_interval", "probe_seed", "prefactor"},
    "sweep": {"a_values", "amplitudes"},
    "semigroup": {"gammas", "probe_seed", "band_max", "control"},
    "mixing": {"t_min", "t_max", "n_times", "probe_seed", "band_max", "amplitude"},
    "thresholds": {"epsilon", "a", "b", "fluct0", "mean0", "b1", "b2", "b3", "l", "l_prime", "lambda1"},
}


class _Section:
    """Typed accessors that raise ConfigError naming the section and key."""

    def __init__(self, cp, name):
        self.name = name
        if not cp.has_section(name):
            raise ConfigError("missing section", name)
        self.s = cp[name]

    def _raw(self, key, required):
        if key not in self.s or self.s[key].strip() == "":
            if required:
                raise ConfigError("missing required key", self.name, key)
            return None
        return self.s[key].strip()

    def float(self, key, default=None, required=False, positive=False):
        raw = self._raw(key, required and default is None)
        if raw is None:
            return default
        try:
            val = float(raw)
        except ValueError:
            raise ConfigError(f"expected a number, got {raw!r}", self.name, key) from None
        if not math.isfinite(val):
            raise ConfigError(f"expected a finite number, got {raw!r}", self.name, key)
        if positive and val <= 0:
            raise ConfigError(f"must be positive, got {raw}", self.name, key)
        return val

    def int(self, key, default=None, required=False):
        raw = self._raw(key, required and default is None)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"expected an integer, got {raw!r}", self.name, key) from None

    def str(self, key, default=None, required=False, choices=None):
        raw = self._raw(key, required and default is None)
        if raw is None:
            return default
        if choices is not None and raw not in choices:
            raise ConfigError(f"{raw!r} is not one of {list(choices)}", self.name, key)
        return raw

    def bool(self, key, default=False):
        raw = self._raw(key, False)
        if raw is None:
            return default
        try:
            return self.s.getboolean(key)
        except ValueError:
            raise ConfigError(f"expected a boolean, got {raw!r}", self.name, key) from None

    def floats(self, key, required=True):
        raw = self._raw(key, required)
        if raw is None:
            return None
        try:
            vals = [float(x) for x in raw.replace(";", ",").split(",") if x.strip()]
        except ValueError:
            raise ConfigError(f"expected a comma-separated list of numbers, got {raw!r}", self.name, key) from None
        if not vals:
            raise ConfigError("empty list", self.name, key)
        return vals


@dataclass(frozen=True)
class OutputSpec:
    name: str = "run"
    diagnostics: str = "diagnostics.csv"
    status: str = "status.json"
    tail_fit: bool = False
    fit_window: float = 0.5
    checkpoint: Optional[str] = None
    accumulate: bool = True


@dataclass(frozen=True)
class BootstrapSpec:
    enabled: bool = False
    lambda_gamma: Optional[float] = None  # None: measure it
    checkpoint_interval: Optional[float] = None
    probe_seed: int = 0
    prefactor: Optional[float] = None  # fallback C in C·γ^(2/(2+m))


@dataclass(frozen=True)
class RunConfig:
    grid: TorusGrid
    params: PhysicalParams
    shear_name: str
    shear_path: Optional[str]
    shear_m: Optional[int]
    initial: InitialData
    controller: StepController
    t_end: float
    output_interval: Optional[float]
    outputs: OutputSpec = field(default_factory=OutputSpec)
    bootstrap: BootstrapSpec = field(default_factory=BootstrapSpec)
    source: Optional[str] = None

    def shear(self) -> ShearProfile:
        if self.shear_name == "file":
            return load_shear_profile(self.shear_path, self.grid, self.shear_m)
        return shear_profile(self.shear_name, self.grid)

    def with_seed(self, seed: int) -> "RunConfig":
        if isinstance(self.initial, SeededRandom):
            return replace(self, initial=replace(self.initial, seed=seed),
                           bootstrap=replace(self.bootstrap, probe_seed=seed))
        return replace(self, bootstrap=replace(self.bootstrap, probe_seed=seed))


def read_config(path) -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        cp.read(path)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse {path}: {exc}") from None
    for sec in cp.sections():
        known = _KNOWN_KEYS.get(sec)
        if known is None:
            raise ConfigError("unknown section", sec)
        for key in cp[sec]:
            if key not in known:
                raise ConfigError("unknown key", sec, key)
    return cp


def parse_grid(cp) -> TorusGrid:
    s = _Section(cp, "grid")
    nx, ny = s.int("nx", required=True), s.int("ny", required=True)
    try:
        return TorusGrid(nx, ny)
    except ValueError as exc:
        raise ConfigError(str(exc), "grid") from None


def parse_params(cp, require_a=True) -> PhysicalParams:
    s = _Section(cp, "params")
    eps = s.float("epsilon", required=True, positive=True)
    gamma = s.float("gamma", positive=True)
    amp = s.float("amplitude", positive=True)
    if gamma is not None and amp is not None:
        raise ConfigError("give either gamma or amplitude, not both", "params", "gamma")
    if gamma is None:
        gamma = 1.0 / amp if amp is not None else 1.0
    a = s.float("a", required=require_a, default=None if require_a else 0.0)
    b = s.float("b", 0.0)
    c = s.float("c", 0.0)
    form = s.str("form", "rescaled", choices=[f.value for f in Form])
    return PhysicalParams(eps, gamma, a, b, c, Form(form))


def parse_shear(cp, base: Optional[Path] = None):
    s = _Section(cp, "shear")
    name = s.str("profile", required=True, choices=PROFILES)
    path = m = None
    if name == "file":
        path = s.str("path", required=True)
        m = s.int("m", required=True)
        if m < 2:
            raise ConfigError("critical-point order must be >= 2", "shear", "m")
        if base is not None and not Path(path).is_absolute():
            path = str(base / path)
        if not Path(path).is_file():
            raise ConfigError(f"profile file not found: {path}", "shear", "path")
    return name, path, m


def parse_initial(cp) -> InitialData:
    s = _Section(cp, "initial_data")
    kind = s.str("kind", required=True, choices=("single_mode", "seeded_random"))
    amp = s.float("amp", 1.0, positive=True)
    if kind == "single_mode":
        return SingleMode((s.int("kx", 1), s.int("ky", 0)), amp)
    seed = s.int("seed", required=True)
    if not 0 <= seed < 2**64:
        raise ConfigError("seed must be a 64-bit unsigned integer", "initial_data", "seed")
    band = (s.int("band_min", 1), s.int("band_max", 8))
    return SeededRandom(seed, band, amp, s.float("mean_frac", 0.0))


def parse_controller(cp) -> Tuple[StepController, float, Optional[float]]:
    s = _Section(cp, "controller")
    t_end = s.float("t_end", required=True, positive=True)
    kw = {}
    for key in ("dt_init", "dt_min", "dt_max", "cfl_safety", "growth_limit", "dt_increase",
                "blowup_factor", "blowup_threshold"):
        val = s.float(key, positive=True)
        if val is not None:
            kw[key] = val
    for key in ("accepts_before_increase", "max_steps"):
        val = s.int(key)
        if val is not None:
            kw[key] = val
    try:
        ctrl = StepController(**kw)
    except ValueError as exc:
        raise ConfigError(str(exc), "controller") from None
    out = s.float("output_interval", positive=True)
    return ctrl, t_end, out


def parse_outputs(cp, default_name="run") -> OutputSpec:
    if not cp.has_section("outputs"):
        return OutputSpec(name=default_name)
    s = _Section(cp, "outputs")
    fw = s.float("fit_window", 0.5)
    if not 0 <= fw < 1:
        raise ConfigError("fit_window must lie in [0, 1)", "outputs", "fit_window")
    return OutputSpec(
        name=s.str("name", default_name),
        diagnostics=s.str("diagnostics", "diagnostics.csv"),
        status=s.str("status", "status.json"),
        tail_fit=s.bool("tail_fit", False),
        fit_window=fw,
        checkpoint=s.str("checkpoint"),
        accumulate=s.bool("accumulate", True),
    )


def parse_bootstrap(cp) -> BootstrapSpec:
    if not cp.has_section("bootstrap"):
        return BootstrapSpec()
    s = _Section(cp, "bootstrap")
    raw_lam = s.str("lambda_gamma", "measured")
    lam = None
    if raw_lam != "measured":
        lam = s.float("lambda_gamma", positive=True)
    return BootstrapSpec(
        enabled=s.bool("enabled", True),
        lambda_gamma=lam,
        checkpoint_interval=s.float("checkpoint_interval", positive=True),
        probe_seed=s.int("probe_seed", 0),
        prefactor=s.float("prefactor", positive=True),
    )


def run_config(cp, source=None) -> RunConfig:
    base = Path(source).parent if source else None
    grid = parse_grid(cp)
    params = parse_params(cp)
    name, path, m = parse_shear(cp, base)
    initial = parse_initial(cp)
    ctrl, t_end, out = parse_controller(cp)
    default_name = Path(source).stem if source else "run"
    cfg = RunConfig(grid, params, name, path, m, initial, ctrl, t_end, out,
                    parse_outputs(cp, default_name), parse_bootstrap(cp), source)
    # surface band / profile problems at validation time
    from .initial import make_initial_data

    try:
        make_initial_data(cfg.initial, grid)
    except ValueError as exc:
        raise ConfigError(str(exc), "initial_data") from None
    try:
        cfg.shear()
    except ValueError as exc:
        raise ConfigError(str(exc), "shear") from None
    return cfg


def load_run_config(path) -> RunConfig:
    return run_config(read_config(path), str(path))


@dataclass(frozen=True)
class SweepSpec:
    a_values: tuple
    amplitudes: tuple


def sweep_spec(cp) -> SweepSpec:
    s = _Section(cp, "sweep")
    a_vals = tuple(s.floats("a_values"))
    amps = tuple(s.floats("amplitudes"))
    if any(A <= 0 for A in amps):
        raise ConfigError("amplitudes must be positive", "sweep", "amplitudes")
    return SweepSpec(a_vals, amps)


@dataclass(frozen=True)
class SemigroupSpec:
    grid: TorusGrid
    params: PhysicalParams
    shear_name: str
    shear_path: Optional[str]
    shear_m: Optional[int]
    gammas: tuple
    probe_seed: int
    band_max: int
    control: bool


def semigroup_spec(cp, source=None) -> SemigroupSpec:
    base = Path(source).parent if source else None
    grid = parse_grid(cp)
    params = parse_params(cp, require_a=False)
    name, path, m = parse_shear(cp, base)
    s = _Section(cp, "semigroup")
    gammas = tuple(s.floats("gammas"))
    if len(gammas) < 5:
        raise ConfigError("need at least 5 gammas", "semigroup", "gammas")
    if any(g <= 0 for g in gammas) or any(b >= a for a, b in zip(gammas, gammas[1:])):
        raise ConfigError("gammas must be positive and strictly decreasing", "semigroup", "gammas")
    band_max = s.int("band_max", 8)
    if not 1 <= band_max <= min(grid.nx, grid.ny) / 3:
        raise ConfigError("band_max outside the dealiased range", "semigroup", "band_max")
    return SemigroupSpec(grid, params, name, path, m, gammas, s.int("probe_seed", 0), band_max,
                         s.bool("control", True))


@dataclass(frozen=True)
class MixingSpec:
    grid: TorusGrid
    shear_name: str
    shear_path: Optional[str]
    shear_m: Optional[int]
    t_min: float
    t_max: float
    n_times: int
    probe_seed: int
    band_max: int
    amplitude: float


def mixing_spec(cp, source=None) -> MixingSpec:
    base = Path(source).parent if source else None
    grid = parse_grid(cp)
    name, path, m = parse_shear(cp, base)
    s = _Section(cp, "mixing")
    t_min = s.float("t_min", 1.0)
    t_max = s.float("t_max", 100.0)
    if not 0 <= t_min < t_max:
        raise ConfigError("need 0 <= t_min < t_max", "mixing", "t_max")
    n = s.int("n_times", 60)
    if n < 3:
        raise ConfigError("need at least 3 sample times", "mixing", "n_times")
    band_max = s.int("band_max", 8)
    if not 1 <= band_max <= min(grid.nx, grid.ny) / 3:
        raise ConfigError("band_max outside the dealiased range", "mixing", "band_max")
    return MixingSpec(grid, name, path, m, t_min, t_max, n, s.int("probe_seed", 0), band_max,
                      s.float("amplitude", 1.0, positive=True))


def thresholds_inputs(cp):
    from .thresholds import ThresholdInputs

    s = _Section(cp, "thresholds")
    kw = {"epsilon": s.float("epsilon", required=True)}
    names = {"a": "a", "b": "b", "fluct0": "fluct0", "mean0": "mean0", "b1": "B1", "b2": "B2",
             "b3": "B3", "l": "L", "l_prime": "L_prime", "lambda1": "lambda1"}
    for key, attr in names.items():
        val = s.float(key)
        if val is not None:
            kw[attr] = val
    return ThresholdInputs(**kw)


def validate(path):
    """Parse every section present; returns the list of command kinds the file supports."""
    cp = read_config(path)
    kinds = []
    if cp.has_section("controller") or cp.has_section("initial_data"):
        run_config(cp, str(path))
        kinds.append("run")
    if cp.has_section("sweep"):
        run_config(cp, str(path))
        sweep_spec(cp)
        kinds.append("sweep")
    if cp.has_section("semigroup"):
        semigroup_spec(cp, str(path))
        kinds.append("semigroup")
    if cp.has_section("mixing"):
        mixing_spec(cp, str(path))
        kinds.append("mixing")
    if cp.has_section("thresholds"):
        thresholds_inputs(cp)
        kinds.append("thresholds")
    if not kinds:
        raise ConfigError("config defines no runnable command")
    return kinds
