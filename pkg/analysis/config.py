"""
Run configuration.

A single schema table (key -> kind, default, check) drives defaults,
per-key validation and canonical emission. parse_config then exercises the
typed builders, so every precondition that can fail before a solve fails
here, with the offending key named.
"""

import hashlib
import logging
import math
from dataclasses import dataclass
from types import MappingProxyType

from analysis.cutoffs import required_count, subinterval_count
from analysis.data import GENERATORS, gaussian, make_initial_data
from analysis.dynamics import TRUNCATIONS, SolverConfig
from analysis.errors import ConfigParseError, ConfigurationError
from analysis.experiments import (
    ESCAPES,
    FORCING_SHAPES,
    ScheduleEntry,
    make_schedule,
    resolve_points,
    validate_schedule,
)
from analysis.spectral import make_grid
from analysis.textformat import format_value, parse_assignments
from analysis.witness import OptimizerConfig, make_witness_problem

logger = logging.getLogger(__name__)

EXPERIMENTS = ("solve", "approx", "mass-loc", "weak-wp", "perturb", "lp-check", "pigeonhole", "witness", "norms")


# ── Key checks ────────────────────────────────────────────────────────────────

def _positive(v):
    return None if v > 0 and math.isfinite(v) else "must be positive and finite"


def _non_negative(v):
    return None if v >= 0 and math.isfinite(v) else "must be non-negative"


def _power_of_two(v):
    return None if v >= 8 and v & (v - 1) == 0 else "must be a power of two >= 8"


def _all_positive(vs):
    return None if vs and all(v > 0 for v in vs) else "must be a non-empty array of positive numbers"


def _choices(*options):
    def check(v):
        return None if v in options else f"must be one of {list(options)}"
    return check


def _finite(v):
    return None if math.isfinite(v) else "must be finite"


# ── Schema ────────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class Option:
    kind:    str
    default: object
    check:   object = None


SCHEMA = {
    "run.experiment":            Option("str",    "solve", _choices(*EXPERIMENTS)),
    "run.seed":                  Option("int",    7, _non_negative),
    "run.out":                   Option("str",    "out"),
    "run.snapshots":             Option("bool",   True),
    "run.workers":               Option("int",    4, _positive),

    "grid.length":               Option("float",  32.0, _positive),
    "grid.points":               Option("int",    256, _power_of_two),

    "solver.sigma":              Option("int",    1, _choices(1, -1)),
    "solver.truncation":         Option("str",    "none", _choices(*TRUNCATIONS)),
    "solver.N":                  Option("float",  0.0, _non_negative),
    "solver.dt":                 Option("float",  1e-3, _positive),
    "solver.T":                  Option("float",  1.0, _positive),
    "solver.stride":             Option("int",    10, _positive),
    "solver.symmetric":          Option("bool",   False),
    "solver.coupling":           Option("float",  1.0, _finite),
    "solver.norm_cap":           Option("float",  4.0, _positive),

    "data.generator":            Option("str",    "plane_wave", _choices(*GENERATORS)),
    "data.amplitude":            Option("float",  0.5, _finite),
    "data.mode":                 Option("int",    3),
    "data.center":               Option("float",  0.0, _finite),
    "data.width":                Option("float",  1.0, _positive),
    "data.wavenumber":           Option("float",  0.0, _finite),
    "data.eta":                  Option("float",  1.0, _positive),
    "data.band":                 Option("float",  4.0, _non_negative),
    "data.norm":                 Option("float",  1.0, _non_negative),

    "schedule.N":                Option("floats", [2.0, 4.0, 8.0], _all_positive),
    "schedule.L":                Option("floats", [2048.0, 8192.0, 32768.0], _all_positive),
    "schedule.eta":              Option("floats", [0.5, 0.25, 0.125], _all_positive),
    "schedule.kappa":            Option("int",    8, _positive),
    "schedule.M_bound":          Option("float",  1.0, _positive),
    "schedule.T":                Option("float",  0.05, _positive),
    "schedule.dt":               Option("float",  0.005, _positive),
    "schedule.stride":           Option("int",    5, _positive),
    "schedule.sigma":            Option("int",    1, _choices(1, -1)),

    "pigeonhole.length":         Option("float",  320.0, _positive),
    "pigeonhole.points":         Option("int",    4096, _power_of_two),
    "pigeonhole.eta":            Option("float",  0.5, _positive),
    "pigeonhole.N":              Option("float",  1.0, _positive),
    "pigeonhole.T":              Option("float",  0.25, _positive),
    "pigeonhole.M_bound":        Option("float",  0.5, _positive),
    "pigeonhole.trials":         Option("int",    100, _positive),

    "cutoff.j":                  Option("int",    1, _choices(0, 1, 2, 3, 4)),
    "cutoff.k_max":              Option("int",    4, _choices(0, 1, 2, 3, 4)),

    "mass_loc.j":                Option("int",    1, _choices(0, 1, 2, 3, 4)),

    "weak.length":               Option("float",  64.0, _positive),
    "weak.points":               Option("int",    512, _power_of_two),
    "weak.T":                    Option("float",  0.5, _positive),
    "weak.dt":                   Option("float",  1e-3, _positive),
    "weak.stride":               Option("int",    50, _positive),
    "weak.N":                    Option("floats", [2.0, 4.0, 8.0], _all_positive),
    "weak.escape":               Option("str",    "modulation", _choices(*ESCAPES)),
    "weak.rate":                 Option("int",    8, _positive),
    "weak.shift":                Option("float",  8.0, _positive),
    "weak.amplitude":            Option("float",  1.0, _finite),
    "weak.escape_amplitude":     Option("float",  0.5, _finite),
    "weak.probe_centers":        Option("floats", [-2.0, 0.0, 2.0]),
    "weak.probe_width":          Option("float",  1.0, _positive),
    "weak.sigma":                Option("int",    1, _choices(1, -1)),
    "weak.threshold":            Option("float",  0.5, _positive),

    "perturb.length":            Option("float",  32.0, _positive),
    "perturb.points":            Option("int",    256, _power_of_two),
    "perturb.N":                 Option("float",  4.0, _positive),
    "perturb.T":                 Option("float",  1.0, _positive),
    "perturb.dt":                Option("float",  1e-3, _positive),
    "perturb.stride":            Option("int",    10, _positive),
    "perturb.eps":               Option("floats", [0.1, 0.01, 0.001]),
    "perturb.forcing":           Option("str",    "gaussian", _choices(*FORCING_SHAPES)),
    "perturb.eps0":              Option("float",  0.5, _positive),
    "perturb.amplitude":         Option("float",  1.0, _finite),
    "perturb.sigma":             Option("int",    1, _choices(1, -1)),

    "lp.N":                      Option("floats", [1.0, 2.0, 4.0], _all_positive),
    "lp.L":                      Option("floats", [24.0, 96.0, 320.0], _all_positive),
    "lp.eta":                    Option("floats", [0.5, 0.25, 0.125], _all_positive),
    "lp.T":                      Option("float",  0.125, _positive),
    "lp.M_bound":                Option("float",  0.05, _positive),
    "lp.kappa":                  Option("int",    4, _positive),
    "lp.pairs":                  Option("ints",   [0, 1, 2, 3]),
    "lp.max_modes":              Option("int",    8192, _positive),
    "lp.tol":                    Option("float",  1e-13, _positive),

    "witness.length":            Option("float",  64.0, _positive),
    "witness.N":                 Option("float",  2.0, _positive),
    "witness.T":                 Option("float",  0.5, _positive),
    "witness.dt":                Option("float",  0.01, _positive),
    "witness.R":                 Option("float",  1.0, _positive),
    "witness.r":                 Option("float",  0.5, _positive),
    "witness.delta":             Option("float",  0.05, _non_negative),
    "witness.alpha":             Option("floats", [0.0, 0.0]),
    "witness.center_amplitude":  Option("float",  0.0, _finite),
    "witness.center_width":      Option("float",  1.0, _positive),
    "witness.l_center":          Option("float",  0.0, _finite),
    "witness.l_width":           Option("float",  1.0, _positive),
    "witness.starts":            Option("int",    8, _positive),
    "witness.iterations":        Option("int",    20, _positive),
    "witness.step":              Option("float",  0.0, _non_negative),
    "witness.fd_eps":            Option("float",  1e-6, _positive),
    "witness.max_params":        Option("int",    256, _positive),
    "witness.sigma":             Option("int",    1, _choices(1, -1)),
    "witness.coupling":          Option("float",  1.0, _finite),

    "norms.R":                   Option("float",  4.0, _positive),
    "norms.length":              Option("float",  32.0, _positive),
    "norms.points":              Option("int",    64, _power_of_two),
    "norms.N":                   Option("float",  1.0, _positive),
    "norms.M_bound":             Option("float",  1.0, _positive),
    "norms.T":                   Option("float",  0.25, _positive),
    "norms.dt":                  Option("float",  6.103515625e-05, _positive),
    "norms.taus":                Option("floats", [0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625, 0.001953125, 0.0009765625], _all_positive),
    "norms.ys":                  Option("floats", [0.0625, 0.03125, 0.015625, 0.0078125, 0.00390625, 0.001953125, 0.0009765625], _all_positive),
    "norms.ensemble":            Option("int",    16),
    "norms.sigma":               Option("int",    1, _choices(1, -1)),

    "tolerance.mass_drift_exact":     Option("float", 1e-12, _positive),
    "tolerance.mass_drift_projected": Option("float", 1e-8, _positive),
    "tolerance.energy_drift":         Option("float", 1e-6, _positive),
    "tolerance.duhamel":              Option("float", 1e-6, _positive),
    "tolerance.reference":            Option("float", 1e-5, _positive),
}

DATA_PARAMETERS = {
    "zero":                (),
    "constant":            ("amplitude",),
    "plane_wave":          ("amplitude", "mode"),
    "soliton":             ("eta", "center"),
    "gaussian":            ("amplitude", "center", "width", "wavenumber"),
    "random_band_limited": ("band", "norm"),
}


def _coerce(key, kind, value, line):
    def fail(expected):
        raise ConfigParseError(f"expected {expected}, got {format_value(value)}", key=key, line=line)

    if kind == "bool":
        return value if isinstance(value, bool) else fail("a boolean")
    if kind == "str":
        return value if isinstance(value, str) else fail("a string")
    if kind == "int":
        return value if isinstance(value, int) and not isinstance(value, bool) else fail("an integer")
    if kind == "float":
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        fail("a number")
    if kind == "floats":
        return [float(v) for v in value] if isinstance(value, list) else fail("an array of numbers")
    if kind == "ints":
        if isinstance(value, list) and all(isinstance(v, int) for v in value):
            return list(value)
        fail("an array of integers")
    raise ConfigParseError(f"unknown kind {kind}", key=key, line=line)


# ── RunConfig ─────────────────────────────────────────────────────────────────

@dataclass(frozen=True)
class RunConfig:
    values:   MappingProxyType
    explicit: frozenset

    def __getitem__(self, key):
        return self.values[key]

    @property
    def experiment(self):
        return self.values["run.experiment"]

    @property
    def seed(self):
        return self.values["run.seed"]

    def with_values(self, overrides):
        """Copy with {key: value} overrides, each checked against the schema."""
        values = dict(self.values)
        for key, value in overrides.items():
            if key not in SCHEMA:
                raise ConfigParseError("unknown key", key=key)
            opt   = SCHEMA[key]
            value = _coerce(key, opt.kind, value, None)
            if opt.check is not None:
                problem = opt.check(value)
                if problem:
                    raise ConfigParseError(f"{key} {problem}", key=key)
            values[key] = value
        return validate(RunConfig(MappingProxyType(values), self.explicit | set(overrides)))

    # ── builders

    def grid(self):
        return make_grid(self["grid.length"], self["grid.points"])

    def solver(self):
        truncation = self["solver.truncation"]
        return SolverConfig(
            sigma=self["solver.sigma"],
            truncation=truncation,
            N=None if truncation == "none" else self["solver.N"],
            dt=self["solver.dt"],
            T=self["solver.T"],
            stride=self["solver.stride"],
            coupling=self["solver.coupling"],
            symmetric=self["solver.symmetric"],
            norm_cap=self["solver.norm_cap"],
        )

    def data_spec(self):
        name = self["data.generator"]
        spec = {"generator": name}
        for param in DATA_PARAMETERS[name]:
            spec[param] = self[f"data.{param}"]
        if name == "random_band_limited":
            spec["seed"] = self.seed
        return spec

    def initial_data(self):
        return make_initial_data(self.grid(), self.data_spec())

    def schedule(self):
        entries = make_schedule(self["schedule.N"], self["schedule.L"], self["schedule.eta"], self["schedule.kappa"])
        return validate_schedule(entries, self["schedule.M_bound"], self["schedule.T"])

    def schedule_solver(self):
        return SolverConfig(
            sigma=self["schedule.sigma"], truncation="line", N=self["schedule.N"][0],
            dt=self["schedule.dt"], T=self["schedule.T"], stride=self["schedule.stride"],
        )

    def lp_schedule(self):
        entries = make_schedule(self["lp.N"], self["lp.L"], self["lp.eta"], self["lp.kappa"])
        return validate_schedule(entries, self["lp.M_bound"], self["lp.T"])

    def lp_pairs(self):
        flat = self["lp.pairs"]
        if len(flat) % 2 or not flat:
            raise ConfigurationError("lp.pairs must list (j, i) pairs as an even-length array")
        pairs = list(zip(flat[::2], flat[1::2]))
        for j, i in pairs:
            if not 0 <= j < i <= 4:
                raise ConfigurationError(f"lp.pairs entry ({j}, {i}) must satisfy 0 <= j < i <= 4")
        return pairs

    def weak_grid(self):
        return make_grid(self["weak.length"], self["weak.points"])

    def weak_schedule(self):
        Ns = self["weak.N"]
        return [ScheduleEntry(i + 1, N, self["weak.length"], 2.0 ** -(i + 1)) for i, N in enumerate(Ns)]

    def weak_solver(self):
        return SolverConfig(sigma=self["weak.sigma"], dt=self["weak.dt"], T=self["weak.T"], stride=self["weak.stride"])

    def probes(self):
        grid = self.weak_grid()
        return [gaussian(grid, 1.0, c, self["weak.probe_width"]) for c in self["weak.probe_centers"]]

    def perturb_grid(self):
        return make_grid(self["perturb.length"], self["perturb.points"])

    def perturb_solver(self):
        return SolverConfig(
            sigma=self["perturb.sigma"], truncation="line", N=self["perturb.N"],
            dt=self["perturb.dt"], T=self["perturb.T"], stride=self["perturb.stride"],
        )

    def pigeonhole_grid(self):
        return make_grid(self["pigeonhole.length"], self["pigeonhole.points"])

    def witness_grid(self):
        L = self["witness.length"]
        return make_grid(L, resolve_points(L, self["witness.N"]))

    def witness_problem(self):
        R, r, delta = self["witness.R"], self["witness.r"], self["witness.delta"]
        if not r < R:
            raise ConfigParseError(f"witness.r ({r}) must be smaller than witness.R ({R})", key="witness.r")
        if not delta < (R - r) / 8:
            raise ConfigParseError(
                f"witness.delta must satisfy delta < (R - r)/8 = {(R - r) / 8:g}, got {delta}",
                key="witness.delta",
            )
        alpha = self["witness.alpha"]
        if len(alpha) != 2:
            raise ConfigParseError("witness.alpha must be [re, im]", key="witness.alpha")
        grid   = self.witness_grid()
        z_star = gaussian(grid, self["witness.center_amplitude"], 0.0, self["witness.center_width"])
        l      = gaussian(grid, 1.0, self["witness.l_center"], self["witness.l_width"])
        return make_witness_problem(
            z_star, l, complex(alpha[0], alpha[1]), r, R, delta,
            self["witness.N"], self["witness.T"], dt=self["witness.dt"],
            sigma=self["witness.sigma"], coupling=self["witness.coupling"],
            max_params=self["witness.max_params"],
        )

    def optimizer(self):
        return OptimizerConfig(
            starts=self["witness.starts"], iterations=self["witness.iterations"],
            step=self["witness.step"], fd_eps=self["witness.fd_eps"], seed=self.seed,
            workers=self["run.workers"],
        )

    def norms_grid(self):
        return make_grid(self["norms.length"], self["norms.points"])

    def norms_shifts(self):
        """(taus, ys); the snapshot spacing must resolve every time shift."""
        taus, ys, T, dt = self["norms.taus"], self["norms.ys"], self["norms.T"], self["norms.dt"]
        for key, shifts in (("norms.taus", taus), ("norms.ys", ys)):
            if len(shifts) < 2:
                raise ConfigParseError("at least two shifts are needed for a slope", key=key)
        if max(taus) > T:
            raise ConfigParseError(f"largest time shift {max(taus)} exceeds norms.T = {T}", key="norms.taus")
        if dt > min(taus) / 10 * (1 + 1e-9):
            raise ConfigParseError(f"norms.dt = {dt} exceeds min(norms.taus)/10 = {min(taus) / 10}", key="norms.dt")
        return taus, ys


# ── Parse / emit ──────────────────────────────────────────────────────────────

def _pigeonhole_guard(cfg):
    K    = subinterval_count(cfg["pigeonhole.length"], cfg["pigeonhole.eta"], cfg["pigeonhole.N"], cfg["pigeonhole.T"])
    need = required_count(cfg["pigeonhole.M_bound"], cfg["pigeonhole.eta"])
    if K < need:
        raise ConfigurationError(f"torus too small: {K} pigeonhole subintervals, need {need:g}")


# builder -> key blamed when it fails
_CROSS_CHECKS = (
    (RunConfig.grid,              "grid.points"),
    (RunConfig.solver,            "solver.dt"),
    (RunConfig.initial_data,      "data.generator"),
    (RunConfig.schedule,          "schedule.L"),
    (RunConfig.schedule_solver,   "schedule.dt"),
    (RunConfig.lp_schedule,       "lp.L"),
    (RunConfig.lp_pairs,          "lp.pairs"),
    (RunConfig.weak_solver,       "weak.dt"),
    (RunConfig.probes,            "weak.probe_centers"),
    (RunConfig.perturb_solver,    "perturb.dt"),
    (_pigeonhole_guard,           "pigeonhole.length"),
    (RunConfig.witness_problem,   "witness.delta"),
    (RunConfig.norms_grid,        "norms.points"),
    (RunConfig.norms_shifts,      "norms.dt"),
)


def validate(cfg):
    for check, key in _CROSS_CHECKS:
        try:
            check(cfg)
        except ConfigParseError:
            raise
        except ConfigurationError as exc:
            raise ConfigParseError(str(exc), key=key) from None
    return cfg


def parse_config(text):
    values   = {key: opt.default for key, opt in SCHEMA.items()}
    explicit = set()
    for line, key, raw in parse_assignments(text):
        if key not in SCHEMA:
            raise ConfigParseError("unknown key", key=key, line=line)
        opt   = SCHEMA[key]
        value = _coerce(key, opt.kind, raw, line)
        if opt.check is not None:
            problem = opt.check(value)
            if problem:
                raise ConfigParseError(f"{key} {problem}", key=key, line=line)
        values[key] = value
        explicit.add(key)
    cfg = RunConfig(MappingProxyType(values), frozenset(explicit))
    logger.debug("parsed config with %d explicit keys", len(explicit))
    return validate(cfg)


def emit_config(cfg):
    """Canonical text: every schema key in schema order."""
    return "".join(f"{key} = {format_value(cfg[key])}\n" for key in SCHEMA)


def config_hash(cfg):
    return hashlib.sha256(emit_config(cfg).encode("utf-8")).hexdigest()


def load_config(path):
    with open(path, encoding="utf-8") as handle:
        return parse_config(handle.read())
