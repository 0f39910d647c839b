"""Experiment configuration: an INI file with one section per concern.

Physical parameters have no defaults. Every key is validated on load and
unknown sections or keys are rejected, so a typo cannot silently fall back
to some other value.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, field, fields, replace
from typing import Optional

from .spatial import FluxParams
from .stepper import SolverConfig
from .thermo import MixtureParams, PhaseEOS

KINDS = ("convergence-space", "convergence-time", "energy", "single-run")
INITIAL = ("manufactured", "two-interface", "constant")

# (alpha_b, alpha1) by polynomial degree, used when alpha_b = table
STAB_TABLE = {0: (1e-3, 0.0), 1: (1.7e-3, 6e-3), 2: (7e-3, 1e-3), 3: (2e-2, 1e-1)}


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class EOSBlock:
    alpha_liquid: float
    beta_liquid: float
    gamma_liquid: float
    alpha_vapor: float
    beta_vapor: float
    gamma_vapor: float


@dataclass(frozen=True)
class PhysicsBlock:
    a: float
    gamma: float
    eta: tuple
    nu_liquid: float
    nu_vapor: float


@dataclass(frozen=True)
class FluxBlock:
    alpha_b: Optional[float]      # None means: look up STAB_TABLE by degree
    alpha1: float = 0.0
    alpha2: float = 0.0
    alpha3: float = 0.0


@dataclass(frozen=True)
class InitialBlock:
    kind: str
    rho_liquid: Optional[float] = None
    rho_vapor: Optional[float] = None
    rho: Optional[float] = None
    phi: Optional[float] = None


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    degree: int
    cells: tuple
    dt: Optional[tuple]           # None means dt_rule
    t_end: float
    eos: EOSBlock
    physics: PhysicsBlock
    flux: FluxBlock
    initial: InitialBlock
    solver: SolverConfig = field(default_factory=SolverConfig)
    output: Optional[str] = None
    dump_every: int = 0

    # derived objects ------------------------------------------------------
    def mixture(self, eta: Optional[float] = None) -> MixtureParams:
        e = self.eos
        ph = self.physics
        return MixtureParams(
            liquid=PhaseEOS(e.alpha_liquid, e.beta_liquid, e.gamma_liquid),
            vapor=PhaseEOS(e.alpha_vapor, e.beta_vapor, e.gamma_vapor),
            a=ph.a, gamma=ph.gamma, eta=ph.eta[0] if eta is None else eta,
            nu_liquid=ph.nu_liquid, nu_vapor=ph.nu_vapor)

    def flux_params(self) -> FluxParams:
        f = self.flux
        if f.alpha_b is None:
            ab, a1 = STAB_TABLE[self.degree]
            return FluxParams(ab, a1, f.alpha2, f.alpha3)
        return FluxParams(f.alpha_b, f.alpha1, f.alpha2, f.alpha3)

    def with_output(self, path: Optional[str]) -> "ExperimentConfig":
        return replace(self, output=path)


# --------------------------------------------------------------- parsing

_SCHEMA = {
    "experiment": {"kind", "degree", "cells", "dt", "t_end", "output", "dump_every"},
    "eos": {f.name for f in fields(EOSBlock)},
    "physics": {f.name for f in fields(PhysicsBlock)},
    "flux": {f.name for f in fields(FluxBlock)},
    "initial": {f.name for f in fields(InitialBlock)},
    "solver": {"newton_abs_tol", "newton_max_iter", "linear_abs_tol", "max_step_halvings",
               "linear_solver"},
}
_REQUIRED_SECTIONS = ("experiment", "eos", "physics", "flux", "initial")


def _float(sec, key, positive=False, nonneg=False) -> float:
    raw = sec.get(key)
    if raw is None:
        raise ConfigError(f"[{sec.name}] missing key {key!r}")
    try:
        val = float(raw)
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} = {raw!r} is not a number") from None
    if not math.isfinite(val):
        raise ConfigError(f"[{sec.name}] {key} must be finite")
    if positive and not val > 0:
        raise ConfigError(f"[{sec.name}] {key} must be positive")
    if nonneg and val < 0:
        raise ConfigError(f"[{sec.name}] {key} must be nonnegative")
    return val


def _opt_float(sec, key, **kw) -> Optional[float]:
    return _float(sec, key, **kw) if key in sec else None


def _float_list(sec, key, positive=True) -> tuple:
    raw = sec.get(key)
    if raw is None:
        raise ConfigError(f"[{sec.name}] missing key {key!r}")
    try:
        vals = tuple(float(s) for s in raw.replace(",", " ").split())
    except ValueError:
        raise ConfigError(f"[{sec.name}] {key} = {raw!r} is not a list of numbers") from None
    if not vals:
        raise ConfigError(f"[{sec.name}] {key} is empty")
    if positive and any(not (v > 0 and math.isfinite(v)) for v in vals):
        raise ConfigError(f"[{sec.name}] {key} entries must be positive")
    if len(set(vals)) != len(vals):
        raise ConfigError(f"[{sec.name}] {key} contains duplicates")
    return vals


def _int(sec, key, minimum=None) -> int:
    raw = sec.get(key)
    try:
        val = int(raw)
    except (TypeError, ValueError):
        raise ConfigError(f"[{sec.name}] {key} = {raw!r} is not an integer") from None
    if minimum is not None and val < minimum:
        raise ConfigError(f"[{sec.name}] {key} must be >= {minimum}")
    return val


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed config: {exc}") from None

    for name in cp.sections():
        if name not in _SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        unknown = set(cp[name]) - _SCHEMA[name]
        if unknown:
            raise ConfigError(f"[{name}] unknown keys: {', '.join(sorted(unknown))}")
    for name in _REQUIRED_SECTIONS:
        if name not in cp:
            raise ConfigError(f"missing section [{name}]")

    ex = cp["experiment"]
    kind = ex.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"[experiment] kind must be one of {KINDS}, got {kind!r}")
    degree = _int(ex, "degree", minimum=0)
    cells_f = _float_list(ex, "cells")
    if any(c != int(c) for c in cells_f):
        raise ConfigError("[experiment] cells must be integers")
    cells = tuple(int(c) for c in cells_f)
    dt_raw = ex.get("dt", "").strip()
    if dt_raw == "":
        raise ConfigError("[experiment] missing key 'dt' (a value, a list, or 'auto')")
    dt = None if dt_raw == "auto" else _float_list(ex, "dt")
    t_end = _float(ex, "t_end", positive=True)
    output = ex.get("output") or None
    dump_every = _int(ex, "dump_every", minimum=0) if "dump_every" in ex else 0

    e = cp["eos"]
    eos = EOSBlock(*(_float(e, f.name) for f in fields(EOSBlock)))
    ph = cp["physics"]
    physics = PhysicsBlock(
        a=_float(ph, "a", positive=True), gamma=_float(ph, "gamma", positive=True),
        eta=_float_list(ph, "eta"), nu_liquid=_float(ph, "nu_liquid", positive=True),
        nu_vapor=_float(ph, "nu_vapor", positive=True))

    fl = cp["flux"]
    if fl.get("alpha_b", "").strip() == "table":
        if degree not in STAB_TABLE:
            raise ConfigError(f"no tabulated stabilization for degree {degree}")
        if "alpha1" in fl:
            raise ConfigError("[flux] alpha1 is taken from the table when alpha_b = table")
        alpha_b, alpha1 = None, 0.0
    else:
        alpha_b = _float(fl, "alpha_b", positive=True)
        alpha1 = _float(fl, "alpha1", nonneg=True) if "alpha1" in fl else 0.0
    flux = FluxBlock(alpha_b, alpha1,
                     _float(fl, "alpha2", nonneg=True) if "alpha2" in fl else 0.0,
                     _float(fl, "alpha3", nonneg=True) if "alpha3" in fl else 0.0)

    ini = cp["initial"]
    ik = ini.get("kind")
    if ik not in INITIAL:
        raise ConfigError(f"[initial] kind must be one of {INITIAL}, got {ik!r}")
    initial = InitialBlock(ik, _opt_float(ini, "rho_liquid", positive=True),
                           _opt_float(ini, "rho_vapor", positive=True),
                           _opt_float(ini, "rho", positive=True), _opt_float(ini, "phi"))
    if ik == "two-interface" and (initial.rho_liquid is None or initial.rho_vapor is None):
        raise ConfigError("[initial] two-interface needs rho_liquid and rho_vapor")
    if ik == "constant":
        if initial.rho is None or initial.phi is None:
            raise ConfigError("[initial] constant needs rho and phi")
        if not 0.0 <= initial.phi <= 1.0:
            raise ConfigError("[initial] phi must lie in [0, 1]")

    solver = SolverConfig()
    if "solver" in cp:
        s = cp["solver"]
        kw = {}
        for key in ("newton_abs_tol", "linear_abs_tol"):
            if key in s:
                kw[key] = _float(s, key, positive=True)
        for key in ("newton_max_iter", "max_step_halvings"):
            if key in s:
                kw[key] = _int(s, key, minimum=0 if key == "max_step_halvings" else 1)
        if "linear_solver" in s:
            kw["linear_solver"] = s["linear_solver"]
        try:
            solver = SolverConfig(**kw)
        except ValueError as exc:
            raise ConfigError(f"[solver] {exc}") from None

    cfg = ExperimentConfig(kind, degree, cells, dt, t_end, eos, physics, flux, initial,
                           solver, output, dump_every)
    _validate(cfg)
    return cfg


def _validate(cfg: ExperimentConfig) -> None:
    if cfg.kind == "convergence-space" and len(cfg.cells) < 2:
        raise ConfigError("spatial convergence needs at least two cell counts")
    if cfg.kind == "convergence-space" and cfg.dt is not None and len(cfg.dt) != 1:
        raise ConfigError("spatial convergence takes dt = auto or a single dt")
    if cfg.kind == "convergence-time":
        if len(cfg.cells) != 1:
            raise ConfigError("temporal convergence uses a single cell count")
        if cfg.dt is None or len(cfg.dt) < 2:
            raise ConfigError("temporal convergence needs at least two dt values")
    if cfg.kind in ("energy", "single-run"):
        if len(cfg.cells) != 1:
            raise ConfigError(f"{cfg.kind} uses a single cell count")
        if cfg.dt is None or len(cfg.dt) != 1:
            raise ConfigError(f"{cfg.kind} needs exactly one dt")
    if cfg.kind != "energy" and len(cfg.physics.eta) != 1:
        raise ConfigError("a list of eta values is only allowed for the energy experiment")
    if cfg.kind in ("convergence-space", "convergence-time") and cfg.initial.kind != "manufactured":
        raise ConfigError("convergence studies need the manufactured initial condition")
    if cfg.kind == "energy" and cfg.initial.kind == "manufactured":
        raise ConfigError("the energy experiment is source free; pick another initial condition")
    if cfg.dt is not None:
        for dt in cfg.dt:
            n = round(cfg.t_end / dt)
            if n < 1 or abs(n * dt - cfg.t_end) > 1e-12 * max(1.0, cfg.t_end):
                raise ConfigError(f"dt={dt} does not divide t_end={cfg.t_end} (need n_steps*dt = T)")
    if cfg.flux.alpha_b is None and cfg.degree not in STAB_TABLE:
        raise ConfigError(f"no tabulated stabilization for degree {cfg.degree}")


def load_config(path: str) -> ExperimentConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


# ---------------------------------------------------------- serialization

def _fmt(x: float) -> str:
    return repr(float(x))


def _fmt_list(xs) -> str:
    return ", ".join(_fmt(x) for x in xs)


def serialize_config(cfg: ExperimentConfig) -> str:
    cp = configparser.ConfigParser(interpolation=None)
    ex = {"kind": cfg.kind, "degree": str(cfg.degree),
          "cells": ", ".join(str(c) for c in cfg.cells),
          "dt": "auto" if cfg.dt is None else _fmt_list(cfg.dt),
          "t_end": _fmt(cfg.t_end), "dump_every": str(cfg.dump_every)}
    if cfg.output:
        ex["output"] = cfg.output
    cp["experiment"] = ex
    cp["eos"] = {f.name: _fmt(getattr(cfg.eos, f.name)) for f in fields(EOSBlock)}
    ph = cfg.physics
    cp["physics"] = {"a": _fmt(ph.a), "gamma": _fmt(ph.gamma), "eta": _fmt_list(ph.eta),
                     "nu_liquid": _fmt(ph.nu_liquid), "nu_vapor": _fmt(ph.nu_vapor)}
    fl = cfg.flux
    flux = {"alpha_b": "table"} if fl.alpha_b is None else {"alpha_b": _fmt(fl.alpha_b),
                                                             "alpha1": _fmt(fl.alpha1)}
    flux.update(alpha2=_fmt(fl.alpha2), alpha3=_fmt(fl.alpha3))
    cp["flux"] = flux
    ini = {"kind": cfg.initial.kind}
    for key in ("rho_liquid", "rho_vapor", "rho", "phi"):
        val = getattr(cfg.initial, key)
        if val is not None:
            ini[key] = _fmt(val)
    cp["initial"] = ini
    s = cfg.solver
    cp["solver"] = {"newton_abs_tol": _fmt(s.newton_abs_tol), "newton_max_iter": str(s.newton_max_iter),
                    "linear_abs_tol": _fmt(s.linear_abs_tol),
                    "max_step_halvings": str(s.max_step_halvings), "linear_solver": s.linear_solver}
    buf = io.StringIO()
    cp.write(buf)
    return buf.getvalue()
