"""Experiment drivers: convergence studies, energy runs and single runs."""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from . import thermo
from .config import ExperimentConfig
from .diagnostics import DiagnosticsRecorder, compute_eoc, linf_l2_error
from .mesh_dg import Basis, broken_norm_l2, build_mesh
from .mms import ManufacturedSolution
from .spatial import FIELDS, StateVector
from .stepper import TimeGrid, make_initial_state, run

SPACE_HEADER = ("N", "error_rho", "eoc_rho", "error_v", "eoc_v", "error_phi", "eoc_phi")
TIME_HEADER = ("dt",) + SPACE_HEADER[1:]
ENERGY_HEADER = ("t", "mass", "energy", "visc_diss", "mobility_diss", "stab_diss", "balance_residual")


class CaseFailure(RuntimeError):
    """A solver failure inside one case of a sweep, tagged with the case label."""

    def __init__(self, label: str, cause: Exception):
        self.label = label
        self.cause = cause
        step = getattr(cause, "step", None)
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"{label}: {cause}{where}")


def dt_rule(k: int, n_cells: int) -> float:
    """Time step tied to the mesh: 10^floor(log10(1/N)) for k <= 1, 10^floor(log10(1/N^2)) otherwise."""
    if n_cells < 1:
        raise ValueError("n_cells must be >= 1")
    m = n_cells if k <= 1 else n_cells * n_cells
    # floor(log10(1/m)) = -ceil(log10(m)), in integer arithmetic to dodge rounding at powers of ten
    e = len(str(m)) - 1
    return 10.0 ** -(e if m == 10**e else e + 1)


def default_cell_cap(k: int) -> int:
    return 256 if k <= 1 else 128


def _fmt(x) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x)) if isinstance(x, float) else str(x)


def write_csv(path: str, header: Sequence[str], rows: Sequence[Sequence]) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


# -------------------------------------------------------------- initial data

def two_interface_data(gamma: float, rho_liquid: float, rho_vapor: float):
    """Smooth liquid slab on [0.3, 0.7] in vapour, interface width 4 sqrt(gamma)."""
    delta = 4.0 * math.sqrt(gamma)

    def phi0(x):
        return 0.5 * (np.tanh((x - 0.3) / delta) - np.tanh((x - 0.7) / delta))

    def rho0(x):
        return rho_vapor + (rho_liquid - rho_vapor) * thermo.interp(phi0(x))

    return rho0, phi0


def initial_state(cfg: ExperimentConfig, n_cells: int, eta: Optional[float] = None):
    """Return (U0, sources, boundary) for the configured initial condition."""
    p = cfg.mixture(eta)
    mesh, basis = build_mesh(n_cells), Basis(cfg.degree)
    ini = cfg.initial
    zero = lambda x: np.zeros_like(x)  # noqa: E731
    if ini.kind == "manufactured":
        ms = ManufacturedSolution(p)
        rho0, v0, phi0, dphi0, d2phi0 = ms.initial()
        U0 = make_initial_state(rho0, v0, phi0, p, mesh, basis, dphi0, d2phi0, boundary=ms.boundary)
        return U0, ms.sources, ms.boundary
    if ini.kind == "two-interface":
        rho0, phi0 = two_interface_data(p.gamma, ini.rho_liquid, ini.rho_vapor)
        U0 = make_initial_state(rho0, zero, phi0, p, mesh, basis, sigma_mode="discrete_gradient")
        return U0, None, None
    U0 = make_initial_state(lambda x: np.full_like(x, ini.rho), zero, lambda x: np.full_like(x, ini.phi),
                            p, mesh, basis, zero, zero, sigma_mode="discrete_gradient")
    return U0, None, None


# ----------------------------------------------------------- convergence

class _ErrorTracker:
    """Observer storing the L2 errors of rho, v, phi against the exact solution."""

    def __init__(self, ms: ManufacturedSolution, U0: StateVector):
        self.ms = ms
        self.history = [self._errors(U0, 0.0)]

    def _errors(self, U, t):
        ms = self.ms
        return (broken_norm_l2(U.rho, lambda x: ms.rho(x, t)),
                broken_norm_l2(U.v, lambda x: ms.v(x, t)),
                broken_norm_l2(U.phi, lambda x: ms.phi(x, t)))

    def __call__(self, n, t, U_old, U_new):
        self.history.append(self._errors(U_new, t))

    def linf(self):
        h = np.asarray(self.history)
        return tuple(linf_l2_error(h[:, i]) for i in range(3))

    def final(self):
        return tuple(self.history[-1])


def mms_case(cfg: ExperimentConfig, n_cells: int, dt: float):
    """One manufactured-solution run; returns (L-inf-in-time, final-time) error triples."""
    U0, sources, boundary = initial_state(cfg, n_cells)
    tracker = _ErrorTracker(ManufacturedSolution(cfg.mixture()), U0)
    run(U0, TimeGrid(cfg.t_end, dt), cfg.mixture(), cfg.flux_params(), cfg.solver,
        sources=sources, boundary=boundary, observers=[tracker])
    return tracker.linf(), tracker.final()


def _guarded(fn: Callable, label: str, *args):
    try:
        return fn(*args)
    except (RuntimeError, thermo.DensityError) as exc:
        raise CaseFailure(label, exc) from exc


def _map(fn, jobs, threads: int):
    if threads <= 1 or len(jobs) <= 1:
        return [_guarded(fn, *job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(threads, len(jobs))) as pool:
        futures = [pool.submit(_guarded, fn, *job) for job in jobs]
        return [f.result() for f in futures]


def _table(resolutions, errors, eoc_res):
    errs = np.asarray(errors)
    eocs = [compute_eoc(errs[:, i], eoc_res) for i in range(3)]
    rows = []
    for j, r in enumerate(resolutions):
        row = [r]
        for i in range(3):
            row += [float(errs[j, i]), None if j == 0 else float(eocs[i][j - 1])]
        rows.append(row)
    return rows


def run_convergence_space(cfg: ExperimentConfig, max_cells: Optional[int] = None,
                          threads: int = 1) -> list:
    """Rows (N, err_rho, eoc_rho, err_v, eoc_v, err_phi, eoc_phi), errors in L-inf(0,T; L2)."""
    cells = list(cfg.cells)
    if len(cells) < 2:
        raise ValueError("need at least two cell counts")
    if len(set(cells)) != len(cells):
        raise ValueError("duplicate cell counts")
    cap = default_cell_cap(cfg.degree) if max_cells is None else max_cells
    if max(cells) > cap:
        raise ValueError(f"cell count {max(cells)} exceeds the cap {cap}; raise it with --max-cells")
    jobs = [(f"N={n}", cfg, n, cfg.dt[0] if cfg.dt else dt_rule(cfg.degree, n)) for n in cells]
    results = _map(_unpack_linf, jobs, threads)
    return _table(cells, results, cells)


def _unpack_linf(cfg, n, dt):
    return mms_case(cfg, n, dt)[0]


def _unpack_final(cfg, n, dt):
    return mms_case(cfg, n, dt)[1]


def run_convergence_time(cfg: ExperimentConfig, threads: int = 1) -> list:
    """Rows (dt, err_rho, eoc_rho, ...), using final-time L2 errors."""
    if cfg.dt is None or len(cfg.dt) < 2:
        raise ValueError("need at least two dt values")
    if len(set(cfg.dt)) != len(cfg.dt):
        raise ValueError("duplicate dt values")
    n = cfg.cells[0]
    jobs = [(f"dt={dt}", cfg, n, dt) for dt in cfg.dt]
    results = _map(_unpack_final, jobs, threads)
    return _table(list(cfg.dt), results, [1.0 / dt for dt in cfg.dt])


# ---------------------------------------------------------------- energy

@dataclass
class EnergyRun:
    eta: float
    rows: list
    dump: list


class _FieldDump:
    def __init__(self, every: int, U0: StateVector):
        self.every = every
        self.rows = []
        if every:
            self._record(0, 0.0, U0)

    def _record(self, n, t, U):
        x = U.mesh.vertices[:-1, None] + 0.5 * (U.basis.nodes[None, :] + 1.0) * U.mesh.cell_size[:, None]
        data = U.data.transpose(0, 2, 1).reshape(-1, 6)
        for xi, vals in zip(x.ravel(), data):
            self.rows.append([n, t, float(xi), *map(float, vals)])

    def __call__(self, n, t, U_old, U_new):
        if self.every and (n + 1) % self.every == 0:
            self._record(n + 1, t, U_new)


def _energy_rows(rec: DiagnosticsRecorder) -> list:
    return [[r.time, r.total_mass, r.energy, r.visc_dissipation, r.mobility_dissipation,
             r.stab_dissipation, r.energy_balance_residual] for r in rec.records]


def energy_case(cfg: ExperimentConfig, eta: Optional[float]) -> EnergyRun:
    p = cfg.mixture(eta)
    fp = cfg.flux_params()
    dt = cfg.dt[0]
    U0, sources, boundary = initial_state(cfg, cfg.cells[0], eta)
    rec = DiagnosticsRecorder(U0, dt, p, fp)
    dump = _FieldDump(cfg.dump_every, U0)
    run(U0, TimeGrid(cfg.t_end, dt), p, fp, cfg.solver, sources=sources, boundary=boundary,
        observers=[rec, dump])
    return EnergyRun(p.eta, _energy_rows(rec), dump.rows)


def run_energy(cfg: ExperimentConfig, threads: int = 1) -> list:
    """One EnergyRun per configured mobility, in configuration order."""
    jobs = [(f"eta={eta}", cfg, eta) for eta in cfg.physics.eta]
    return _map(energy_case, jobs, threads)


def run_single(cfg: ExperimentConfig) -> EnergyRun:
    return _guarded(energy_case, "single-run", cfg, None)


DUMP_HEADER = ("step", "t", "x") + FIELDS


def energy_output_paths(out: str, etas: Sequence[float]) -> list:
    """One CSV per mobility; the mobility is appended to the file stem when there are several."""
    if len(etas) == 1:
        return [out]
    stem, ext = os.path.splitext(out)
    return [f"{stem}_eta{eta:g}{ext or '.csv'}" for eta in etas]


def check_convergence(rows: list, lo: float, hi: float) -> list:
    """Return failure messages for finest-pair EOCs outside [lo, hi]."""
    last = rows[-1]
    fails = []
    for name, eoc in zip(("rho", "v", "phi"), last[2::2]):
        if eoc is None or not lo <= eoc <= hi:
            fails.append(f"eoc_{name} = {eoc} outside [{lo}, {hi}]")
    return fails


def check_energy(run_: EnergyRun, stabilized: bool) -> list:
    rows = np.asarray(run_.rows, dtype=float)
    fails = []
    drift = float(np.max(np.abs(rows[:, 1] - rows[0, 1])))
    if drift > 1e-9:
        fails.append(f"eta={run_.eta}: mass drift {drift:.3e} > 1e-9")
    rise = float(np.max(np.diff(rows[:, 2]))) if len(rows) > 1 else 0.0
    if rise > 1e-8:
        fails.append(f"eta={run_.eta}: energy increased by {rise:.3e} in one step")
    if not stabilized:
        bal = float(np.max(np.abs(rows[1:, 6]))) if len(rows) > 1 else 0.0
        if bal > 1e-8:
            fails.append(f"eta={run_.eta}: energy balance residual {bal:.3e} > 1e-8")
    return fails


__all__ = [
    "SPACE_HEADER", "TIME_HEADER", "ENERGY_HEADER", "DUMP_HEADER", "CaseFailure", "EnergyRun",
    "dt_rule", "default_cell_cap", "write_csv", "two_interface_data", "initial_state", "mms_case",
    "run_convergence_space", "run_convergence_time", "run_energy", "run_single", "energy_case",
    "energy_output_paths", "check_convergence", "check_energy",
]
