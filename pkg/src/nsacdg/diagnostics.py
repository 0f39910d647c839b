"""Mass, discrete energy, energy-balance bookkeeping and convergence rates."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from . import thermo
from .mesh_dg import DGField, face_traces, integrate
from .spatial import FluxParams, StateVector, assemble_Bh
from .thermo import MixtureParams


@dataclass
class StepDiagnostics:
    time: float
    total_mass: float
    energy: float
    visc_dissipation: float = 0.0
    mobility_dissipation: float = 0.0
    stab_tau: float = 0.0
    stab_v: float = 0.0
    stab_mu: float = 0.0
    energy_balance_residual: float = 0.0

    @property
    def stab_dissipation(self) -> float:
        return self.stab_tau + self.stab_v + self.stab_mu

    def as_dict(self) -> dict:
        return asdict(self)


def total_mass(rho: DGField) -> float:
    return integrate(rho.at_quad(), rho.mesh, rho.basis)


def discrete_energy(U: StateVector, p: MixtureParams) -> float:
    """int rho f(rho, phi) + gamma/2 sigma^2 + rho/2 v^2, by quadrature."""
    rho = U.rho.at_quad()
    phi = U.phi.at_quad()
    v = U.v.at_quad()
    sig = U.sigma.at_quad()
    dens = thermo.mixture_energy(rho, phi, p) + 0.5 * p.gamma * sig * sig + 0.5 * rho * v * v
    return integrate(dens, U.mesh, U.basis)


def _midpoint(U_old: StateVector, U_new: StateVector) -> StateVector:
    return StateVector(U_new.mesh, U_new.basis, 0.5 * (U_old.data + U_new.data))


def dissipation_terms(U_old: StateVector, U_new: StateVector, p: MixtureParams,
                      fp: FluxParams) -> dict:
    """Per-unit-time dissipation rates of one step, evaluated at the midpoint state."""
    Um = _midpoint(U_old, U_new)
    mu = Um.mu.at_quad()
    rho = Um.rho.at_quad()
    mobility = integrate(p.eta * mu * mu / rho, Um.mesh, Um.basis)
    visc = assemble_Bh(Um.phi, Um.v, Um.v, fp, p)
    jt = face_traces(Um.tau).jump
    jv = face_traces(Um.v).jump
    jm = face_traces(Um.mu).jump
    return {
        "visc_dissipation": visc,
        "mobility_dissipation": mobility,
        "stab_tau": fp.alpha1 * float(np.sum(jt * jt)),
        "stab_v": fp.alpha2 * float(np.sum(jv * jv)),
        "stab_mu": fp.alpha3 * float(np.sum(jm * jm)),
    }


def energy_balance_residual(U_old: StateVector, U_new: StateVector, dt: float,
                            p: MixtureParams, fp: FluxParams) -> float:
    """E(U_new) - E(U_old) + dt * (total dissipation rate); zero for an exact step."""
    terms = dissipation_terms(U_old, U_new, p, fp)
    return discrete_energy(U_new, p) - discrete_energy(U_old, p) + dt * sum(terms.values())


def step_diagnostics(t: float, U_old: StateVector, U_new: StateVector, dt: float,
                     p: MixtureParams, fp: FluxParams) -> StepDiagnostics:
    terms = dissipation_terms(U_old, U_new, p, fp)
    e_new = discrete_energy(U_new, p)
    resid = e_new - discrete_energy(U_old, p) + dt * sum(terms.values())
    return StepDiagnostics(time=t, total_mass=total_mass(U_new.rho), energy=e_new,
                           energy_balance_residual=resid, **terms)


def initial_diagnostics(U: StateVector, p: MixtureParams, t: float = 0.0) -> StepDiagnostics:
    return StepDiagnostics(time=t, total_mass=total_mass(U.rho), energy=discrete_energy(U, p))


class DiagnosticsRecorder:
    """Run observer collecting one StepDiagnostics per accepted step."""

    def __init__(self, U0: StateVector, dt: float, p: MixtureParams, fp: FluxParams):
        self.dt, self.p, self.fp = dt, p, fp
        self.records = [initial_diagnostics(U0, p)]

    def __call__(self, n, t, U_old, U_new):
        self.records.append(step_diagnostics(t, U_old, U_new, self.dt, self.p, self.fp))

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.records])


def compute_eoc(errors: Sequence[float], resolutions: Sequence[float]) -> list:
    """Experimental orders of convergence between consecutive entries.

    ``resolutions`` are cell counts (rate log(e0/e1)/log(N1/N0)); pass
    reciprocal step sizes 1/dt for temporal studies.
    """
    e = np.asarray(errors, dtype=float)
    n = np.asarray(resolutions, dtype=float)
    if e.size != n.size or e.size < 2:
        raise ValueError("need two or more errors and a resolution for each")
    if np.any(e <= 0) or np.any(n <= 0):
        raise ValueError("errors and resolutions must be positive")
    return list(np.log(e[:-1] / e[1:]) / np.log(n[1:] / n[:-1]))


def linf_l2_error(samples: Sequence[float]) -> float:
    if len(samples) == 0:
        raise ValueError("no error samples")
    return float(np.max(samples))
