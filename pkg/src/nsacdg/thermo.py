"""Pointwise thermodynamic closures of the two-phase mixture.

All functions accept scalars or numpy arrays and broadcast. The free
energy density of the mixture is

    rho*f(rho, phi) = h(phi) rho*f_L(rho) + (1 - h(phi)) rho*f_V(rho) + W(phi)/gamma

with stiffened-gas bulk energies rho*f = alpha rho ln(rho) + (beta - alpha) rho + gamma_c.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class DensityError(ValueError):
    """Raised when a thermodynamic function is evaluated at rho <= 0."""


@dataclass(frozen=True)
class PhaseEOS:
    """Stiffened-gas coefficients of one pure phase."""

    alpha: float
    beta: float
    gamma_c: float = 0.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")


@dataclass(frozen=True)
class MixtureParams:
    liquid: PhaseEOS
    vapor: PhaseEOS
    a: float
    gamma: float
    eta: float
    nu_liquid: float
    nu_vapor: float

    def __post_init__(self):
        for name in ("a", "gamma", "eta", "nu_liquid", "nu_vapor"):
            value = getattr(self, name)
            if not value > 0:
                raise ValueError(f"{name} must be positive, got {value}")


def _check_density(rho):
    rho = np.asarray(rho, dtype=float)
    if np.any(~(rho > 0)):
        bad = rho[~(rho > 0)] if rho.ndim else rho
        raise DensityError(f"nonpositive density encountered (min {np.min(bad):.3e})")
    return rho


# ---------------------------------------------------------------- polynomials

def interp(phi):
    """Interpolation function h(phi) = 3 phi^2 - 2 phi^3."""
    phi = np.asarray(phi, dtype=float)
    return phi * phi * (3.0 - 2.0 * phi)


def interp_deriv(phi):
    phi = np.asarray(phi, dtype=float)
    return 6.0 * phi * (1.0 - phi)


def interp_deriv2(phi):
    return 6.0 - 12.0 * np.asarray(phi, dtype=float)


def double_well(phi, a):
    phi = np.asarray(phi, dtype=float)
    return a * phi**2 * (1.0 - phi) ** 2


def double_well_deriv(phi, a):
    phi = np.asarray(phi, dtype=float)
    return 2.0 * a * phi * (1.0 - phi) * (1.0 - 2.0 * phi)


def double_well_deriv2(phi, a):
    phi = np.asarray(phi, dtype=float)
    return 2.0 * a * (1.0 - 6.0 * phi + 6.0 * phi * phi)


# ------------------------------------------------------------- bulk energies

def bulk_energy(rho, eos: PhaseEOS):
    """Stiffened-gas free energy density alpha rho ln rho + (beta - alpha) rho + gamma_c."""
    rho = _check_density(rho)
    return eos.alpha * rho * np.log(rho) + (eos.beta - eos.alpha) * rho + eos.gamma_c


def bulk_energy_deriv(rho, eos: PhaseEOS):
    rho = _check_density(rho)
    return eos.alpha * np.log(rho) + eos.beta


def bulk_energy_deriv2(rho, eos: PhaseEOS):
    rho = _check_density(rho)
    return eos.alpha / rho


# ---------------------------------------------------------- mixture energies

def mixture_energy(rho, phi, p: MixtureParams):
    rho = _check_density(rho)
    h = interp(phi)
    return (h * bulk_energy(rho, p.liquid) + (1.0 - h) * bulk_energy(rho, p.vapor)
            + double_well(phi, p.a) / p.gamma)


def mixture_energy_dphi(rho, phi, p: MixtureParams):
    rho = _check_density(rho)
    jump = bulk_energy(rho, p.liquid) - bulk_energy(rho, p.vapor)
    return interp_deriv(phi) * jump + double_well_deriv(phi, p.a) / p.gamma


def mixture_energy_drho(rho, phi, p: MixtureParams):
    rho = _check_density(rho)
    h = interp(phi)
    return h * bulk_energy_deriv(rho, p.liquid) + (1.0 - h) * bulk_energy_deriv(rho, p.vapor)


def mixture_energy_drho2(rho, phi, p: MixtureParams):
    rho = _check_density(rho)
    h = interp(phi)
    return h * bulk_energy_deriv2(rho, p.liquid) + (1.0 - h) * bulk_energy_deriv2(rho, p.vapor)


def mixture_energy_drho_dphi(rho, phi, p: MixtureParams):
    rho = _check_density(rho)
    return interp_deriv(phi) * (bulk_energy_deriv(rho, p.liquid) - bulk_energy_deriv(rho, p.vapor))


def mixture_energy_dphi2(rho, phi, p: MixtureParams):
    rho = _check_density(rho)
    jump = bulk_energy(rho, p.liquid) - bulk_energy(rho, p.vapor)
    return interp_deriv2(phi) * jump + double_well_deriv2(phi, p.a) / p.gamma


def viscosity(phi, p: MixtureParams):
    h = interp(phi)
    return h * p.nu_liquid + (1.0 - h) * p.nu_vapor


def viscosity_deriv(phi, p: MixtureParams):
    return interp_deriv(phi) * (p.nu_liquid - p.nu_vapor)


# ------------------------------------------------------- splitting quotients
#
# Both quotients are evaluated through exact divided differences of the
# polynomial (in phi) and logarithmic (in rho) parts of the energy. This is
# algebraically identical to the four-term difference quotients, has no
# removable singularity at equal arguments and avoids cancellation when the
# two time levels are close.

def _interp_divdiff(p0, p1):
    """(h(p1) - h(p0)) / (p1 - p0), exact for all inputs."""
    return 3.0 * (p0 + p1) - 2.0 * (p0 * p0 + p0 * p1 + p1 * p1)


def _double_well_divdiff(p0, p1, a):
    s1 = p0 + p1
    s2 = p0 * p0 + p0 * p1 + p1 * p1
    s3 = (p0 * p0 + p1 * p1) * s1
    return a * (s1 - 2.0 * s2 + s3)


def _log1p_ratio(u):
    """log1p(u)/u with the removable singularity at u = 0 filled in."""
    u = np.asarray(u, dtype=float)
    safe = np.where(u == 0.0, 1.0, u)
    return np.where(u == 0.0, 1.0, np.log1p(safe) / safe)


def _bulk_divdiff(r0, r1, eos: PhaseEOS):
    """(rho f(r1) - rho f(r0)) / (r1 - r0) for the stiffened gas."""
    # r1 ln r1 - r0 ln r0 = r1 (ln r1 - ln r0) + (r1 - r0) ln r0
    ratio = _log1p_ratio((r1 - r0) / r0) / r0
    return eos.alpha * (r1 * ratio + np.log(r0)) + eos.beta - eos.alpha


def mu_quotient(rho_old, rho_new, phi_old, phi_new, p: MixtureParams):
    """Staggered difference quotient replacing d(rho f)/d(phi) in the time scheme.

    Equals

        [F(r1, p1) - F(r1, p0) + F(r0, p1) - F(r0, p0)] / (2 (p1 - p0))

    with F = rho*f, and the mean of the analytic phi-partials at r0 and r1
    when p1 == p0.
    """
    r0 = _check_density(rho_old)
    r1 = _check_density(rho_new)
    p0 = np.asarray(phi_old, dtype=float)
    p1 = np.asarray(phi_new, dtype=float)
    jump = 0.5 * (bulk_energy(r0, p.liquid) - bulk_energy(r0, p.vapor)
                  + bulk_energy(r1, p.liquid) - bulk_energy(r1, p.vapor))
    return jump * _interp_divdiff(p0, p1) + _double_well_divdiff(p0, p1, p.a) / p.gamma


def tau_quotient(rho_old, rho_new, phi_old, phi_new, p: MixtureParams):
    """Staggered difference quotient replacing d(rho f)/d(rho) in the time scheme.

    Equals

        [F(r1, p1) - F(r0, p1) + F(r1, p0) - F(r0, p0)] / (2 (r1 - r0)),

    continuously extended to r1 == r0.
    """
    r0 = _check_density(rho_old)
    r1 = _check_density(rho_new)
    hbar = 0.5 * (interp(phi_old) + interp(phi_new))
    return hbar * _bulk_divdiff(r0, r1, p.liquid) + (1.0 - hbar) * _bulk_divdiff(r0, r1, p.vapor)


# --------------------------------------------------------- parameter presets

def convergence_params() -> MixtureParams:
    """Parameters of the manufactured-solution convergence study."""
    return MixtureParams(
        liquid=PhaseEOS(alpha=1.5, beta=float(np.log(2.0)), gamma_c=0.0),
        vapor=PhaseEOS(alpha=1.0, beta=0.0, gamma_c=0.5),
        a=0.1, gamma=1e-3, eta=1.0, nu_liquid=1e-3, nu_vapor=1e-3,
    )
