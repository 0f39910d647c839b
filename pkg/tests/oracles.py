"""Independent reference computations used by the tests.

Nothing here imports the closed-form derivative code under test: the
finite-difference source oracle differentiates only the exact fields and the
energy values, and the quotient oracle is the literal four-term formula.
"""

import numpy as np

from nsacdg import thermo

EPS_SPLIT = 1e-8


def d1(f, x, h=1e-4):
    """Fourth-order central first derivative."""
    return (8.0 * (f(x + h) - f(x - h)) - (f(x + 2 * h) - f(x - 2 * h))) / (12.0 * h)


def energy_partials_fd(rho, phi, p, h=1e-4):
    """d(rho f)/d(rho) and d(rho f)/d(phi) from energy values only."""
    drho = d1(lambda r: thermo.mixture_energy(r, phi, p), rho, h)
    dphi = d1(lambda s: thermo.mixture_energy(rho, s, p), phi, h)
    return drho, dphi


def fd_sources(ms, x, t, h=1e-4):
    """(S_rho, S_v, S_phi) by nested central differences of the exact fields.

    ``ms`` supplies only ``rho``, ``v``, ``phi`` (x, t) and ``p``.
    """
    p = ms.p
    rho = lambda x, t: ms.rho(x, t)  # noqa: E731
    v = lambda x, t: ms.v(x, t)  # noqa: E731
    phi = lambda x, t: ms.phi(x, t)  # noqa: E731

    dx = lambda f: (lambda x, t: d1(lambda y: f(y, t), x, h))  # noqa: E731
    dt = lambda f: (lambda x, t: d1(lambda s: f(x, s), t, h))  # noqa: E731

    def tau(x, t):
        drho, _ = energy_partials_fd(rho(x, t), phi(x, t), p)
        return drho + 0.5 * v(x, t) ** 2

    def mu(x, t):
        _, dphi = energy_partials_fd(rho(x, t), phi(x, t), p)
        return dphi - p.gamma * dx(dx(phi))(x, t)

    def visc_flux(x, t):
        return thermo.viscosity(phi(x, t), p) * dx(v)(x, t)

    mass_flux = lambda x, t: rho(x, t) * v(x, t)  # noqa: E731
    mom_flux = lambda x, t: rho(x, t) * v(x, t) ** 2  # noqa: E731
    v2 = lambda x, t: v(x, t) ** 2  # noqa: E731

    r, u = rho(x, t), v(x, t)
    m = mu(x, t)
    s_rho = dt(rho)(x, t) + dx(mass_flux)(x, t)
    s_v = (r * dt(v)(x, t) + dx(mom_flux)(x, t) - dx(mass_flux)(x, t) * u
           - 0.5 * r * dx(v2)(x, t) + r * dx(tau)(x, t) - m * dx(phi)(x, t) - dx(visc_flux)(x, t))
    s_phi = dt(phi)(x, t) + dx(phi)(x, t) * u + p.eta * m / r
    return s_rho, s_v, s_phi


def _F(r, s, p):
    return thermo.mixture_energy(r, s, p)


def four_term_mu_quotient(r0, r1, s0, s1, p, eps=EPS_SPLIT):
    """Literal staggered quotient in phi with the midpoint fallback for tiny increments."""
    r0, r1, s0, s1 = map(np.asarray, (r0, r1, s0, s1))
    ds = s1 - s0
    small = np.abs(ds) <= eps
    den = np.where(small, 1.0, 2.0 * ds)
    full = (_F(r1, s1, p) - _F(r1, s0, p) + _F(r0, s1, p) - _F(r0, s0, p)) / den
    sbar = 0.5 * (s0 + s1)
    limit = 0.5 * (thermo.mixture_energy_dphi(r1, sbar, p) + thermo.mixture_energy_dphi(r0, sbar, p))
    return np.where(small, limit, full)


def four_term_tau_quotient(r0, r1, s0, s1, p, eps=EPS_SPLIT):
    r0, r1, s0, s1 = map(np.asarray, (r0, r1, s0, s1))
    dr = r1 - r0
    small = np.abs(dr) <= eps
    den = np.where(small, 1.0, 2.0 * dr)
    full = (_F(r1, s1, p) - _F(r0, s1, p) + _F(r1, s0, p) - _F(r0, s0, p)) / den
    rbar = 0.5 * (r0 + r1)
    limit = 0.5 * (thermo.mixture_energy_drho(rbar, s1, p) + thermo.mixture_energy_drho(rbar, s0, p))
    return np.where(small, limit, full)


def fit_slope(xs, ys):
    """Least-squares slope of log(ys) against log(xs)."""
    return float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
