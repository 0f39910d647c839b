"""Manufactured solution on [0, 1] and the source terms that make it exact.

    rho = cos(5 pi t) cos(2 pi x)/2 + 3/2
    v   = cos(5 pi t) cos(4 pi x)
    phi = cos(5 pi t) cos(2 pi x)/2 + 1/2

Sources are the residuals of the mass, momentum and phase-field rows of the
mixed system evaluated on this solution. They were derived by hand with the
chain rule and are checked against a finite-difference oracle in the tests.
"""

from __future__ import annotations

import numpy as np

from . import thermo
from .thermo import MixtureParams

PI = np.pi
OMEGA = 5.0 * PI


class ManufacturedSolution:
    def __init__(self, p: MixtureParams):
        self.p = p

    # elementary fields and their derivatives -----------------------------
    @staticmethod
    def _time(t):
        return np.cos(OMEGA * t), -OMEGA * np.sin(OMEGA * t)

    def rho(self, x, t):
        c, _ = self._time(t)
        return 0.5 * c * np.cos(2 * PI * x) + 1.5

    def v(self, x, t):
        c, _ = self._time(t)
        return c * np.cos(4 * PI * x)

    def phi(self, x, t):
        c, _ = self._time(t)
        return 0.5 * c * np.cos(2 * PI * x) + 0.5

    def sigma(self, x, t):
        c, _ = self._time(t)
        return -PI * c * np.sin(2 * PI * x)

    def _derivs(self, x, t):
        c, ct = self._time(t)
        c2, s2 = np.cos(2 * PI * x), np.sin(2 * PI * x)
        c4, s4 = np.cos(4 * PI * x), np.sin(4 * PI * x)
        return {
            "rho": 0.5 * c * c2 + 1.5,
            "rho_t": 0.5 * ct * c2,
            "rho_x": -PI * c * s2,
            "v": c * c4,
            "v_t": ct * c4,
            "v_x": -4 * PI * c * s4,
            "v_xx": -16 * PI**2 * c * c4,
            "phi": 0.5 * c * c2 + 0.5,
            "phi_t": 0.5 * ct * c2,
            "phi_x": -PI * c * s2,
            "phi_xx": -2 * PI**2 * c * c2,
        }

    # auxiliary fields -----------------------------------------------------
    def mu(self, x, t):
        d = self._derivs(x, t)
        return thermo.mixture_energy_dphi(d["rho"], d["phi"], self.p) - self.p.gamma * d["phi_xx"]

    def tau(self, x, t):
        d = self._derivs(x, t)
        return thermo.mixture_energy_drho(d["rho"], d["phi"], self.p) + 0.5 * d["v"] ** 2

    def exact(self, x, t):
        """(rho, v, phi, mu, tau, sigma) at (x, t)."""
        return (self.rho(x, t), self.v(x, t), self.phi(x, t),
                self.mu(x, t), self.tau(x, t), self.sigma(x, t))

    # sources ---------------------------------------------------------------
    def sources(self, x, t):
        """(S_rho, S_v, S_phi) at (x, t)."""
        p = self.p
        d = self._derivs(x, t)
        rho, v, phi = d["rho"], d["v"], d["phi"]
        rho_x, v_x, phi_x = d["rho_x"], d["v_x"], d["phi_x"]

        s_rho = d["rho_t"] + rho_x * v + rho * v_x

        mu = thermo.mixture_energy_dphi(rho, phi, p) - p.gamma * d["phi_xx"]
        tau_x = (thermo.mixture_energy_drho2(rho, phi, p) * rho_x
                 + thermo.mixture_energy_drho_dphi(rho, phi, p) * phi_x + v * v_x)
        visc = (thermo.viscosity_deriv(phi, p) * phi_x * v_x
                + thermo.viscosity(phi, p) * d["v_xx"])
        # (rho v^2)_x - (rho v)_x v - rho (v^2)_x / 2 vanishes identically in 1D
        s_v = rho * d["v_t"] + rho * tau_x - mu * phi_x - visc

        s_phi = d["phi_t"] + phi_x * v + p.eta * mu / rho
        return s_rho, s_v, s_phi

    # boundary and initial data ----------------------------------------------
    def boundary(self, t):
        """(v(0,t), v(1,t), sigma(0,t), sigma(1,t))."""
        return (float(self.v(0.0, t)), float(self.v(1.0, t)),
                float(self.sigma(0.0, t)), float(self.sigma(1.0, t)))

    def initial(self):
        """Callables (rho0, v0, phi0, dphi0, d2phi0) at t = 0."""
        return (lambda x: self.rho(x, 0.0), lambda x: self.v(x, 0.0), lambda x: self.phi(x, 0.0),
                lambda x: self.sigma(x, 0.0), lambda x: self._derivs(x, 0.0)["phi_xx"])
