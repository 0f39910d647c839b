"""Fully-discrete dG residual of the mixed NSAC system in one space dimension.

Unknowns are stacked cell-major as an array of shape (n_cells, 6, k+1) with
the field order (rho, v, phi, mu, tau, sigma). Every residual row is the
corresponding equation tested against one nodal basis function, so the
Jacobian is block tridiagonal with blocks of size 6(k+1).

Jump convention on an interior face: [[w]] = w_left - w_right (the left cell
has outward normal +1), {w} = (w_left + w_right)/2. The numerical fluxes act
on interior faces only; the SIPG form also visits the two boundary points.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from . import thermo
from .mesh_dg import Basis, DGField, FaceTraces, Mesh1D, face_traces, quad_points, quad_weights
from .thermo import DensityError, MixtureParams

FIELDS = ("rho", "v", "phi", "mu", "tau", "sigma")
RHO, VEL, PHI, MU, TAU, SIGMA = range(6)

# (x, t) -> (S_rho, S_v, S_phi)
SourceFn = Callable[[np.ndarray, float], tuple]
# t -> (v(0), v(1), sigma(0), sigma(1))
BoundaryFn = Callable[[float], tuple]


def no_slip(t: float) -> tuple:
    return 0.0, 0.0, 0.0, 0.0


@dataclass(frozen=True)
class FluxParams:
    alpha_b: float
    alpha1: float = 0.0
    alpha2: float = 0.0
    alpha3: float = 0.0

    def __post_init__(self):
        if not self.alpha_b > 0:
            raise ValueError("alpha_b must be positive")
        if min(self.alpha1, self.alpha2, self.alpha3) < 0:
            raise ValueError("stabilization coefficients must be nonnegative")


class StateVector:
    """The six discrete fields at one time level, backed by one array."""

    def __init__(self, mesh: Mesh1D, basis: Basis, data: Optional[np.ndarray] = None):
        self.mesh = mesh
        self.basis = basis
        shape = (mesh.n_cells, 6, basis.n_dofs)
        self.data = np.zeros(shape) if data is None else np.array(data, dtype=float).reshape(shape)

    @classmethod
    def from_fields(cls, **fields: DGField) -> "StateVector":
        first = fields["rho"]
        out = cls(first.mesh, first.basis)
        for i, name in enumerate(FIELDS):
            out.data[:, i, :] = fields[name].coeffs
        return out

    def field(self, name: str) -> DGField:
        return DGField(self.mesh, self.basis, self.data[:, FIELDS.index(name), :])

    def __getattr__(self, name):
        if name in FIELDS:
            return self.field(name)
        raise AttributeError(name)

    def copy(self) -> "StateVector":
        return StateVector(self.mesh, self.basis, self.data.copy())

    def flat(self) -> np.ndarray:
        return self.data.reshape(-1)

    def with_flat(self, x: np.ndarray) -> "StateVector":
        return StateVector(self.mesh, self.basis, x)

    def min_density(self) -> float:
        rho = self.data[:, RHO, :]
        return float(min((rho @ self.basis.values.T).min(), rho.min()))


def _check_compatible(*states: StateVector):
    ref = states[0]
    for s in states[1:]:
        if s.basis.k != ref.basis.k or s.mesh.n_cells != ref.mesh.n_cells:
            raise ValueError("states have different meshes or degrees")


# ------------------------------------------------------------------ helpers

class _Local:
    """Quadrature values, gradients and traces of one nodal coefficient array."""

    __slots__ = ("q", "dq", "a", "b", "bd")

    def __init__(self, c: np.ndarray, basis: Basis, inv_jac: np.ndarray):
        self.q = c @ basis.values.T
        self.dq = (c @ basis.derivs.T) * inv_jac[:, None]
        rt = c @ basis.right
        lt = c @ basis.left
        self.a = rt[:-1]          # left-of-face trace
        self.b = lt[1:]           # right-of-face trace
        self.bd = (lt[0], rt[-1])  # boundary traces at x=0, x=1

    @property
    def jump(self):
        return self.a - self.b


def _scatter(rows: np.ndarray, left: np.ndarray, right: np.ndarray, basis: Basis,
             vec_left=None, vec_right=None):
    """Add face coefficients to the rows of the cells left/right of each interior face."""
    vl = basis.right if vec_left is None else vec_left
    vr = basis.left if vec_right is None else vec_right
    rows[:-1] += left[:, None] * vl
    rows[1:] += right[:, None] * vr


def _bh_rows(nu_q, nu_a, nu_b, nu_bd, v: _Local, basis: Basis, mesh: Mesh1D,
             wq: np.ndarray, inv_jac: np.ndarray, alpha_b: float, g=(0.0, 0.0)) -> np.ndarray:
    """Rows of B_h[phi; v, X] for every nodal test function X.

    ``g`` is the exterior value of v at x = 0 and x = 1.
    """
    rows = ((nu_q * v.dq * wq) * inv_jac[:, None]) @ basis.derivs
    # interior faces
    jv = v.jump
    sv_a, sv_b = nu_a * v.dq_a, nu_b * v.dq_b
    avg_s = 0.5 * (sv_a + sv_b)
    pen = alpha_b / mesh.face_measure() * jv
    coef = -avg_s + pen
    rows[:-1] += coef[:, None] * basis.right
    rows[1:] -= coef[:, None] * basis.left
    # -{nu X'} [[v]]
    rows[:-1] -= (0.5 * nu_a * inv_jac[:-1] * jv)[:, None] * basis.dright
    rows[1:] -= (0.5 * nu_b * inv_jac[1:] * jv)[:, None] * basis.dleft
    # boundary points, exterior value g, outward normals -1 and +1
    hs = mesh.cell_size
    d0 = v.bd[0] - g[0]
    s0 = nu_bd[0] * v.dq_bd[0]
    rows[0] += (s0 + alpha_b / hs[0] * d0) * basis.left + nu_bd[0] * inv_jac[0] * d0 * basis.dleft
    d1 = v.bd[1] - g[1]
    s1 = nu_bd[1] * v.dq_bd[1]
    rows[-1] += (-s1 + alpha_b / hs[-1] * d1) * basis.right - nu_bd[1] * inv_jac[-1] * d1 * basis.dright
    return rows


class _LocalWithDeriv(_Local):
    """_Local plus one-sided traces of the derivative (needed by B_h)."""

    __slots__ = ("dq_a", "dq_b", "dq_bd")

    def __init__(self, c, basis, inv_jac):
        super().__init__(c, basis, inv_jac)
        drt = (c @ basis.dright) * inv_jac
        dlt = (c @ basis.dleft) * inv_jac
        self.dq_a = drt[:-1]
        self.dq_b = dlt[1:]
        self.dq_bd = (dlt[0], drt[-1])


# ------------------------------------------------------------- public forms

def assemble_Bh(phi: DGField, v: DGField, x: DGField, fp: FluxParams, p: MixtureParams,
                g=(0.0, 0.0)) -> float:
    """Symmetric interior penalty form B_h[phi; v, x] with viscosity nu(phi)."""
    if not (phi.mesh.n_cells == v.mesh.n_cells == x.mesh.n_cells):
        raise ValueError("fields live on different meshes")
    mesh, basis = v.mesh, v.basis
    inv_jac = 2.0 / mesh.cell_size
    lp = _Local(phi.coeffs, basis, inv_jac)
    lv = _LocalWithDeriv(v.coeffs, basis, inv_jac)
    nu = lambda s: thermo.viscosity(s, p)  # noqa: E731
    rows = _bh_rows(nu(lp.q), nu(lp.a), nu(lp.b), (nu(lp.bd[0]), nu(lp.bd[1])), lv, basis, mesh,
                    quad_weights(mesh, basis), inv_jac, fp.alpha_b, g)
    return float(np.sum(rows * x.coeffs))


def flux_terms(U: StateVector, slot: int, test: DGField, fp: FluxParams, gamma: float = 1.0) -> float:
    """Interior-face flux functional int_E F_slot[U, test] for slot 1..6.

    ``gamma`` is the capillarity parameter entering F4.
    """
    if slot not in range(1, 7):
        raise ValueError(f"flux slot must be in 1..6, got {slot}")
    if test.mesh.n_cells != U.mesh.n_cells or test.basis.k != U.basis.k:
        raise ValueError("test function lives on a different mesh or basis")
    tr = {name: face_traces(U.field(name)) for name in FIELDS}
    tt = face_traces(test)

    def avg_prod(f: FaceTraces, g: FaceTraces):
        return 0.5 * (f.left * g.left + f.right * g.right)

    def jump_prod(f: FaceTraces, g: FaceTraces):
        return f.left * g.left - f.right * g.right

    rho, v, phi, mu, tau, sigma = (tr[n] for n in FIELDS)
    if slot == 1:
        val = -jump_prod(rho, v) * tt.avg + fp.alpha1 * tau.jump * tt.jump
    elif slot == 2:
        val = -tau.jump * avg_prod(rho, tt) + phi.jump * avg_prod(mu, tt) + fp.alpha2 * v.jump * tt.jump
    elif slot == 3:
        val = -phi.jump * avg_prod(tt, v) + fp.alpha3 * mu.jump * tt.jump
    elif slot == 4:
        val = -gamma * sigma.jump * tt.avg
    elif slot == 5:
        val = np.zeros_like(tt.avg)
    else:
        val = phi.jump * tt.avg
    return float(np.sum(val))


def pinned_dofs(basis: Basis) -> list:
    """Flat (cell, field, node) positions of strongly imposed boundary values, empty for k = 0."""
    if basis.k == 0:
        return []
    k = basis.k
    return [(0, VEL, 0), (-1, VEL, k), (0, SIGMA, 0), (-1, SIGMA, k)]


def apply_pins(U: StateVector, values) -> None:
    """Overwrite the boundary nodes of v and sigma with (v0, v1, s0, s1)."""
    for (c, f, n), val in zip(pinned_dofs(U.basis), values):
        U.data[c, f, n] = val


def assemble_residual(U_old: StateVector, U_new: StateVector, dt: float, p: MixtureParams,
                      fp: FluxParams, t_old: float = 0.0, sources: Optional[SourceFn] = None,
                      boundary: Optional[BoundaryFn] = None) -> np.ndarray:
    """Residual of one step of the fully-discrete scheme, shape (n_cells, 6, k+1).

    The momentum, phase-field and flux terms use midpoint states
    X^{n+1/2} = (X^n + X^{n+1})/2; the chemical-potential and tau equations use
    the staggered difference quotients of the mixture energy; the gradient
    equation is posed at the new time level. Sources, if given, are evaluated
    at t_old + dt/2.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    _check_compatible(U_old, U_new)
    mesh, basis = U_new.mesh, U_new.basis
    boundary = boundary or no_slip
    inv_jac = 2.0 / mesh.cell_size
    wq = quad_weights(mesh, basis)
    Bv = basis.values

    c0, c1 = U_old.data, U_new.data
    cm = 0.5 * (c0 + c1)

    r0q = c0[:, RHO] @ Bv.T
    r1q = c1[:, RHO] @ Bv.T
    if np.any(~(r0q > 0)) or np.any(~(r1q > 0)):
        raise DensityError("nonpositive density at a quadrature point")
    p0q = c0[:, PHI] @ Bv.T
    p1q = c1[:, PHI] @ Bv.T
    v0q = c0[:, VEL] @ Bv.T
    v1q = c1[:, VEL] @ Bv.T

    rho = _Local(cm[:, RHO], basis, inv_jac)
    vel = _LocalWithDeriv(cm[:, VEL], basis, inv_jac)
    phi = _Local(cm[:, PHI], basis, inv_jac)
    mu = _Local(cm[:, MU], basis, inv_jac)
    tau = _Local(cm[:, TAU], basis, inv_jac)
    sig = _Local(cm[:, SIGMA], basis, inv_jac)
    phi1 = _Local(c1[:, PHI], basis, inv_jac)

    def test(values):
        return (values * wq) @ Bv

    if sources is not None:
        xq = quad_points(mesh, basis)
        s_rho, s_v, s_phi = sources(xq, t_old + 0.5 * dt)
    else:
        s_rho = s_v = s_phi = 0.0

    R = np.empty_like(c1)

    # mass
    mflux = rho.dq * vel.q + rho.q * vel.dq
    R[:, RHO] = test((r1q - r0q) / dt + mflux - s_rho)
    jm = rho.a * vel.a - rho.b * vel.b
    _scatter(R[:, RHO], -0.5 * jm + fp.alpha1 * tau.jump, -0.5 * jm - fp.alpha1 * tau.jump, basis)

    # momentum; the three convective terms cancel pointwise in 1D but are kept as written
    vv = vel.q * vel.q
    conv = (rho.dq * vv + 2.0 * rho.q * vel.q * vel.dq) - mflux * vel.q - rho.q * vel.q * vel.dq
    R[:, VEL] = test(rho.q * (v1q - v0q) / dt + conv + rho.q * tau.dq - mu.q * phi.dq - s_v)
    jt, jp = tau.jump, phi.jump
    _scatter(R[:, VEL],
             0.5 * (-jt * rho.a + jp * mu.a) + fp.alpha2 * vel.jump,
             0.5 * (-jt * rho.b + jp * mu.b) - fp.alpha2 * vel.jump, basis)
    nu = lambda s: thermo.viscosity(s, p)  # noqa: E731
    g_old, g_new = boundary(t_old), boundary(t_old + dt)
    g_mid = (0.5 * (g_old[0] + g_new[0]), 0.5 * (g_old[1] + g_new[1]))
    R[:, VEL] += _bh_rows(nu(phi.q), nu(phi.a), nu(phi.b), (nu(phi.bd[0]), nu(phi.bd[1])),
                          vel, basis, mesh, wq, inv_jac, fp.alpha_b, g_mid)

    # phase field
    R[:, PHI] = test((p1q - p0q) / dt + phi.dq * vel.q + p.eta * mu.q / rho.q - s_phi)
    _scatter(R[:, PHI], -0.5 * jp * vel.a + fp.alpha3 * mu.jump, -0.5 * jp * vel.b - fp.alpha3 * mu.jump, basis)

    # chemical potential
    q_mu = thermo.mu_quotient(r0q, r1q, p0q, p1q, p)
    R[:, MU] = test(mu.q - q_mu + p.gamma * sig.dq)
    js = -0.5 * p.gamma * sig.jump
    _scatter(R[:, MU], js, js, basis)

    # tau: pure L2 identification, no face term
    q_tau = thermo.tau_quotient(r0q, r1q, p0q, p1q, p)
    R[:, TAU] = test(tau.q - q_tau - 0.25 * (v1q * v1q + v0q * v0q))

    # discrete gradient at the new time level
    s1q = c1[:, SIGMA] @ Bv.T
    R[:, SIGMA] = test(s1q - phi1.dq)
    jf = 0.5 * phi1.jump
    _scatter(R[:, SIGMA], jf, jf, basis)

    for (c, f, n), val in zip(pinned_dofs(basis), g_new):
        R[c, f, n] = c1[c, f, n] - val
    return R
