"""Time stepping: initial data, Newton solve of each implicit step, time loop."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import thermo
from .mesh_dg import Basis, DGField, Mesh1D, l2_project, quad_points
from .spatial import (
    PHI, RHO, SIGMA, BoundaryFn, FluxParams, SourceFn, StateVector, apply_pins,
    assemble_residual, no_slip,
)
from .thermo import DensityError, MixtureParams

log = logging.getLogger(__name__)


class NonConvergence(RuntimeError):
    def __init__(self, iterations: int, residual: float, step: Optional[int] = None):
        self.iterations = iterations
        self.residual = residual
        self.step = step
        super().__init__(f"Newton did not converge after {iterations} iterations "
                         f"(residual {residual:.3e})")


class DensityPositivityLoss(RuntimeError):
    def __init__(self, location, step: Optional[int] = None):
        self.location = location
        self.step = step
        super().__init__(f"density positivity lost near cell {location} after all step halvings")


@dataclass(frozen=True)
class TimeGrid:
    t_end: float
    dt: float

    def __post_init__(self):
        if not (self.dt > 0 and self.t_end >= 0):
            raise ValueError("need dt > 0 and t_end >= 0")
        n = round(self.t_end / self.dt)
        if abs(n * self.dt - self.t_end) > 1e-12 * max(1.0, self.t_end):
            raise ValueError(f"dt={self.dt} does not divide t_end={self.t_end}")

    @property
    def n_steps(self) -> int:
        return round(self.t_end / self.dt)

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class SolverConfig:
    newton_abs_tol: float = 1e-10
    newton_max_iter: int = 30
    linear_abs_tol: float = 1e-10
    max_step_halvings: int = 8
    linear_solver: str = "direct"

    def __post_init__(self):
        if not (self.newton_abs_tol > 0 and self.linear_abs_tol > 0):
            raise ValueError("tolerances must be positive")
        if self.linear_solver not in ("direct", "bicgstab"):
            raise ValueError(f"unknown linear solver {self.linear_solver!r}")


# ------------------------------------------------------------- initial data

def _derivative(f: Callable, x: np.ndarray, step: float = 1e-4) -> np.ndarray:
    """Fourth-order central difference."""
    return (8.0 * (f(x + step) - f(x - step)) - (f(x + 2 * step) - f(x - 2 * step))) / (12.0 * step)


def discrete_gradient(phi: DGField, boundary_values=(0.0, 0.0)) -> DGField:
    """Solve the discrete gradient equation  (sigma, Z) = (phi', Z) - sum_E [[phi]] {Z}.

    For k >= 1 the two boundary nodes are fixed to ``boundary_values``.
    """
    mesh, basis = phi.mesh, phi.basis
    h = mesh.cell_size
    rhs = (phi.coeffs @ basis.derivs.T * basis.quad_weights) @ basis.values  # already integrated: J * 2/h = 1
    rt, lt = phi.right_trace(), phi.left_trace()
    jump = rt[:-1] - lt[1:]
    rhs[:-1] -= 0.5 * jump[:, None] * basis.right
    rhs[1:] -= 0.5 * jump[:, None] * basis.left
    mass = 0.5 * h[:, None, None] * basis.mass[None]
    if basis.k > 0:
        k = basis.k
        mass[0, 0, :] = 0.0
        mass[0, 0, 0] = 1.0
        rhs[0, 0] = boundary_values[0]
        mass[-1, k, :] = 0.0
        mass[-1, k, k] = 1.0
        rhs[-1, k] = boundary_values[1]
    return DGField(mesh, basis, np.linalg.solve(mass, rhs[..., None])[..., 0])


def make_initial_state(rho0: Callable, v0: Callable, phi0: Callable, p: MixtureParams,
                       mesh: Mesh1D, basis: Basis, dphi0: Optional[Callable] = None,
                       d2phi0: Optional[Callable] = None, boundary: Optional[BoundaryFn] = None,
                       sigma_mode: str = "project") -> StateVector:
    """Project the initial data and the derived auxiliary fields onto the dG space.

    sigma0 = phi0', mu0 = d(rho f)/d(phi) - gamma sigma0', tau0 = d(rho f)/d(rho) + v0^2/2.
    Derivatives of phi0 that are not supplied are taken numerically. With
    ``sigma_mode="discrete_gradient"`` sigma0 is instead the discrete gradient of
    the projected phi0, which makes the first step satisfy the discrete energy
    identity exactly.
    """
    if sigma_mode not in ("project", "discrete_gradient"):
        raise ValueError(f"unknown sigma_mode {sigma_mode!r}")
    dphi0 = dphi0 or (lambda x: _derivative(phi0, x))
    d2phi0 = d2phi0 or (lambda x: _derivative(dphi0, x))
    boundary = boundary or no_slip

    xs = np.linspace(0.0, 1.0, 201)
    if np.any(np.asarray(rho0(xs)) <= 0):
        raise ValueError("initial density must be positive")
    ph = np.asarray(phi0(xs))
    if np.any(ph < 0) or np.any(ph > 1):
        raise ValueError("initial phase field must lie in [0, 1]")

    def mu0(x):
        return thermo.mixture_energy_dphi(rho0(x), phi0(x), p) - p.gamma * d2phi0(x)

    def tau0(x):
        return thermo.mixture_energy_drho(rho0(x), phi0(x), p) + 0.5 * np.asarray(v0(x)) ** 2

    fields = {
        "rho": l2_project(rho0, mesh, basis),
        "v": l2_project(v0, mesh, basis),
        "phi": l2_project(phi0, mesh, basis),
        "mu": l2_project(mu0, mesh, basis),
        "tau": l2_project(tau0, mesh, basis),
        "sigma": l2_project(dphi0, mesh, basis),
    }
    U = StateVector.from_fields(**fields)
    g = boundary(0.0)
    apply_pins(U, g)
    if sigma_mode == "discrete_gradient":
        U.data[:, SIGMA] = discrete_gradient(U.phi, (g[2], g[3])).coeffs
    return U


# ------------------------------------------------------------------- Newton

def fd_jacobian(residual: Callable[[np.ndarray], np.ndarray], x: np.ndarray, r0: np.ndarray,
                n_cells: int, block: int) -> sp.csc_matrix:
    """Forward-difference Jacobian of a nearest-neighbour coupled residual.

    Cells are coloured modulo 3, so each probe perturbs one local unknown in
    every third cell and the responses in neighbouring cells do not overlap.
    """
    eps = np.sqrt(np.finfo(float).eps)
    rows, cols, vals = [], [], []
    cells = np.arange(n_cells)
    local_rows = np.arange(block)
    for color in range(min(3, n_cells)):
        owners = cells[color::3]
        for j in range(block):
            idx = owners * block + j
            step = eps * (1.0 + np.abs(x[idx]))
            xp = x.copy()
            xp[idx] += step
            dr = (residual(xp) - r0).reshape(n_cells, block)
            for offset in (-1, 0, 1):
                nb = owners + offset
                ok = (nb >= 0) & (nb < n_cells)
                col = idx[ok]
                d = dr[nb[ok]] / step[ok][:, None]
                rows.append((nb[ok][:, None] * block + local_rows[None, :]).ravel())
                cols.append(np.repeat(col, block))
                vals.append(d.ravel())
    n = n_cells * block
    J = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
    return J.tocsc()


def _linear_solve(J: sp.csc_matrix, b: np.ndarray, cfg: SolverConfig) -> np.ndarray:
    if cfg.linear_solver == "direct":
        return spla.splu(J).solve(b)
    ilu = spla.spilu(J, drop_tol=1e-6, fill_factor=20)
    M = spla.LinearOperator(J.shape, ilu.solve)
    x, info = spla.bicgstab(J, b, rtol=0.0, atol=cfg.linear_abs_tol, maxiter=2000, M=M)
    if info != 0:
        log.warning("bicgstab returned info=%d, falling back to direct solve", info)
        return spla.splu(J).solve(b)
    return x


@dataclass
class NewtonResult:
    state: StateVector
    iterations: int
    residual_norm: float


def newton_step(U_old: StateVector, dt: float, p: MixtureParams, fp: FluxParams,
                cfg: SolverConfig = SolverConfig(), t_old: float = 0.0,
                sources: Optional[SourceFn] = None, boundary: Optional[BoundaryFn] = None) -> NewtonResult:
    """Advance one time step by solving the implicit system with Newton's method.

    The initial guess is U_old (with the new boundary values pinned). Updates
    that make the density nonpositive are halved up to
    ``cfg.max_step_halvings`` times. U_old is never modified.
    """
    mesh, basis = U_old.mesh, U_old.basis
    boundary = boundary or no_slip
    block = 6 * basis.n_dofs
    if sources is not None:
        # sources depend only on the step's midpoint time; evaluate once
        frozen = sources(quad_points(mesh, basis), t_old + 0.5 * dt)
        sources = lambda x, t: frozen  # noqa: E731

    def residual(x):
        return assemble_residual(U_old, StateVector(mesh, basis, x), dt, p, fp,
                                 t_old=t_old, sources=sources, boundary=boundary).reshape(-1)

    guess = U_old.copy()
    apply_pins(guess, boundary(t_old + dt))
    x = guess.flat().copy()
    r = residual(x)
    rnorm = float(np.max(np.abs(r)))
    for it in range(cfg.newton_max_iter + 1):
        if rnorm <= cfg.newton_abs_tol:
            return NewtonResult(StateVector(mesh, basis, x), it, rnorm)
        if it == cfg.newton_max_iter or not np.isfinite(rnorm):
            break
        J = fd_jacobian(residual, x, r, mesh.n_cells, block)
        try:
            dx = _linear_solve(J, -r, cfg)
        except RuntimeError:  # singular factorization
            break
        if not np.all(np.isfinite(dx)):
            break
        lam = 1.0
        for _ in range(cfg.max_step_halvings + 1):
            trial = x + lam * dx
            try:
                r = residual(trial)
                break
            except DensityError:
                lam *= 0.5
        else:
            rho = trial.reshape(mesh.n_cells, 6, -1)[:, RHO]
            raise DensityPositivityLoss(int(np.argmin(rho.min(axis=1))))
        x = trial
        rnorm = float(np.max(np.abs(r)))
    raise NonConvergence(it, rnorm)


# ---------------------------------------------------------------- time loop

Observer = Callable[[int, float, StateVector, StateVector], None]


@dataclass
class RunResult:
    state: StateVector
    times: np.ndarray
    newton_iterations: list = field(default_factory=list)


def run(U0: StateVector, grid: TimeGrid, p: MixtureParams, fp: FluxParams,
        cfg: SolverConfig = SolverConfig(), sources: Optional[SourceFn] = None,
        boundary: Optional[BoundaryFn] = None, observers: Sequence[Observer] = ()) -> RunResult:
    """Advance ``grid.n_steps`` steps from U0.

    Each observer is called as ``obs(n, t_{n+1}, U_n, U_{n+1})`` after every
    accepted step. Solver failures are re-raised with ``.step`` set.
    """
    U = U0
    iters = []
    for n in range(grid.n_steps):
        t = n * grid.dt
        try:
            res = newton_step(U, grid.dt, p, fp, cfg, t_old=t, sources=sources, boundary=boundary)
        except (NonConvergence, DensityPositivityLoss) as exc:
            exc.step = n
            raise
        phi = res.state.data[:, PHI]
        lo, hi = float(phi.min()), float(phi.max())
        if lo < -1e-8 or hi > 1 + 1e-8:
            log.debug("step %d: phase field outside [0,1] (min %.3e, max %.3e)", n, lo, hi)
        iters.append(res.iterations)
        for obs in observers:
            obs(n, t + grid.dt, U, res.state)
        U = res.state
    return RunResult(U, grid.times(), iters)
