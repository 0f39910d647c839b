"""One-dimensional broken polynomial spaces on a uniform mesh of [0, 1].

Fields are stored as nodal values at the Gauss-Lobatto points of each cell
(a single midpoint node for k = 0), so the two endpoint values of a cell are
degrees of freedom and traces need no interpolation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from numpy.polynomial import legendre


@dataclass(frozen=True)
class Mesh1D:
    n_cells: int
    vertices: np.ndarray = field(repr=False)

    @property
    def cell_size(self) -> np.ndarray:
        return np.diff(self.vertices)

    @property
    def h(self) -> float:
        return float(self.cell_size.max())

    @property
    def n_faces(self) -> int:
        return self.n_cells + 1

    def face_measure(self) -> np.ndarray:
        """Penalty length scale per interior face: mean of the two adjacent cell sizes."""
        hs = self.cell_size
        return 0.5 * (hs[:-1] + hs[1:])


def build_mesh(n_cells: int) -> Mesh1D:
    if n_cells < 1:
        raise ValueError(f"need at least one cell, got {n_cells}")
    return Mesh1D(n_cells=int(n_cells), vertices=np.linspace(0.0, 1.0, n_cells + 1))


def gauss_lobatto_nodes(k: int) -> np.ndarray:
    if k == 0:
        return np.zeros(1)
    interior = legendre.Legendre.basis(k).deriv().roots() if k > 1 else np.empty(0)
    return np.concatenate([[-1.0], np.sort(np.real(interior)), [1.0]])


class Basis:
    """Nodal Lagrange basis of degree k on the reference cell [-1, 1].

    Parameters
    ----------
    k : int
        Polynomial degree.
    n_quad : int, optional
        Number of Gauss points; defaults to k + 3.
    """

    def __init__(self, k: int, n_quad: int | None = None):
        if k < 0:
            raise ValueError("degree must be nonnegative")
        self.k = k
        self.n_quad = k + 3 if n_quad is None else n_quad
        if self.n_quad < k + 2:
            raise ValueError("need at least k + 2 quadrature points")
        self.nodes = gauss_lobatto_nodes(k)
        self.quad_points, self.quad_weights = legendre.leggauss(self.n_quad)
        # Lagrange coefficients in the Legendre basis: l_i(x) = sum_j C[j, i] P_j(x)
        self._coeffs = np.linalg.inv(legendre.legvander(self.nodes, k))

        self.values = self.eval(self.quad_points)            # (nq, k+1)
        self.derivs = self.eval_deriv(self.quad_points)      # (nq, k+1), reference coords
        self.left = self.eval(np.array([-1.0]))[0]           # (k+1,)
        self.right = self.eval(np.array([1.0]))[0]
        self.dleft = self.eval_deriv(np.array([-1.0]))[0]
        self.dright = self.eval_deriv(np.array([1.0]))[0]
        # reference mass matrix, exact for the product of two degree-k polynomials
        self.mass = (self.values * self.quad_weights[:, None]).T @ self.values

    @property
    def n_dofs(self) -> int:
        return self.k + 1

    def eval(self, xi) -> np.ndarray:
        return legendre.legvander(np.asarray(xi, dtype=float), self.k) @ self._coeffs

    def eval_deriv(self, xi) -> np.ndarray:
        xi = np.asarray(xi, dtype=float)
        out = np.zeros((xi.size, self.k + 1))
        for j in range(self.k + 1):
            out += np.outer(legendre.legval(xi, legendre.legder(np.eye(self.k + 1)[j])), self._coeffs[j])
        return out


@dataclass
class DGField:
    """Broken polynomial function with per-cell nodal coefficients (n_cells, k+1)."""

    mesh: Mesh1D
    basis: Basis
    coeffs: np.ndarray

    def __post_init__(self):
        self.coeffs = np.asarray(self.coeffs, dtype=float)
        expected = (self.mesh.n_cells, self.basis.n_dofs)
        if self.coeffs.shape != expected:
            raise ValueError(f"coefficient shape {self.coeffs.shape} != {expected}")

    @classmethod
    def zeros(cls, mesh: Mesh1D, basis: Basis) -> "DGField":
        return cls(mesh, basis, np.zeros((mesh.n_cells, basis.n_dofs)))

    def copy(self) -> "DGField":
        return DGField(self.mesh, self.basis, self.coeffs.copy())

    def at_quad(self) -> np.ndarray:
        return self.coeffs @ self.basis.values.T

    def grad_at_quad(self) -> np.ndarray:
        return (self.coeffs @ self.basis.derivs.T) * (2.0 / self.mesh.cell_size)[:, None]

    def left_trace(self) -> np.ndarray:
        return self.coeffs @ self.basis.left

    def right_trace(self) -> np.ndarray:
        return self.coeffs @ self.basis.right

    def __call__(self, x) -> np.ndarray:
        """Evaluate at physical points; a shared vertex takes the value from the cell on its right."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        cell = np.clip(np.searchsorted(self.mesh.vertices, x, side="right") - 1, 0, self.mesh.n_cells - 1)
        return self.eval_in_cell(cell, x)

    def eval_in_cell(self, cell, x) -> np.ndarray:
        cell = np.asarray(cell)
        x0 = self.mesh.vertices[cell]
        xi = 2.0 * (x - x0) / self.mesh.cell_size[cell] - 1.0
        return np.einsum("pi,pi->p", self.basis.eval(xi), self.coeffs[cell])


def quad_points(mesh: Mesh1D, basis: Basis) -> np.ndarray:
    """Physical quadrature coordinates, shape (n_cells, n_quad)."""
    x0 = mesh.vertices[:-1, None]
    return x0 + 0.5 * (basis.quad_points[None, :] + 1.0) * mesh.cell_size[:, None]


def quad_weights(mesh: Mesh1D, basis: Basis) -> np.ndarray:
    """Physical quadrature weights, shape (n_cells, n_quad)."""
    return 0.5 * mesh.cell_size[:, None] * basis.quad_weights[None, :]


def integrate(values: np.ndarray, mesh: Mesh1D, basis: Basis) -> float:
    return float(np.sum(values * quad_weights(mesh, basis)))


def l2_project(f: Callable, mesh: Mesh1D, basis: Basis) -> DGField:
    """Cellwise L2 projection of a pointwise function, using the basis quadrature."""
    xq = quad_points(mesh, basis)
    fq = np.broadcast_to(np.asarray(f(xq), dtype=float), xq.shape)
    rhs = (fq * basis.quad_weights) @ basis.values      # (n_cells, k+1), reference scaling
    coeffs = np.linalg.solve(basis.mass, rhs.T).T
    return DGField(mesh, basis, coeffs)


@dataclass(frozen=True)
class FaceTraces:
    """One-sided traces of a field.

    ``left``/``right`` hold, for each interior face, the value from the cell to
    its left (outward normal +1) and to its right (normal -1). ``boundary`` holds
    the interior trace at x = 0 and x = 1 with outward normals -1 and +1.
    """

    left: np.ndarray
    right: np.ndarray
    boundary: np.ndarray

    boundary_normals = np.array([-1.0, 1.0])

    @property
    def jump(self) -> np.ndarray:
        return self.left - self.right

    @property
    def avg(self) -> np.ndarray:
        return 0.5 * (self.left + self.right)


def face_traces(u: DGField) -> FaceTraces:
    rt, lt = u.right_trace(), u.left_trace()
    return FaceTraces(left=rt[:-1], right=lt[1:], boundary=np.array([lt[0], rt[-1]]))


def jump_avg(u: DGField, face: int) -> tuple[float, float]:
    """Scalar jump and average at vertex index ``face`` (0 .. n_cells).

    Interior faces: jump = left - right, average = mean. Boundary faces: the
    jump is the interior trace times the outward normal and the average is
    the interior trace.
    """
    n = u.mesh.n_cells
    if not 0 <= face <= n:
        raise IndexError(f"face {face} not in mesh with {n} cells")
    tr = face_traces(u)
    if face == 0:
        v = tr.boundary[0]
        return -v, v
    if face == n:
        v = tr.boundary[1]
        return v, v
    return float(tr.jump[face - 1]), float(tr.avg[face - 1])


def elementwise_ibp_check(u: DGField, phi: DGField) -> float:
    """Residual of the elementwise integration-by-parts identity.

    Returns  int u' phi + int u phi' - sum over all faces of [[phi u]],
    which vanishes for any pair of broken polynomials when the quadrature
    is exact for the integrand.
    """
    if u.mesh is not phi.mesh and not np.array_equal(u.mesh.vertices, phi.mesh.vertices):
        raise ValueError("fields live on different meshes")
    if u.basis.k != phi.basis.k:
        raise ValueError("fields have different degrees")
    mesh, basis = u.mesh, u.basis
    volume = integrate(u.grad_at_quad() * phi.at_quad() + u.at_quad() * phi.grad_at_quad(), mesh, basis)
    tu, tp = face_traces(u), face_traces(phi)
    interior = np.sum(tu.left * tp.left - tu.right * tp.right)
    boundary = np.sum(FaceTraces.boundary_normals * tu.boundary * tp.boundary)
    return float(volume - interior - boundary)


def broken_norm_l2(u: DGField, exact: Callable | None = None) -> float:
    """Broken L2 norm of ``u - exact`` evaluated with the basis quadrature."""
    vals = u.at_quad()
    if exact is not None:
        xq = quad_points(u.mesh, u.basis)
        vals = vals - np.broadcast_to(np.asarray(exact(xq), dtype=float), xq.shape)
    return float(np.sqrt(integrate(vals * vals, u.mesh, u.basis)))
