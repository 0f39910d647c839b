import numpy as np
import pytest

from nsacdg import thermo
from nsacdg.config import STAB_TABLE
from nsacdg.diagnostics import total_mass
from nsacdg.experiments import two_interface_data
from nsacdg.mesh_dg import Basis, broken_norm_l2, build_mesh
from nsacdg.mms import ManufacturedSolution
from nsacdg.spatial import FluxParams, MU, PHI, RHO, SIGMA, TAU, VEL
from nsacdg.stepper import (
    DensityPositivityLoss, NonConvergence, SolverConfig, TimeGrid, discrete_gradient, make_initial_state,
    newton_step, run,
)


def const(c):
    return lambda x: np.full_like(np.asarray(x, dtype=float), c)


def test_time_grid():
    g = TimeGrid(0.03, 1e-3)
    assert g.n_steps == 30
    assert g.times()[-1] == pytest.approx(0.03)
    assert TimeGrid(0.0, 0.1).n_steps == 0
    with pytest.raises(ValueError):
        TimeGrid(0.03, 0.007)
    with pytest.raises(ValueError):
        TimeGrid(1.0, 0.0)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(newton_abs_tol=0.0)
    with pytest.raises(ValueError):
        SolverConfig(linear_solver="gmres")


def test_initial_state_constant_data(params):
    mesh, b = build_mesh(4), Basis(1)
    U = make_initial_state(const(1.5), const(0.0), const(0.0), params, mesh, b, const(0.0), const(0.0))
    np.testing.assert_allclose(U.data[:, RHO], 1.5)
    np.testing.assert_allclose(U.data[:, [VEL, PHI, SIGMA]], 0.0)
    np.testing.assert_allclose(U.data[:, MU], thermo.mixture_energy_dphi(1.5, 0.0, params))
    np.testing.assert_allclose(U.data[:, TAU], thermo.mixture_energy_drho(1.5, 0.0, params))


def test_initial_state_rejects_bad_data(params):
    mesh, b = build_mesh(4), Basis(1)
    with pytest.raises(ValueError):
        make_initial_state(const(-1.0), const(0.0), const(0.0), params, mesh, b)
    with pytest.raises(ValueError):
        make_initial_state(const(1.0), const(0.0), const(1.5), params, mesh, b)
    with pytest.raises(ValueError):
        make_initial_state(const(1.0), const(0.0), const(0.5), params, mesh, b, sigma_mode="exact")


def test_initial_state_manufactured_matches_exact(params):
    ms = ManufacturedSolution(params)
    mesh, b = build_mesh(16), Basis(2)
    rho0, v0, phi0, dphi0, d2phi0 = ms.initial()
    U = make_initial_state(rho0, v0, phi0, params, mesh, b, dphi0, d2phi0, boundary=ms.boundary)
    from nsacdg.mesh_dg import l2_project
    # unpinned fields are plain projections of the exact data
    for field, exact in (("rho", ms.rho), ("phi", ms.phi), ("mu", ms.mu), ("tau", ms.tau)):
        ref = l2_project(lambda x: exact(x, 0.0), mesh, b)
        np.testing.assert_allclose(U.field(field).coeffs, ref.coeffs, atol=1e-8)
    for field, exact in (("v", ms.v), ("sigma", ms.sigma)):
        assert broken_norm_l2(U.field(field), lambda x: exact(x, 0.0)) < 5e-3


def test_discrete_gradient_of_linear_field_is_exact():
    from nsacdg.mesh_dg import l2_project
    mesh, b = build_mesh(5), Basis(2)
    phi = l2_project(lambda x: 0.2 + 0.5 * x, mesh, b)
    np.testing.assert_allclose(discrete_gradient(phi, (0.5, 0.5)).coeffs, 0.5, atol=1e-12)


def test_equilibrium_is_fixed_point(params):
    mesh, b = build_mesh(8), Basis(2)
    U0 = make_initial_state(const(1.3), const(0.0), const(0.0), params, mesh, b, const(0.0), const(0.0))
    res = run(U0, TimeGrid(0.1, 1e-3), params, FluxParams(*STAB_TABLE[2]))
    assert np.max(np.abs(res.state.data - U0.data)) <= 1e-10
    assert res.newton_iterations == [0] * 100


def test_zero_steps_returns_initial_state(params):
    mesh, b = build_mesh(4), Basis(1)
    U0 = make_initial_state(const(1.3), const(0.0), const(0.2), params, mesh, b, const(0.0), const(0.0))
    res = run(U0, TimeGrid(0.0, 1e-3), params, FluxParams(1.0))
    np.testing.assert_array_equal(res.state.data, U0.data)
    assert res.newton_iterations == []


def test_manufactured_step_converges_quickly(params):
    ms = ManufacturedSolution(params)
    mesh, b = build_mesh(32), Basis(2)
    rho0, v0, phi0, dphi0, d2phi0 = ms.initial()
    U0 = make_initial_state(rho0, v0, phi0, params, mesh, b, dphi0, d2phi0, boundary=ms.boundary)
    res = newton_step(U0, 1e-4, params, FluxParams(*STAB_TABLE[2]), sources=ms.sources, boundary=ms.boundary)
    assert res.iterations <= 15
    assert res.residual_norm <= 1e-10


@pytest.mark.parametrize("solver", ["direct", "bicgstab"])
def test_two_interface_steps_conserve_mass(energy_params, solver):
    rho0, phi0 = two_interface_data(energy_params.gamma, 2.23, 0.3)
    mesh, b = build_mesh(16), Basis(1)
    U0 = make_initial_state(rho0, const(0.0), phi0, energy_params, mesh, b, sigma_mode="discrete_gradient")
    res = run(U0, TimeGrid(3e-3, 1e-3), energy_params, FluxParams(1.5), SolverConfig(linear_solver=solver))
    assert total_mass(res.state.rho) == pytest.approx(total_mass(U0.rho), abs=1e-11)


def test_run_is_deterministic(energy_params):
    rho0, phi0 = two_interface_data(energy_params.gamma, 2.23, 0.3)
    mesh, b = build_mesh(12), Basis(1)
    U0 = make_initial_state(rho0, const(0.0), phi0, energy_params, mesh, b, sigma_mode="discrete_gradient")
    a = run(U0, TimeGrid(2e-3, 1e-3), energy_params, FluxParams(1.5)).state.data
    c = run(U0, TimeGrid(2e-3, 1e-3), energy_params, FluxParams(1.5)).state.data
    np.testing.assert_array_equal(a, c)


def test_huge_step_fails_cleanly(energy_params):
    rho0, phi0 = two_interface_data(energy_params.gamma, 2.23, 0.3)
    mesh, b = build_mesh(8), Basis(2)
    U0 = make_initial_state(rho0, const(0.0), phi0, energy_params, mesh, b, sigma_mode="discrete_gradient")
    snapshot = U0.data.copy()
    with pytest.raises((NonConvergence, DensityPositivityLoss)):
        newton_step(U0, 1e3, energy_params, FluxParams(1.5))
    np.testing.assert_array_equal(U0.data, snapshot)


def test_run_tags_failing_step(energy_params):
    rho0, phi0 = two_interface_data(energy_params.gamma, 2.23, 0.3)
    mesh, b = build_mesh(8), Basis(2)
    U0 = make_initial_state(rho0, const(0.0), phi0, energy_params, mesh, b, sigma_mode="discrete_gradient")
    with pytest.raises((NonConvergence, DensityPositivityLoss)) as info:
        run(U0, TimeGrid(2e3, 1e3), energy_params, FluxParams(1.5))
    assert info.value.step == 0
