import math

import numpy as np
import pytest

from nsacdg.diagnostics import (
    DiagnosticsRecorder, compute_eoc, discrete_energy, dissipation_terms, energy_balance_residual, linf_l2_error,
    total_mass,
)
from nsacdg.experiments import two_interface_data
from nsacdg.mesh_dg import Basis, DGField, build_mesh, l2_project
from nsacdg.mms import ManufacturedSolution
from nsacdg.spatial import PHI, RHO, SIGMA, VEL, FluxParams, StateVector
from nsacdg.stepper import TimeGrid, make_initial_state, newton_step, run
from nsacdg.thermo import DensityError


def uniform_state(n=4, k=1, rho=1.0, v=0.0, phi=0.0):
    U = StateVector(build_mesh(n), Basis(k))
    U.data[:, RHO] = rho
    U.data[:, VEL] = v
    U.data[:, PHI] = phi
    return U


def zero(x):
    return np.zeros_like(x)


def test_total_mass_examples():
    mesh, b = build_mesh(8), Basis(2)
    assert total_mass(DGField(mesh, b, np.ones((8, 3)))) == pytest.approx(1.0, abs=1e-14)
    rho = l2_project(lambda x: 0.5 * np.cos(2 * np.pi * x) + 1.5, mesh, b)
    assert total_mass(rho) == pytest.approx(1.5, abs=1e-13)


def test_discrete_energy_examples(params):
    assert discrete_energy(uniform_state(), params) == pytest.approx(-0.5, abs=1e-13)
    assert discrete_energy(uniform_state(v=1.0), params) == pytest.approx(0.0, abs=1e-13)
    expected = 0.5 * (math.log(2) - 2.0) + 6.25
    assert discrete_energy(uniform_state(phi=0.5), params) == pytest.approx(expected, abs=1e-12)


def test_discrete_energy_counts_capillary_term(params):
    U = uniform_state()
    U.data[:, SIGMA] = 2.0
    assert discrete_energy(U, params) == pytest.approx(-0.5 + 0.5 * params.gamma * 4.0, abs=1e-13)


def test_discrete_energy_rejects_nonpositive_density(params):
    with pytest.raises(DensityError):
        discrete_energy(uniform_state(rho=0.0), params)


def test_balance_residual_at_equilibrium(params):
    U = uniform_state(rho=1.3)
    assert abs(energy_balance_residual(U, U.copy(), 1e-3, params, FluxParams(1.0, 1.0, 1.0, 1.0))) <= 1e-12


@pytest.fixture
def two_interface(energy_params):
    rho0, phi0 = two_interface_data(energy_params.gamma, 2.23, 0.3)
    return make_initial_state(rho0, zero, phi0, energy_params, build_mesh(16), Basis(2),
                              sigma_mode="discrete_gradient")


@pytest.mark.parametrize("alpha1", [0.0, 6e-3])
def test_balance_residual_single_step(energy_params, two_interface, alpha1):
    fp = FluxParams(1.5, alpha1)
    U1 = newton_step(two_interface, 1e-3, energy_params, fp).state
    assert abs(energy_balance_residual(two_interface, U1, 1e-3, energy_params, fp)) <= 1e-8
    terms = dissipation_terms(two_interface, U1, energy_params, fp)
    assert terms["mobility_dissipation"] > 0
    if alpha1 > 0:
        assert terms["stab_tau"] > 0
    else:
        assert terms["stab_tau"] == 0.0


def test_recorder_tracks_energy_decay(energy_params, two_interface):
    fp = FluxParams(1.5)
    rec = DiagnosticsRecorder(two_interface, 1e-3, energy_params, fp)
    run(two_interface, TimeGrid(5e-3, 1e-3), energy_params, fp, observers=[rec])
    e = rec.column("energy")
    assert len(e) == 6
    assert np.all(np.diff(e) <= 1e-12)
    assert np.max(np.abs(rec.column("energy_balance_residual")[1:])) <= 1e-8
    assert rec.records[0].as_dict()["stab_tau"] == 0.0


def test_mass_drift_without_sources(params):
    ms = ManufacturedSolution(params)
    rho0, v0, phi0, dphi0, d2phi0 = ms.initial()
    U0 = make_initial_state(rho0, v0, phi0, params, build_mesh(8), Basis(2), dphi0, d2phi0)
    fp = FluxParams(1.0, 1e-3)
    rec = DiagnosticsRecorder(U0, 1e-3, params, fp)
    run(U0, TimeGrid(0.05, 1e-3), params, fp, observers=[rec])
    mass = rec.column("total_mass")
    assert np.max(np.abs(mass - mass[0])) <= 1e-10


@pytest.mark.parametrize("errors,res,expected", [
    ((1.0, 0.5), (8, 16), 1.0),
    ((1.0, 1 / 16), (8, 16), 4.0),
    ((0.3, 0.3), (8, 32), 0.0),
])
def test_compute_eoc_examples(errors, res, expected):
    assert compute_eoc(errors, res)[0] == pytest.approx(expected, abs=1e-14)


def test_compute_eoc_with_inverse_time_steps():
    rates = compute_eoc([4e-4, 1e-4, 2.5e-5], [1 / 1e-2, 1 / 5e-3, 1 / 2.5e-3])
    np.testing.assert_allclose(rates, [2.0, 2.0])


@pytest.mark.parametrize("errors,res", [((1.0,), (8,)), ((1.0, 0.0), (8, 16)), ((1.0, 2.0), (8,))])
def test_compute_eoc_rejects_bad_input(errors, res):
    with pytest.raises(ValueError):
        compute_eoc(errors, res)


def test_linf_l2_error():
    assert linf_l2_error([0.1, 0.4, 0.2]) == 0.4
    with pytest.raises(ValueError):
        linf_l2_error([])
