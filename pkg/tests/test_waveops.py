# tests/test_waveops.py

import numpy as np
import pytest

from kato_scat.errors import ConfigError, NearSingularity
from kato_scat.jost.jost_solver import default_grid
from kato_scat.opcalc.subspace import band_basis, packet_basis, restricted_norm
from kato_scat.potential.oracle import step_zero, tune_singular_step
from kato_scat.potential.potential import Potential
from kato_scat.riesz.projection import projection_from_zeros
from kato_scat.spectrum.zeros import EigenK
from kato_scat.waveops.lattice import SpectralLattice
from kato_scat.waveops.traces import boundary_trace, hardy_ladder, trace_energy, trace_table
from kato_scat.waveops.verification import spectral_distance, verify_completeness, verify_intertwining
from kato_scat.waveops.wave_operators import assemble, singularity_gate, wave_operator_pair


def test_lattice_weights_integrate_constants():
    lattice = SpectralLattice(big_lambda=100.0, n_kappa=200, n_negative=60)
    lams, weights, upper, lower = lattice.nodes()
    assert weights.sum() == pytest.approx(2 * (100.0 - 1e-4), rel=1e-12)
    assert lams.min() > -100.0 and lams.max() < 100.0
    assert np.all(np.abs(lams) >= 1e-4)
    np.testing.assert_allclose(upper ** 2, lams, atol=1e-10)
    np.testing.assert_allclose(lower ** 2, lams, atol=1e-10)
    assert np.all(upper.imag >= 0) and np.all(lower.imag >= 0)


def test_lattice_coarsening_and_digest():
    lattice = SpectralLattice()
    coarse = lattice.coarsened()
    assert coarse.n_kappa == lattice.n_kappa // 2
    assert coarse.n_negative == lattice.n_negative // 2
    assert lattice.digest() == SpectralLattice().digest()
    assert lattice.digest() != coarse.digest()


def test_free_wave_operators_are_identity(zero_potential, wave_grid):
    projection = projection_from_zeros(zero_potential, [], wave_grid)
    pair = wave_operator_pair(zero_potential, projection, wave_grid)
    identity = np.eye(wave_grid.size)
    np.testing.assert_array_equal(pair.W.matrix, identity)
    np.testing.assert_array_equal(pair.Z.matrix, identity)

    completeness = verify_completeness(pair, wave_grid)
    assert completeness["wz_defect"] == 0.0
    assert completeness["zw_defect"] == 0.0
    intertwining = verify_intertwining(pair, zero_potential, wave_grid)
    assert intertwining["resolvent_defect"] < 1e-14
    assert intertwining["similarity_defect"] < 1e-14


def test_unknown_method_rejected(zero_potential, wave_grid):
    projection = projection_from_zeros(zero_potential, [], wave_grid)
    with pytest.raises(ConfigError):
        assemble(zero_potential, projection, wave_grid, "W", method="lippmann")


def test_gate_stops_at_real_zero():
    potential = tune_singular_step(1.0)
    grid = default_grid(potential, 200)
    with pytest.raises(NearSingularity):
        singularity_gate(potential, grid, np.array([0.5, 1.0, 1.5]))


def test_gate_passes_regular_potential(weak_well):
    grid = default_grid(weak_well, 200)
    assert singularity_gate(weak_well, grid, np.linspace(0.1, 5.0, 50)) > 1e-3


def test_spectral_distance_of_similar_matrices(rng):
    matrix = rng.normal(size=(6, 6))
    similarity = np.eye(6) + 0.1 * rng.normal(size=(6, 6))
    conjugated = similarity @ matrix @ np.linalg.inv(similarity)
    assert spectral_distance(conjugated, matrix) < 1e-10


def test_trace_kinds(weak_well, wave_grid):
    vector = packet_basis(wave_grid)[:, 0]
    with pytest.raises(ConfigError):
        boundary_trace(weak_well, vector, "C_R0", 1.0, wave_grid)
    limit = boundary_trace(weak_well, vector, "A_R0", 1.0, wave_grid)
    nearby = boundary_trace(weak_well, vector, "A_R0", 1.0, wave_grid, eps=1e-7)
    assert np.max(np.abs(limit - nearby)) < 1e-4
    # the trace only lives on the support of V
    assert np.all(limit[wave_grid.nodes > 1.0] == 0)


def test_trace_of_zero_potential(zero_potential, wave_grid):
    vector = packet_basis(wave_grid)[:, 0]
    lattice = SpectralLattice(big_lambda=25.0, n_kappa=50, n_negative=20)
    _, weights, values = trace_table(zero_potential, vector, "A_RV", wave_grid, lattice)
    assert trace_energy(wave_grid, weights, values) == 0.0


def test_hardy_ladder_shape(weak_well, wave_grid):
    vector = packet_basis(wave_grid)[:, 0]
    lattice = SpectralLattice(big_lambda=25.0, n_kappa=50, n_negative=20)
    ladder = hardy_ladder(weak_well, vector, "A_R0", wave_grid, lattice)
    assert len(ladder.energies) == 4
    assert len(ladder.mean_square_steps) == 3
    assert all(energy > 0 for energy in ladder.energies)


@pytest.mark.slow
@pytest.mark.parametrize("depth, eigenvalues", [(-1.9, 0), (-3.0, 1)])
def test_spectral_method_meets_tolerances(depth, eigenvalues, scattering_grid):
    potential = Potential.step(depth, 1.0)
    zeros = [EigenK(step_zero(depth, 1.0, 0.25j), 1, 0.0)] if eigenvalues else []
    projection = projection_from_zeros(potential, zeros, scattering_grid)
    pair = wave_operator_pair(potential, projection, scattering_grid, method="spectral")

    completeness = verify_completeness(pair, scattering_grid)
    assert completeness["zw_defect"] < 1e-3
    assert completeness["wz_defect"] < 5e-3
    assert completeness["kernel_defect"] < 1e-4
    assert completeness["range_defect"] < 1e-4

    intertwining = verify_intertwining(pair, potential, scattering_grid)
    assert intertwining["resolvent_defect"] < 1e-3
    assert intertwining["spectral_distance"] < 1e-2


@pytest.mark.slow
def test_forms_method_matches_spectral_method(deep_well, deep_well_k0, scattering_grid):
    projection = projection_from_zeros(deep_well, [EigenK(deep_well_k0, 1, 0.0)], scattering_grid)
    basis = band_basis(scattering_grid)
    forms = wave_operator_pair(deep_well, projection, scattering_grid, method="forms")
    spectral = wave_operator_pair(deep_well, projection, scattering_grid, method="spectral")
    for side in ("W", "Z"):
        gap = restricted_norm(getattr(forms, side).matrix - getattr(spectral, side).matrix, basis,
                              scattering_grid.weights)
        assert gap < 1e-3, side

    report = verify_completeness(forms, scattering_grid, basis)
    assert report["zw_defect"] < 1e-3
    assert report["wz_defect"] < 5e-3
    assert report["kernel_defect"] < 1e-4
