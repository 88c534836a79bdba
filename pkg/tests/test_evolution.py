# tests/test_evolution.py

import numpy as np
import pytest

from kato_scat.errors import AliasingDetected, ConfigError, DomainEscape
from kato_scat.evolution.nonstationary import (
    cook_tail,
    edge_mass,
    eigenmode_defect,
    laplace_check,
    nonstationary_W,
    nonstationary_Z,
    parseval_check,
    semigroup_check,
    suggested_x_max,
)
from kato_scat.evolution.propagator import (
    UniformGrid,
    cell_averages,
    free_evolve,
    from_uniform,
    perturbed_evolve,
    resample_to_uniform,
    resolvent_power_evolve,
)
from kato_scat.opcalc.grid import Grid
from kato_scat.opcalc.operators import DiscretizedOperator
from kato_scat.opcalc.subspace import band_basis, gaussian_packet, packet_basis
from kato_scat.riesz.projection import eigenpair, projection_from_zeros
from kato_scat.waveops.lattice import SpectralLattice
from kato_scat.waveops.wave_operators import wave_operator_pair


@pytest.fixture
def ugrid():
    return UniformGrid(40.0, 1024)


@pytest.fixture
def packet(ugrid):
    return gaussian_packet(ugrid.points, 20.0, 1.0, 1.0)


@pytest.mark.parametrize("x_max, n", [(0.0, 64), (10.0, 4)])
def test_uniform_grid_validation(x_max, n):
    with pytest.raises(ConfigError):
        UniformGrid(x_max, n)


def test_free_evolution_at_zero_time(packet, ugrid):
    np.testing.assert_array_equal(free_evolve(packet, 0.0, ugrid), packet)


def test_free_evolution_is_unitary_group(packet, ugrid):
    once = free_evolve(free_evolve(packet, 1.0, ugrid), 1.0, ugrid)
    twice = free_evolve(packet, 2.0, ugrid)
    assert ugrid.norm(once - twice) < 1e-10
    assert ugrid.norm(twice) == pytest.approx(ugrid.norm(packet), rel=1e-12)
    back = free_evolve(twice, -2.0, ugrid)
    assert ugrid.norm(back - packet) < 1e-10


def test_aliasing_is_refused(ugrid):
    rough = np.sin(ugrid.wavenumbers[-10] * ugrid.points)
    with pytest.raises(AliasingDetected):
        free_evolve(rough, 1.0, ugrid)


def test_split_step_of_zero_potential_is_free(zero_potential, packet, ugrid):
    split = perturbed_evolve(zero_potential, packet, 1.0, ugrid, 10)
    np.testing.assert_allclose(split, free_evolve(packet, 1.0, ugrid), atol=1e-12)
    with pytest.raises(ConfigError):
        perturbed_evolve(zero_potential, packet, 1.0, ugrid, 0)


def test_split_step_conserves_norm_for_real_potential(weak_well, ugrid):
    start = gaussian_packet(ugrid.points, 6.0, 1.0, -1.0)
    moved = perturbed_evolve(weak_well, start, 2.0, ugrid, 400, check=False)
    assert ugrid.norm(moved) == pytest.approx(ugrid.norm(start), rel=1e-10)


def test_cell_averages_place_the_jump(deep_well):
    ugrid = UniformGrid(4.0, 128)
    values = cell_averages(deep_well, ugrid)
    # x = 1 is the 32nd point; its cell straddles the jump
    assert values[30] == pytest.approx(-3.0, abs=1e-12)
    assert values[31] == pytest.approx(-1.5, abs=1e-12)
    assert values[32] == pytest.approx(0.0, abs=1e-12)
    assert ugrid.step * values.sum() == pytest.approx(-3.0 * (1.0 - ugrid.step / 2), rel=1e-12)


def test_resolvent_power_approximates_free_evolution(zero_potential):
    fine = UniformGrid(40.0, 4096)
    start = gaussian_packet(fine.points, 20.0, 1.0, 0.0)
    exact = free_evolve(start, 1.0, fine)
    approximate = resolvent_power_evolve(zero_potential, start, 1.0, 2000, fine)
    assert fine.norm(approximate - exact) / fine.norm(exact) < 5e-2


def test_resampling_between_grids():
    grid = Grid.build(10.0, 200)
    ugrid = UniformGrid(10.0, 256)
    values = resample_to_uniform(grid, np.exp(-(grid.nodes - 5.0) ** 2), ugrid)
    np.testing.assert_allclose(values, np.exp(-(ugrid.points - 5.0) ** 2), atol=1e-6)


def test_sine_series_reproduces_samples(packet, ugrid):
    np.testing.assert_allclose(from_uniform(ugrid, packet, ugrid.points), packet, atol=1e-10)
    assert from_uniform(ugrid, packet, np.array([50.0]))[0] == 0


def test_edge_mass_and_domain_hint(ugrid):
    inside = gaussian_packet(ugrid.points, 10.0, 1.0, 0.0)
    edge = gaussian_packet(ugrid.points, 38.0, 1.0, 0.0)
    assert edge_mass(ugrid, inside) < 1e-12
    assert edge_mass(ugrid, edge) > 0.5
    assert suggested_x_max(ugrid, inside, 10.0) > 40.0


def test_free_nonstationary_limits_are_exact(zero_potential):
    grid = Grid.build(20.0, 400)
    ugrid = UniformGrid(20.0, 1024)
    projection = projection_from_zeros(zero_potential, [], grid)
    identity = DiscretizedOperator.identity(grid.weights)

    def packet(x):
        return gaussian_packet(x, 10.0, 1.0, 0.0)

    w_result = nonstationary_W(zero_potential, projection, identity, packet, grid, ugrid, t_ladder=(0.5, 1.0))
    z_result = nonstationary_Z(zero_potential, projection, identity, packet, grid, ugrid, t_ladder=(0.5, 1.0))
    assert w_result.times == [0.5, 1.0]
    assert max(w_result.defects) < 1e-8
    assert max(z_result.defects) < 1e-8


def test_undersized_domain_escapes(zero_potential):
    grid = Grid.build(20.0, 400)
    ugrid = UniformGrid(20.0, 1024)
    projection = projection_from_zeros(zero_potential, [], grid)
    identity = DiscretizedOperator.identity(grid.weights)

    def packet(x):
        return gaussian_packet(x, 10.0, 0.3, 0.0)

    with pytest.raises(DomainEscape) as caught:
        nonstationary_W(zero_potential, projection, identity, packet, grid, ugrid, t_ladder=(2.0,))
    assert caught.value.suggested_x_max > 20.0


def test_semigroup_for_free_pair(zero_potential, wave_grid):
    projection = projection_from_zeros(zero_potential, [], wave_grid)
    pair = wave_operator_pair(zero_potential, projection, wave_grid)
    ugrid = UniformGrid(40.0, 2048)
    defects = semigroup_check(zero_potential, pair, wave_grid, ugrid, packet_basis(wave_grid, count=3))
    assert defects["semigroup"] < 1e-10
    assert defects["factorization"] < 1e-8
    assert defects["time_intertwining"] < 1e-8


def test_laplace_transform_of_evolution(weak_well, wave_grid):
    projection = projection_from_zeros(weak_well, [], wave_grid)
    vector = gaussian_packet(wave_grid.nodes, 8.0, 1.5, 0.0)
    defects = laplace_check(weak_well, projection, vector, 1j, wave_grid, UniformGrid(40.0, 2048))
    assert sorted(defects) == [4.0, 8.0, 16.0]
    assert defects[16.0] < 5e-2


def test_cook_tail_decays(weak_well, ugrid):
    start = gaussian_packet(ugrid.points, 6.0, 1.0, -1.0)
    tails = cook_tail(weak_well, start, ugrid)
    values = [tails[s] for s in sorted(tails)]
    assert all(value >= 0 for value in values)
    assert all(b <= a for a, b in zip(values[:-1], values[1:]))


def test_eigenfunction_rotates_in_phase(deep_well, deep_well_k0, long_grid):
    pair = eigenpair(deep_well, deep_well_k0, long_grid, residual_step=None)
    assert eigenmode_defect(deep_well, pair, UniformGrid(40.0, 4096)) < 1e-2


@pytest.mark.slow
def test_parseval_sides_are_positive(weak_well, wave_grid):
    vector = gaussian_packet(wave_grid.nodes, 6.0, 1.0, 1.0)
    result = parseval_check(weak_well, vector, wave_grid, UniformGrid(80.0, 4096), SpectralLattice())
    assert result["time_side"] > 0
    assert result["spectral_side"] > 0
    assert result["relative_gap"] < 0.2


@pytest.mark.slow
def test_nonstationary_ladders_of_weak_well(weak_well, scattering_grid):
    projection = projection_from_zeros(weak_well, [], scattering_grid)
    pair = wave_operator_pair(weak_well, projection, scattering_grid, method="spectral")
    ugrid = UniformGrid(200.0, 4096)

    def packet(x):
        # incoming, so every ladder time includes the scattering event
        return gaussian_packet(np.asarray(x, dtype=float), 16.0, 1.5, -3.0)

    for run, operator in ((nonstationary_W, pair.W), (nonstationary_Z, pair.Z)):
        result = run(weak_well, projection, operator, packet, scattering_grid, ugrid, dt=1e-3)
        assert result.times == [2.0, 4.0, 8.0, 16.0]
        assert result.monotone, result.defects
        assert result.final <= 1e-2


@pytest.mark.slow
def test_semigroup_checks_for_weak_well(weak_well, scattering_grid):
    projection = projection_from_zeros(weak_well, [], scattering_grid)
    pair = wave_operator_pair(weak_well, projection, scattering_grid, method="spectral")
    basis = band_basis(scattering_grid, count=3)
    defects = semigroup_check(weak_well, pair, scattering_grid, UniformGrid(80.0, 4096), basis, dt=1e-3)
    assert defects["semigroup"] < 1e-2
    assert defects["factorization"] < 1e-2
    assert defects["time_intertwining"] < 1e-2
