# tests/test_opcalc.py

import numpy as np
import pytest

from kato_scat.errors import AtEigenvalue, ConfigError, TooCloseToContinuousSpectrum
from kato_scat.jost.jost_solver import default_grid, jost_function
from kato_scat.opcalc.determinant import (
    cauchy_riemann_defect,
    fredholm_det,
    ordering_defect,
    support_grid,
    trace_defect,
)
from kato_scat.opcalc.grid import Grid
from kato_scat.opcalc.operators import DiscretizedOperator, resolvent_kernel, spectral_k
from kato_scat.opcalc.probes import (
    free_bound_probe,
    free_resolvent_fd_defect,
    resolvent_identity_defect,
    weighted_bound_probe,
)
from kato_scat.opcalc.subspace import band_basis, packet_basis
from kato_scat.potential.potential import Potential


def test_grid_layout():
    grid = Grid.build(5.0, 100, [1.0, 2.5])
    assert grid.size == 100
    assert grid.weights.sum() == pytest.approx(5.0, rel=1e-13)
    assert {1.0, 2.5} <= set(grid.panel_edges.tolist())
    assert np.all(np.diff(grid.nodes) > 0)
    refined = grid.refined()
    assert refined.size == 2 * grid.size
    assert refined.weights.sum() == pytest.approx(5.0, rel=1e-13)


def test_grid_integrates_polynomials_exactly():
    grid = Grid.build(3.0, 60)
    assert np.sum(grid.weights * grid.nodes ** 5) == pytest.approx(3.0 ** 6 / 6, rel=1e-13)


@pytest.mark.parametrize("x_max, n_nodes", [(0.0, 100), (-1.0, 100), (1.0, 5)])
def test_grid_rejects_bad_sizes(x_max, n_nodes):
    with pytest.raises(ConfigError):
        Grid.build(x_max, n_nodes)


def test_spectral_branch():
    assert spectral_k(-1.0) == pytest.approx(1j)
    assert spectral_k(4.0 + 1e-12j).real == pytest.approx(2.0)
    for lam in (1 + 1j, -3 - 0.5j, 2 - 1j):
        k = spectral_k(lam)
        assert k.imag >= 0
        assert k ** 2 == pytest.approx(lam)


def test_determinant_matches_jost_function(deep_well):
    k = 1j
    result = fredholm_det(deep_well, k, n_nodes=600)
    jost = jost_function(deep_well, k)
    assert abs(result.extrapolated - jost) / abs(jost) < 1e-4
    assert result.error_estimate < 1e-4


def test_determinant_of_zero_potential(zero_potential):
    assert fredholm_det(zero_potential, 1j).extrapolated == 1


def test_determinant_needs_upper_half_plane(deep_well):
    with pytest.raises(ConfigError):
        fredholm_det(deep_well, 1.0)


def test_determinant_identities(deep_well):
    grid = support_grid(deep_well, 200)
    k = 1 + 0.5j
    assert ordering_defect(deep_well, k, grid) < 1e-10
    assert trace_defect(deep_well, k, grid) < 1e-5
    assert cauchy_riemann_defect(deep_well, k, grid) < 1e-5


@pytest.mark.slow
@pytest.mark.parametrize("potential, tol", [
    (Potential.step(-3.0, 1.0), 1e-6),
    (Potential.exponential(-2.0, 1.0), 1e-5),
])
def test_determinant_on_fine_grid(potential, tol):
    for k in (0.5j, 1j, 2j, 1 + 1j):
        jost = jost_function(potential, k)
        result = fredholm_det(potential, k, n_nodes=2000)
        assert abs(result.extrapolated - jost) / abs(jost) < tol


def test_resolvent_bounds_hold(weak_well, upper_ks):
    grid = default_grid(weak_well, 200)
    for sample in weighted_bound_probe(weak_well, upper_ks, grid) + free_bound_probe(weak_well, upper_ks, grid):
        assert sample.holds, sample


def test_resolvent_identity(deep_well):
    grid = Grid.build(10.0, 400, [1.0])
    assert resolvent_identity_defect(deep_well, 1 + 1j, grid) < 1e-3


def test_free_resolvent_inverts_laplacian():
    assert free_resolvent_fd_defect(-1.0, 10.0, 400) < 1e-2


def test_resolvent_guards(deep_well, deep_well_k0, short_grid):
    with pytest.raises(TooCloseToContinuousSpectrum):
        resolvent_kernel(deep_well, 0.5 + 1e-5j, short_grid)
    with pytest.raises(AtEigenvalue):
        resolvent_kernel(deep_well, deep_well_k0 ** 2, short_grid)


def test_adjoint_in_weighted_metric(short_grid, rng):
    matrix = rng.normal(size=(short_grid.size, short_grid.size)) + 1j * rng.normal(size=(short_grid.size, short_grid.size))
    operator = DiscretizedOperator(matrix, short_grid.weights)
    f = rng.normal(size=short_grid.size) + 0j
    g = rng.normal(size=short_grid.size) + 0j
    left = short_grid.inner(operator.apply(f), g)
    right = short_grid.inner(f, operator.adjoint().apply(g))
    assert left == pytest.approx(right, rel=1e-10)


def test_packet_basis_is_orthonormal(wave_grid):
    basis = packet_basis(wave_grid)
    gram = np.conj(basis.T) @ (wave_grid.weights[:, None] * basis)
    np.testing.assert_allclose(gram, np.eye(basis.shape[1]), atol=1e-10)


def test_packet_basis_needs_room():
    with pytest.raises(ConfigError):
        packet_basis(Grid.build(1.0, 40), width=0.5)


def test_band_basis_has_no_low_wavenumbers(scattering_grid):
    basis = band_basis(scattering_grid)
    gram = np.conj(basis.T) @ (scattering_grid.weights[:, None] * basis)
    np.testing.assert_allclose(gram, np.eye(basis.shape[1]), atol=1e-10)
    kappa = np.linspace(0.0, 0.25, 6)
    sine = np.sin(np.outer(kappa, scattering_grid.nodes)) * scattering_grid.weights[None, :]
    assert np.max(np.abs(sine @ basis)) < 1e-4
    assert np.max(np.abs(sine @ packet_basis(scattering_grid))) > 1e-2


def test_operator_sum_and_difference(short_grid, rng):
    size = short_grid.size
    first = DiscretizedOperator(rng.normal(size=(size, size)) + 0j, short_grid.weights, "A")
    second = DiscretizedOperator(rng.normal(size=(size, size)) + 0j, short_grid.weights, "B")
    total = first + second
    assert total.label == "(A + B)"
    np.testing.assert_allclose(total.matrix, first.matrix + second.matrix)
    np.testing.assert_allclose((total - second).matrix, first.matrix, atol=1e-12)
