# tests/test_riesz.py

import numpy as np
import pytest

from kato_scat.errors import ConfigError, JordanBlockDetected, MultiplicityAboveOne
from kato_scat.opcalc.grid import Grid
from kato_scat.opcalc.subspace import packet_basis
from kato_scat.riesz.projection import (
    Projection,
    commutator,
    commutator_identity_check,
    contour_nodes,
    eigenpair,
    lp_commutation_defect,
    projection_contour,
    projection_from_zeros,
    projection_rank1,
)
from kato_scat.spectrum.zeros import EigenK


@pytest.fixture
def deep_projection(deep_well, deep_well_k0, long_grid):
    return projection_from_zeros(deep_well, [EigenK(deep_well_k0, 1, 0.0)], long_grid)


def test_norming_constant_matches_closed_form(deep_well, deep_well_k0, long_grid):
    pair = eigenpair(deep_well, deep_well_k0, long_grid)
    assert pair.norming == pytest.approx(pair.norming_exact, rel=1e-8)
    assert pair.mu == pytest.approx(deep_well_k0 ** 2)
    assert pair.residual < 1e-4
    np.testing.assert_allclose(pair.g, np.conj(pair.f))


def test_rank_one_projection_is_idempotent(deep_projection):
    assert deep_projection.rank == 1
    assert deep_projection.trace() == pytest.approx(1.0, abs=1e-7)
    assert deep_projection.idempotence_defect() < 1e-7
    leftover = deep_projection.matrix @ deep_projection.complement()
    assert np.max(np.abs(leftover)) < 1e-7


def test_contour_projection_agrees_with_rank_one(deep_well, deep_well_k0, long_grid, deep_projection):
    contour = projection_contour(deep_well, [deep_well_k0 ** 2], long_grid, n_quad=128)
    assert contour.rank == 1
    assert deep_projection.distance(contour) < 1e-6


def test_square_contour_agrees_with_circle(deep_well, deep_well_k0, long_grid):
    circle = projection_contour(deep_well, [deep_well_k0 ** 2], long_grid, n_quad=128)
    square = projection_contour(deep_well, [deep_well_k0 ** 2], long_grid, shape="square", n_quad=128)
    assert circle.distance(square) < 1e-6


@pytest.mark.parametrize("shape", ["circle", "square"])
def test_contour_nodes_wind_once(shape):
    center = -0.5 + 0.2j
    points, weights = contour_nodes(center, 0.1, shape, 128)
    assert np.sum(weights / (points - center)) == pytest.approx(2j * np.pi, rel=1e-10)


def test_unknown_contour_shape():
    with pytest.raises(ConfigError):
        contour_nodes(0j, 1.0, "ellipse", 16)


def test_contour_may_not_touch_continuous_spectrum(deep_well, deep_well_k0, long_grid):
    with pytest.raises(ConfigError):
        projection_contour(deep_well, [deep_well_k0 ** 2], long_grid, radius=0.1)


def test_projection_commutes_with_operator(deep_well, deep_well_k0):
    grid = Grid.build(40.0, 800, [1.0])
    projection = projection_from_zeros(deep_well, [EigenK(deep_well_k0, 1, 0.0)], grid)
    assert lp_commutation_defect(deep_well, projection, grid, packet_basis(grid)) < 1e-6


def test_empty_projection_without_eigenvalues(weak_well, long_grid):
    projection = projection_from_zeros(weak_well, [], long_grid)
    assert projection.rank == 0
    assert np.all(projection.matrix == 0)
    assert projection_contour(weak_well, [], long_grid).rank == 0
    ladder = commutator_identity_check(weak_well, projection, long_grid)
    assert ladder.subspace_defects == [0.0] * 5
    assert ladder.subspace_rank == 6


def test_multiple_zero_refused(deep_well, deep_well_k0, long_grid):
    with pytest.raises(MultiplicityAboveOne):
        projection_from_zeros(deep_well, [EigenK(deep_well_k0, 2, 0.0)], long_grid)


def test_repeated_eigenpair_refused(deep_well, deep_well_k0, long_grid):
    pair = eigenpair(deep_well, deep_well_k0, long_grid, residual_step=None)
    with pytest.raises(JordanBlockDetected):
        projection_rank1([pair, pair], long_grid)


def test_commutator_from_polar_factors(deep_projection, deep_well, long_grid):
    direct = commutator(deep_well, deep_projection, long_grid)
    factored = commutator(deep_well, deep_projection, long_grid, factored=True)
    np.testing.assert_allclose(factored, direct, atol=1e-12)


def test_empty_projection_shape(short_grid):
    empty = Projection.empty(short_grid)
    assert empty.matrix.shape == (short_grid.size, short_grid.size)
    assert empty.idempotence_defect() == 0.0


@pytest.mark.slow
def test_commutator_identity_ladder(deep_well, deep_well_k0, wave_grid):
    projection = projection_from_zeros(deep_well, [EigenK(deep_well_k0, 1, 0.0)], wave_grid)
    ladder = commutator_identity_check(deep_well, projection, wave_grid)
    # six packets and the eigenfunction
    assert ladder.subspace_rank == 7
    assert ladder.decreasing
    assert ladder.final <= 5e-2 * ladder.p_norm
