# src/kato_scat/opcalc/determinant.py

import logging
from dataclasses import dataclass

import numpy as np

from kato_scat.errors import ConfigError, QuadratureNotConverged
from kato_scat.opcalc.grid import Grid
from kato_scat.opcalc.operators import free_scaled, kernel_from_scaled
from kato_scat.potential.potential import Potential, factorize


@dataclass(frozen=True)
class DeterminantResult:
    k: complex
    value: complex
    refined: complex
    extrapolated: complex
    error_estimate: float
    nodes: int


def support_grid(potential: Potential, n_nodes: int, order: int = 10) -> Grid:
    """Panels covering the effective support [0, X_V] of V."""
    return Grid.build(max(potential.support_hint(), 1e-3), n_nodes, potential.breakpoints(), order)


def determinant_matrix(potential: Potential, k: complex, grid: Grid, symmetrized: bool = True) -> np.ndarray:
    """
    Discretization of A R0(k^2) B*.

    symmetrized=True gives W^{1/2} K W^{1/2}; otherwise the row form K W. Both have the same
    determinant, K[i, j] = a(x_i) R0(x_i, x_j) conj(b(x_j)).
    """
    factors = factorize(potential)
    keep = np.abs(potential(grid.nodes)) > 0
    nodes = grid.nodes[keep]
    weights = grid.weights[keep]
    s_scaled, e_scaled = free_scaled(k, nodes)
    kernel = kernel_from_scaled(s_scaled, e_scaled, k, nodes, 1.0)
    kernel = factors.a(nodes)[:, None] * kernel * np.conj(factors.b(nodes))[None, :]
    if symmetrized:
        root = np.sqrt(weights)
        return root[:, None] * kernel * root[None, :]
    return kernel * weights[None, :]


def _det(potential, k, grid, symmetrized=True):
    matrix = determinant_matrix(potential, k, grid, symmetrized)
    return complex(np.linalg.det(np.eye(matrix.shape[0]) + matrix))


def fredholm_det(
    potential: Potential,
    k: complex,
    n_nodes: int = 2000,
    tol: float = 1e-4,
    grid: Grid | None = None,
) -> DeterminantResult:
    """
    det(I + A R0(k^2) B*) on N support nodes, with the value on 2N nodes as refinement check.

    Raises:
        QuadratureNotConverged: N and 2N values differ by more than tol relative.
    """
    k = complex(k)
    if k.imag <= 0:
        raise ConfigError(f"determinant needs Im k > 0, got k = {k}")
    if potential.is_zero:
        return DeterminantResult(k, 1 + 0j, 1 + 0j, 1 + 0j, 0.0, 0)

    grid = grid or support_grid(potential, n_nodes)
    value = _det(potential, k, grid)
    refined = _det(potential, k, grid.refined())
    error = abs(refined - value)
    extrapolated = (4 * refined - value) / 3
    logging.debug(f"det(I + Q0) at k = {k}: N -> {value:.12g}, 2N -> {refined:.12g}")
    if error > tol * max(1.0, abs(refined)):
        raise QuadratureNotConverged(f"determinant moved by {error:.3e} under grid doubling at k = {k}")
    return DeterminantResult(k, value, refined, extrapolated, float(error), grid.size)


def convergence_order(potential: Potential, k: complex, reference: complex, n_nodes: int) -> float:
    """log2 of the error ratio between N and 2N nodes against a trusted reference value."""
    grid = support_grid(potential, n_nodes)
    coarse = abs(_det(potential, k, grid) - reference)
    fine = abs(_det(potential, k, grid.refined()) - reference)
    if fine == 0:
        return float("inf")
    return float(np.log2(coarse / fine))


def ordering_defect(potential: Potential, k: complex, grid: Grid) -> float:
    """Row form against symmetrized form of the same determinant."""
    return abs(_det(potential, k, grid, symmetrized=False) - _det(potential, k, grid, symmetrized=True))


def trace_defect(potential: Potential, k: complex, grid: Grid, eps: float = 1e-6) -> float:
    """|d/de det(I + e M) at 0 - trace M| by a central difference."""
    matrix = determinant_matrix(potential, k, grid)
    identity = np.eye(matrix.shape[0])
    slope = (np.linalg.det(identity + eps * matrix) - np.linalg.det(identity - eps * matrix)) / (2 * eps)
    return float(abs(slope - np.trace(matrix)))


def cauchy_riemann_defect(potential: Potential, k: complex, grid: Grid, h: float = 1e-4) -> float:
    """Relative residual of d/dy = i d/dx for k -> det on a small stencil around k."""
    k = complex(k)
    if k.imag <= h:
        raise ConfigError("stencil must stay in the upper half-plane")
    dx = (_det(potential, k + h, grid) - _det(potential, k - h, grid)) / (2 * h)
    dy = (_det(potential, k + 1j * h, grid) - _det(potential, k - 1j * h, grid)) / (2 * h)
    return float(abs(dy - 1j * dx) / max(abs(dx), 1e-12))
