# src/kato_scat/waveops/traces.py

import logging
from dataclasses import dataclass

import numpy as np

from kato_scat.errors import ConfigError, NearSingularity
from kato_scat.jost.jost_solver import propagate
from kato_scat.opcalc.grid import Grid
from kato_scat.opcalc.operators import free_scaled, kernel_from_scaled, spectral_k
from kato_scat.parallel import parallel_map
from kato_scat.potential.potential import Potential, factorize
from kato_scat.waveops.lattice import SpectralLattice

TRACE_KINDS = ("A_R0", "A_RV", "B_R0*", "B_RV*")
SINGULAR_TOL = 1e-3
HARDY_LADDER = (0.2, 0.1, 0.05, 0.025)


def trace_wavenumber(lam: float, eps: float = 0.0) -> complex:
    """k with k^2 = lambda + i eps, Im k >= 0; eps = 0 on lambda > 0 gives the limit from above."""
    if eps == 0.0 and lam > 0:
        return complex(np.sqrt(lam))
    return spectral_k(lam + 1j * eps)


def _resolvent_apply(potential: Potential, k: complex, vector: np.ndarray, grid: Grid, perturbed: bool,
                     singular_tol: float) -> np.ndarray:
    nodes = grid.nodes
    if perturbed and not potential.is_zero:
        batch = propagate(potential, [k], nodes, grid.x_max, mesh=grid.knots)
        e0 = complex(batch.e_at_zero[0])
        if abs(e0) < singular_tol:
            raise NearSingularity(f"|e(k)| = {abs(e0):.3e} at k = {k}")
        kernel = kernel_from_scaled(batch.s_scaled[0], batch.e_scaled[0], k, nodes, e0)
    else:
        kernel = kernel_from_scaled(*free_scaled(k, nodes), k, nodes, 1.0)
    return kernel @ (grid.weights * vector)


def boundary_trace(
    potential: Potential,
    vector: np.ndarray,
    which: str,
    lam: float,
    grid: Grid,
    projection=None,
    eps: float = 0.0,
    singular_tol: float = SINGULAR_TOL,
) -> np.ndarray:
    """
    One of A R0(lambda + i0) phi, A R_V(lambda + i0)(I - P) phi, B R0(lambda + i0) psi or
    B R_V*(lambda + i0)(I - P*) psi at grid nodes; eps > 0 evaluates at lambda + i eps instead.
    R_V* is the resolvent of the operator with potential conj(V).

    Raises:
        NearSingularity: |e(k)| < singular_tol at the requested point.
    """
    if which not in TRACE_KINDS:
        raise ConfigError(f"unknown trace '{which}', expected one of {TRACE_KINDS}")
    pair = factorize(potential)
    factor = pair.a(grid.nodes) if which.startswith("A") else pair.b(grid.nodes)
    if potential.is_zero:
        return np.zeros(grid.size, dtype=complex)

    k = trace_wavenumber(lam, eps)
    vector = np.asarray(vector, dtype=complex)
    if which == "A_RV":
        if projection is not None:
            vector = vector - projection.matrix @ vector
        return factor * _resolvent_apply(potential, k, vector, grid, True, singular_tol)
    if which == "B_RV*":
        if projection is not None:
            vector = vector - projection.adjoint() @ vector
        return factor * _resolvent_apply(potential.conjugate(), k, vector, grid, True, singular_tol)
    return factor * _resolvent_apply(potential, k, vector, grid, False, singular_tol)


def trace_table(potential, vector, which, grid, lattice: SpectralLattice, projection=None, eps: float = 0.0,
                threads: int = 1) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Traces at every lattice node: (lambda, d lambda, rows of trace values)."""
    lams, weights, _, _ = lattice.nodes()

    def one(lam):
        return boundary_trace(potential, vector, which, float(lam), grid, projection, eps)

    values = np.stack(parallel_map(one, lams, threads))
    return lams, weights, values


def trace_energy(grid: Grid, weights: np.ndarray, values: np.ndarray) -> float:
    """int || trace(lambda) ||^2 d lambda over the lattice."""
    per_lambda = np.sum(grid.weights[None, :] * np.abs(values) ** 2, axis=1)
    return float(np.sum(weights * per_lambda))


@dataclass
class HardyLadder:
    eps: list
    energies: list
    mean_square_steps: list

    @property
    def stable(self) -> bool:
        """The two smallest eps give energies within 10% of each other."""
        last, before = self.energies[-1], self.energies[-2]
        return abs(last - before) <= 0.1 * max(abs(before), 1e-300)

    @property
    def mean_square_decreasing(self) -> bool:
        steps = self.mean_square_steps
        return all(b < a for a, b in zip(steps[:-1], steps[1:]))


def hardy_ladder(
    potential: Potential,
    vector: np.ndarray,
    which: str,
    grid: Grid,
    lattice: SpectralLattice,
    eps_ladder=HARDY_LADDER,
    projection=None,
    threads: int = 1,
) -> HardyLadder:
    """
    Energies int ||trace(lambda + i eps)||^2 d lambda along a halving eps ladder, and the
    L2(d lambda) distance between traces at consecutive rungs.
    """
    energies, steps = [], []
    previous = None
    for eps in eps_ladder:
        _, weights, values = trace_table(potential, vector, which, grid, lattice, projection, eps, threads)
        energies.append(trace_energy(grid, weights, values))
        if previous is not None:
            steps.append(float(np.sqrt(trace_energy(grid, weights, values - previous))))
        previous = values
        logging.info(f"Hardy ladder {which}: eps = {eps:g}, energy = {energies[-1]:.6g}")
    return HardyLadder(list(eps_ladder), energies, steps)
