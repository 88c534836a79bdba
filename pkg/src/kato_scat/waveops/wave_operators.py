# src/kato_scat/waveops/wave_operators.py

import logging
from dataclasses import dataclass, field

import numpy as np

from kato_scat.errors import ConfigError, NearSingularity, QuadratureNotConverged
from kato_scat.jost.jost_solver import propagate
from kato_scat.opcalc.grid import Grid
from kato_scat.opcalc.operators import DiscretizedOperator, free_scaled, kernel_block
from kato_scat.opcalc.subspace import band_basis, restricted_norm
from kato_scat.parallel import parallel_map
from kato_scat.potential.potential import Potential
from kato_scat.riesz.projection import Projection
from kato_scat.waveops.lattice import SpectralLattice
from kato_scat.waveops.traces import SINGULAR_TOL

METHODS = ("forms", "spectral")
CHUNK = 32


@dataclass(eq=False)
class WaveOperatorPair:
    W: DiscretizedOperator
    Z: DiscretizedOperator
    projection: Projection
    method: str
    lattice: SpectralLattice
    diagnostics: dict = field(default_factory=dict)


def _support(potential: Potential, grid: Grid, cutoff: float = 1e-14) -> np.ndarray:
    values = np.abs(potential(grid.nodes))
    return np.flatnonzero(values > cutoff * max(values.max(), 1e-300))


def _chunks(count: int, size: int):
    return [np.arange(start, min(start + size, count)) for start in range(0, count, size)]


def singularity_gate(potential: Potential, grid: Grid, kappa: np.ndarray, threshold: float = SINGULAR_TOL):
    """
    Raises:
        NearSingularity: |e(kappa)| < threshold somewhere on the positive wavenumber lattice.
    """
    values = propagate(potential, kappa, [0.0], grid.x_max, mesh=grid.knots, regular=False).e_at_zero
    where = int(np.argmin(np.abs(values)))
    if abs(values[where]) < threshold:
        raise NearSingularity(f"|e(k)| = {abs(values[where]):.3e} at k = {kappa[where].real:.6f}: spectral singularity")
    return float(np.abs(values[where]))


def _form_integral(potential, grid, lattice, side, threads):
    """
    side "W": int R_V(l - i0) V R0(l + i0) dl;  side "Z": int R0(l - i0) V R_V(l + i0) dl.
    Only columns (rows) on the support of V enter the product.
    """
    nodes, w = grid.nodes, grid.weights
    support = _support(potential, grid)
    inner = potential(nodes[support]) * w[support]
    lams, dl, upper, lower = lattice.nodes()
    perturbed_k = lower if side == "W" else upper
    free_k = upper if side == "W" else lower

    def partial(index):
        batch = propagate(potential, perturbed_k[index], nodes, grid.x_max, mesh=grid.knots, allow_lower=True)
        total = np.zeros((nodes.size, nodes.size), dtype=complex)
        for j, m in enumerate(index):
            s_v, e_v, e0 = batch.s_scaled[j], batch.e_scaled[j], batch.e_at_zero[j]
            s_0, e_0 = free_scaled(free_k[m], nodes)
            if side == "W":
                left = kernel_block(s_v, e_v, nodes, s_v[support], e_v[support], nodes[support], perturbed_k[m], e0)
                right = kernel_block(s_0[support], e_0[support], nodes[support], s_0, e_0, nodes, free_k[m], 1.0)
            else:
                left = kernel_block(s_0, e_0, nodes, s_0[support], e_0[support], nodes[support], free_k[m], 1.0)
                right = kernel_block(s_v[support], e_v[support], nodes[support], s_v, e_v, nodes, perturbed_k[m], e0)
            total += (dl[m] * left * inner[None, :]) @ (right * w[None, :])
        return total

    parts = parallel_map(partial, _chunks(lams.size, CHUNK), threads)
    integral = np.zeros((nodes.size, nodes.size), dtype=complex)
    for part in parts:
        integral += part
    # |lambda| > Lambda: both resolvents behave like -1/lambda
    integral += np.diag(2.0 * potential(nodes) / lattice.big_lambda)
    return integral


class DistortedSineTransform:
    """
    Eigenfunction expansion of L on H_c from the regular solution:
        psi_minus(x, kappa) = kappa s(x, kappa) / e(-kappa),   chi(x, kappa) = kappa s(x, kappa) / e(kappa),
    paired with sin(kappa x) and the measure (2/pi) d kappa.
    """

    def __init__(self, potential: Potential, grid: Grid, lattice: SpectralLattice, threads: int = 1,
                 singular_tol: float = SINGULAR_TOL):
        self.grid = grid
        kappa, omega = lattice.kappa()
        self.kappa = kappa
        self.measure = 2 * omega / np.pi
        nodes = grid.nodes

        def solve(index):
            return propagate(potential, kappa[index], nodes, grid.x_max, mesh=grid.knots)

        batches = parallel_map(solve, _chunks(kappa.size, CHUNK * 4), threads)
        s_values = np.concatenate([batch.s_values() for batch in batches], axis=0)
        e_plus = np.concatenate([batch.e_at_zero for batch in batches])
        e_minus = propagate(potential, -kappa, [0.0], grid.x_max, mesh=grid.knots, regular=False,
                            allow_lower=True).e_at_zero
        smallest = float(np.min(np.abs(e_plus)))
        if smallest < singular_tol:
            raise NearSingularity(f"|e(k)| = {smallest:.3e} on the wavenumber lattice: spectral singularity")

        self.sine = np.sin(np.outer(nodes, kappa))
        self.psi_minus = (kappa[:, None] * s_values / e_minus[:, None]).T
        self.chi = (kappa[:, None] * s_values / e_plus[:, None]).T
        logging.info(f"Distorted sine transform: {kappa.size} wavenumbers, min |e(k)| = {smallest:.4g}")

    def W(self, complement: np.ndarray) -> np.ndarray:
        return complement @ ((self.psi_minus * self.measure[None, :]) @ (self.sine.T * self.grid.weights[None, :]))

    def Z(self, complement: np.ndarray) -> np.ndarray:
        return ((self.sine * self.measure[None, :]) @ (self.chi.T * self.grid.weights[None, :])) @ complement


def _forms_operator(potential, projection, grid, lattice, side, threads):
    """W = (I - P)(I - J / 2 pi i) and Z = (I + J / 2 pi i)(I - P), J the lattice integral of the side."""
    identity = np.eye(grid.size, dtype=complex)
    integral = _form_integral(potential, grid, lattice, side, threads)
    complement = projection.complement()
    if side == "W":
        return complement @ (identity - integral / (2j * np.pi))
    return (identity + integral / (2j * np.pi)) @ complement


def assemble(
    potential: Potential,
    projection: Projection,
    grid: Grid,
    side: str,
    lattice: SpectralLattice | None = None,
    method: str = "forms",
    threads: int = 1,
    check: bool = True,
    quad_tol: float = 1e-3,
    basis: np.ndarray | None = None,
) -> DiscretizedOperator:
    """
    W (side "W") or Z (side "Z") as a nodal matrix.

    "forms" evaluates the defining bilinear forms on the lattice; "spectral" builds the same
    operator from the distorted sine transform. With `check`, the forms are recomputed on the
    lattice with half the nodes and compared on the test subspace.

    Raises:
        NearSingularity: e(k) nearly vanishes for some real k on the lattice.
        QuadratureNotConverged: the lattice comparison moves the operator by more than quad_tol.
    """
    if method not in METHODS:
        raise ConfigError(f"unknown wave operator method '{method}'")
    lattice = lattice or SpectralLattice()
    if potential.is_zero:
        return DiscretizedOperator.identity(grid.weights, side)

    singularity_gate(potential, grid, lattice.kappa()[0])
    if method == "spectral":
        transform = DistortedSineTransform(potential, grid, lattice, threads)
        complement = projection.complement()
        matrix = transform.W(complement) if side == "W" else transform.Z(complement)
        return DiscretizedOperator(matrix, grid.weights, side)

    matrix = _forms_operator(potential, projection, grid, lattice, side, threads)
    if check:
        basis = band_basis(grid) if basis is None else basis
        coarse = _forms_operator(potential, projection, grid, lattice.coarsened(), side, threads)
        drift = restricted_norm(matrix - coarse, basis, grid.weights)
        logging.info(f"{side}: lattice halving moves the operator by {drift:.3e} on test vectors")
        if drift > quad_tol:
            raise QuadratureNotConverged(f"{side} moved by {drift:.3e} when the spectral lattice was halved")
    return DiscretizedOperator(matrix, grid.weights, side)


def assemble_W(potential, projection, grid, lattice=None, method="forms", **options) -> DiscretizedOperator:
    return assemble(potential, projection, grid, "W", lattice, method, **options)


def assemble_Z(potential, projection, grid, lattice=None, method="forms", **options) -> DiscretizedOperator:
    return assemble(potential, projection, grid, "Z", lattice, method, **options)


def wave_operator_pair(
    potential: Potential,
    projection: Projection,
    grid: Grid,
    lattice: SpectralLattice | None = None,
    method: str = "forms",
    **options,
) -> WaveOperatorPair:
    lattice = lattice or SpectralLattice()
    w_op = assemble_W(potential, projection, grid, lattice, method, **options)
    z_op = assemble_Z(potential, projection, grid, lattice, method, **options)
    return WaveOperatorPair(W=w_op, Z=z_op, projection=projection, method=method, lattice=lattice)
