# src/kato_scat/riesz/projection.py

import logging
from dataclasses import dataclass, field

import numpy as np

from kato_scat.errors import (
    ConfigError,
    JordanBlockDetected,
    MultiplicityAboveOne,
    QuadratureNotConverged,
    ZeroOnContour,
)
from kato_scat.jost.jost_solver import jost_data, norming_integral, ode_residual, propagate
from kato_scat.opcalc.grid import Grid
from kato_scat.opcalc.operators import (
    DiscretizedOperator,
    distance_to_half_line,
    free_scaled,
    kernel_from_scaled,
    spectral_k,
)
from kato_scat.opcalc.subspace import gaussian_packet, orthonormalize
from kato_scat.parallel import parallel_map
from kato_scat.potential.potential import Potential, factorize

JORDAN_TOL = 1e-8
EPS_LADDER = (0.2, 0.1, 0.05, 0.025, 0.0125)


@dataclass(eq=False)
class Eigenpair:
    """
    Simple eigenvalue mu = k0^2 with eigenfunction f = e(., k0) of L and g = conj(f) of L*.
    `norming` is the quadrature value of int f^2 (tail added analytically), `norming_exact`
    the closed form -e'(k0) e_x(0, k0) / (2 k0).
    """

    k0: complex
    f: np.ndarray
    g: np.ndarray
    norming: complex
    norming_exact: complex
    residual: float = float("nan")
    adjoint_residual: float = float("nan")

    @property
    def mu(self) -> complex:
        return self.k0 ** 2


@dataclass(eq=False)
class Projection:
    operator: DiscretizedOperator
    rank: int
    source: str
    pairs: list = field(default_factory=list)

    @property
    def matrix(self) -> np.ndarray:
        return self.operator.matrix

    @property
    def weights(self) -> np.ndarray:
        return self.operator.weights

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def idempotence_defect(self) -> float:
        return DiscretizedOperator(self.matrix @ self.matrix - self.matrix, self.weights).norm()

    def adjoint(self) -> np.ndarray:
        return self.operator.adjoint().matrix

    def complement(self) -> np.ndarray:
        return np.eye(self.matrix.shape[0]) - self.matrix

    def distance(self, other: "Projection") -> float:
        return DiscretizedOperator(self.matrix - other.matrix, self.weights).norm()

    @classmethod
    def empty(cls, grid: Grid, source: str = "rank1") -> "Projection":
        zero = np.zeros((grid.size, grid.size), dtype=complex)
        return cls(DiscretizedOperator(zero, grid.weights, "P"), 0, source)


def eigenpair(potential: Potential, k0: complex, grid: Grid, jordan_tol: float = JORDAN_TOL,
              residual_step: float | None = 1e-3) -> Eigenpair:
    """
    Raises:
        JordanBlockDetected: |int f^2| < jordan_tol ||f||^2, the zero of e is not simple.
    """
    k0 = complex(k0)
    data = jost_data(potential, k0, grid)
    f = data.e_values
    # int_X^inf e^{2 i k0 x} dx for the free tail beyond the grid
    tail = -np.exp(2j * k0 * grid.x_max) / (2j * k0)
    norming = complex(np.sum(grid.weights * f ** 2) + tail)
    exact = complex(norming_integral(data))
    size = grid.norm(f) ** 2
    if abs(norming) < jordan_tol * size:
        raise JordanBlockDetected(f"norming constant {abs(norming):.3e} vanishes at k0 = {k0}")

    pair = Eigenpair(k0=k0, f=f, g=np.conj(f), norming=norming, norming_exact=exact)
    if residual_step:
        reach = min(grid.x_max, potential.support_hint() + 10.0)
        pair.residual = ode_residual(potential, k0, reach, residual_step)[0]
        pair.adjoint_residual = ode_residual(potential.conjugate(), -np.conj(k0), reach, residual_step)[0]
    logging.info(f"Eigenpair mu = {pair.mu:.10g}: c = {norming:.10g} (closed form {exact:.10g})")
    return pair


def projection_rank1(pairs: list, grid: Grid) -> Projection:
    """P = sum over eigenvalues of (., g) f / c."""
    mus = [pair.mu for pair in pairs]
    for i, mu in enumerate(mus):
        if any(abs(mu - other) < 1e-12 * max(1.0, abs(mu)) for other in mus[i + 1:]):
            raise JordanBlockDetected(f"eigenvalue {mu} listed twice")
    matrix = np.zeros((grid.size, grid.size), dtype=complex)
    for pair in pairs:
        matrix += np.outer(pair.f, np.conj(pair.g) * grid.weights) / pair.norming
    return Projection(DiscretizedOperator(matrix, grid.weights, "P"), len(pairs), "rank1", list(pairs))


def projection_from_zeros(potential: Potential, zeros: list, grid: Grid) -> Projection:
    """Rank-one projection for a list of EigenK records; refuses multiple zeros."""
    for zero in zeros:
        if zero.multiplicity > 1:
            raise MultiplicityAboveOne(f"zero {zero.k0} has multiplicity {zero.multiplicity}")
    if not zeros:
        return Projection.empty(grid)
    return projection_rank1([eigenpair(potential, zero.k0, grid) for zero in zeros], grid)


def default_radius(mus: list, index: int) -> float:
    mu = mus[index]
    reach = distance_to_half_line(mu)
    for j, other in enumerate(mus):
        if j != index:
            reach = min(reach, abs(mu - other))
    return 0.5 * reach


def contour_nodes(center: complex, radius: float, shape: str, n_quad: int):
    """Points on the closed curve and the weights of sum R(lambda_m) w_m ~ contour integral of R."""
    if shape == "circle":
        theta = 2 * np.pi * np.arange(n_quad) / n_quad
        points = center + radius * np.exp(1j * theta)
        weights = 1j * radius * np.exp(1j * theta) * 2 * np.pi / n_quad
        return points, weights
    if shape == "square":
        half = 0.7 * radius
        per_side = max(n_quad // 4, 2)
        t, w = np.polynomial.legendre.leggauss(per_side)
        corners = center + half * np.array([-1 - 1j, 1 - 1j, 1 + 1j, -1 + 1j, -1 - 1j])
        points, weights = [], []
        for start, end in zip(corners[:-1], corners[1:]):
            points.append((start + end) / 2 + (end - start) / 2 * t)
            weights.append((end - start) / 2 * w)
        return np.concatenate(points), np.concatenate(weights)
    raise ConfigError(f"unknown contour shape '{shape}'")


def _contour_sum(potential, grid, points, weights, zero_threshold):
    ks = np.array([spectral_k(lam) for lam in points])
    batch = propagate(potential, ks, grid.nodes, grid.x_max, mesh=grid.knots)
    if np.min(np.abs(batch.e_at_zero)) < zero_threshold:
        raise ZeroOnContour(f"|e| = {np.min(np.abs(batch.e_at_zero)):.3e} on the projection contour")
    total = np.zeros((grid.size, grid.size), dtype=complex)
    for m in range(ks.size):
        total += weights[m] * kernel_from_scaled(batch.s_scaled[m], batch.e_scaled[m], ks[m], grid.nodes,
                                                 batch.e_at_zero[m])
    return -total / (2j * np.pi) * grid.weights[None, :]


def projection_contour(
    potential: Potential,
    eigenvalues: list,
    grid: Grid,
    shape: str = "circle",
    radius: float | None = None,
    n_quad: int = 64,
    tol: float = 1e-8,
    zero_threshold: float = 1e-8,
) -> Projection:
    """
    P = -(1/2 pi i) contour integral of R_V over small curves around each eigenvalue.

    Raises:
        ZeroOnContour: the curve passes through a zero of e.
        QuadratureNotConverged: halving the number of nodes moves P by more than tol ||P||.
    """
    if not eigenvalues or potential.is_zero:
        return Projection.empty(grid, "contour")

    coarse = np.zeros((grid.size, grid.size), dtype=complex)
    fine = np.zeros((grid.size, grid.size), dtype=complex)
    for index, mu in enumerate(eigenvalues):
        r = radius or default_radius(list(eigenvalues), index)
        if r >= distance_to_half_line(mu):
            raise ConfigError(f"contour of radius {r} around {mu} would cross the continuous spectrum")
        points, weights = contour_nodes(mu, r, shape, n_quad)
        fine += _contour_sum(potential, grid, points, weights, zero_threshold)
        points, weights = contour_nodes(mu, r, shape, n_quad // 2)
        coarse += _contour_sum(potential, grid, points, weights, zero_threshold)

    operator = DiscretizedOperator(fine, grid.weights, "P")
    change = DiscretizedOperator(fine - coarse, grid.weights).norm()
    if change > tol * max(operator.norm(), 1.0):
        raise QuadratureNotConverged(f"projection moved by {change:.3e} when the contour nodes doubled")
    return Projection(operator, int(round(np.trace(fine).real)), "contour")


def lp_commutation_defect(potential: Potential, projection: Projection, grid: Grid, basis: np.ndarray) -> float:
    """||(L_h P - P L_h) Q|| relative to ||L_h P Q|| + ||P L_h Q|| on a test basis Q."""
    operator = -grid.second_derivative + np.diag(potential(grid.nodes))
    root = np.sqrt(grid.weights)
    left = operator @ (projection.matrix @ basis)
    right = projection.matrix @ (operator @ basis)
    scale = np.linalg.norm(root[:, None] * left, 2) + np.linalg.norm(root[:, None] * right, 2)
    if scale == 0:
        return 0.0
    return float(np.linalg.norm(root[:, None] * (left - right), 2) / scale)


def eigen_action(pair: Eigenpair, t: float) -> np.ndarray:
    """e^{itL} f = e^{it mu} f for the eigenfunction of a simple eigenvalue."""
    return np.exp(1j * t * pair.mu) * pair.f


def commutator(potential: Potential, projection: Projection, grid: Grid, factored: bool = False) -> np.ndarray:
    """[P, V] as a nodal matrix; `factored` builds V as conj(b) a from the polar factors."""
    if factored:
        pair = factorize(potential)
        values = np.conj(pair.b(grid.nodes)) * pair.a(grid.nodes)
    else:
        values = potential(grid.nodes)
    return projection.matrix * values[None, :] - values[:, None] * projection.matrix


@dataclass
class CommutatorLadder:
    """D(eps) compressed to a test subspace of `subspace_rank` weighted-orthonormal vectors."""

    eps: list
    subspace_defects: list
    subspace_rank: int
    p_norm: float
    big_lambda: float

    @property
    def final(self) -> float:
        return self.subspace_defects[-1]

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.subspace_defects[:-1], self.subspace_defects[1:]))


def _spectral_lattice(eps: float, big_lambda: float, order: int):
    """
    Nodes and weights for int_{-Lambda}^{Lambda} d lambda: lambda = kappa^2 on the right,
    lambda = -u^2 on the left, Gauss panels graded towards the threshold.
    """
    reach = float(np.sqrt(big_lambda))
    graded = np.geomspace(np.sqrt(eps) / 16, 1.0, 10)
    t, w = np.polynomial.legendre.leggauss(order)
    lams, weights = [], []
    for sign, step in ((1.0, 0.1), (-1.0, 0.25)):
        edges = np.union1d(np.concatenate([[0.0], graded, np.arange(1.0, reach, step)]), [reach])
        half = np.diff(edges)[:, None] / 2
        mid = (edges[:-1] + edges[1:])[:, None] / 2
        s = (mid + half * t[None, :]).ravel()
        ws = (half * w[None, :]).ravel()
        lams.append(sign * s ** 2)
        weights.append(2 * s * ws)
    return np.concatenate(lams), np.concatenate(weights)


def commutator_basis(grid: Grid, projection: Projection, count: int = 6) -> np.ndarray:
    """Packets near the origin plus the eigenfunctions, so the form sees the range of P."""
    reach = min(8.0, 0.4 * grid.x_max)
    columns = [gaussian_packet(grid.nodes, c, 0.6, float(j % 2)) for j, c in enumerate(np.linspace(1.5, reach, count))]
    columns += [pair.f for pair in projection.pairs]
    return orthonormalize(np.stack(columns, axis=1), grid.weights)


def _commutator_form(grid, comm, basis, eps, big_lambda, order, threads):
    nodes, w = grid.nodes, grid.weights
    lams, dl = _spectral_lattice(eps, big_lambda, order)

    def contribution(lam):
        k = spectral_k(lam + 1j * eps)
        s_scaled, e_scaled = free_scaled(k, nodes)
        kernel = kernel_from_scaled(s_scaled, e_scaled, k, nodes, 1.0)
        # the free kernel at conj(z) is the conjugate of the kernel at z
        right = (kernel * w[None, :]) @ basis
        left = (np.conj(kernel) * w[None, :]) @ (comm @ right)
        return np.conj(basis.T) @ (w[:, None] * left)

    parts = parallel_map(contribution, lams, threads)
    total = np.zeros((basis.shape[1], basis.shape[1]), dtype=complex)
    for weight, part in zip(dl, parts):
        total += weight * part
    tail = (2.0 / big_lambda) * (np.conj(basis.T) @ (w[:, None] * (comm @ basis)))
    return (total + tail) / (2j * np.pi)


def commutator_identity_check(
    potential: Potential,
    projection: Projection,
    grid: Grid,
    eps_ladder=EPS_LADDER,
    big_lambda: float = 100.0,
    basis: np.ndarray | None = None,
    order: int = 10,
    quad_tol: float = 1e-3,
    threads: int = 1,
) -> CommutatorLadder:
    """
    D(eps) = || (1/2 pi i) int R0(l - i eps) [P, V] R0(l + i eps) dl - P || along the eps ladder,
    measured as a bilinear form on the span of `basis`, not as the full nodal operator norm.
    Integrand beyond |l| > Lambda is taken as [P, V] / l^2.

    Raises:
        QuadratureNotConverged: the order and order/2 Gauss rules disagree by more than quad_tol ||P||.
    """
    basis = commutator_basis(grid, projection) if basis is None else basis
    comm = commutator(potential, projection, grid)
    target = np.conj(basis.T) @ (grid.weights[:, None] * (projection.matrix @ basis))
    p_norm = max(projection.operator.norm(), 1e-300)

    defects = []
    for eps in eps_ladder:
        if projection.rank == 0:
            defects.append(0.0)
            continue
        fine = _commutator_form(grid, comm, basis, eps, big_lambda, order, threads)
        coarse = _commutator_form(grid, comm, basis, eps, big_lambda, order // 2, threads)
        drift = float(np.linalg.norm(fine - coarse, 2))
        if drift > quad_tol * p_norm:
            raise QuadratureNotConverged(f"commutator quadrature moved by {drift:.3e} at eps = {eps}")
        defects.append(float(np.linalg.norm(fine - target, 2)))
        logging.info(f"Commutator identity: eps = {eps:g}, D = {defects[-1]:.3e}")
    return CommutatorLadder(list(eps_ladder), defects, basis.shape[1], float(projection.operator.norm()), big_lambda)
