# src/kato_scat/opcalc/operators.py

from dataclasses import dataclass

import numpy as np

from kato_scat.errors import AtEigenvalue, TooCloseToContinuousSpectrum
from kato_scat.jost.jost_solver import propagate
from kato_scat.opcalc.grid import Grid
from kato_scat.potential.potential import FactorPair, Potential

DELTA_LAMBDA = 1e-3


def weighted_norm(matrix: np.ndarray, weights: np.ndarray) -> float:
    """Operator norm of a nodal matrix in the metric (f, g) = sum w f conj(g)."""
    root = np.sqrt(weights)
    return float(np.linalg.norm(root[:, None] * matrix / root[None, :], ord=2))


@dataclass(eq=False)
class DiscretizedOperator:
    """Dense matrix acting on nodal samples, with the quadrature weights of its grid."""

    matrix: np.ndarray
    weights: np.ndarray
    label: str = ""
    lam: complex | None = None

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def norm(self) -> float:
        return weighted_norm(self.matrix, self.weights)

    def apply(self, vectors: np.ndarray) -> np.ndarray:
        return self.matrix @ vectors

    def adjoint(self) -> "DiscretizedOperator":
        matrix = np.conj(self.matrix.T) * self.weights[None, :] / self.weights[:, None]
        return DiscretizedOperator(matrix, self.weights, f"{self.label}*", None if self.lam is None else np.conj(self.lam))

    def __matmul__(self, other: "DiscretizedOperator") -> "DiscretizedOperator":
        return DiscretizedOperator(self.matrix @ other.matrix, self.weights, f"{self.label}{other.label}")

    def __add__(self, other: "DiscretizedOperator") -> "DiscretizedOperator":
        return DiscretizedOperator(self.matrix + other.matrix, self.weights, f"({self.label} + {other.label})")

    def __sub__(self, other: "DiscretizedOperator") -> "DiscretizedOperator":
        return DiscretizedOperator(self.matrix - other.matrix, self.weights, f"({self.label} - {other.label})")

    @classmethod
    def identity(cls, weights: np.ndarray, label: str = "I") -> "DiscretizedOperator":
        return cls(np.eye(weights.size, dtype=complex), weights, label)


def spectral_k(lam: complex) -> complex:
    """Branch k = sqrt(lambda) with Im k >= 0."""
    return complex(1j * np.sqrt(-complex(lam)))


def distance_to_half_line(lam: complex) -> float:
    lam = complex(lam)
    return abs(lam.imag) if lam.real >= 0 else abs(lam)


def kernel_block(s_rows, e_rows, rows, s_cols, e_cols, cols, k: complex, e_at_zero: complex) -> np.ndarray:
    """Kernel s(min) e(max) / e(k) between two node sets, from scaled solutions at each."""
    lower = rows[:, None] <= cols[None, :]
    product = np.where(lower, s_rows[:, None] * e_cols[None, :], e_rows[:, None] * s_cols[None, :])
    return product * np.exp(1j * k * np.abs(rows[:, None] - cols[None, :])) / e_at_zero


def kernel_from_scaled(s_scaled, e_scaled, k: complex, nodes: np.ndarray, e_at_zero: complex) -> np.ndarray:
    """s(min(x,xi)) e(max(x,xi)) / e(k) assembled from the bounded scaled solutions."""
    return kernel_block(s_scaled, e_scaled, nodes, s_scaled, e_scaled, nodes, k, e_at_zero)


def free_scaled(k: complex, nodes: np.ndarray):
    """Scaled free solutions: sin(kx)/k e^{ikx} and 1."""
    return np.expm1(2j * k * nodes) / (2j * k), np.ones(nodes.size, dtype=complex)


def kernel_at_k(
    potential: Potential,
    k: complex,
    grid: Grid,
    side: str = "full",
    residual_tol: float = 1e-10,
    normalize: bool = True,
) -> tuple[np.ndarray, complex]:
    """
    Resolvent kernel values K(x_i, x_j) (no weights) at spectral parameter k^2, and e(k).
    Real k gives the boundary value from the upper half-plane; normalize=False returns e(k) K.
    """
    nodes = grid.nodes
    if side == "free" or potential.is_zero:
        s_scaled, e_scaled = free_scaled(k, nodes)
        return kernel_from_scaled(s_scaled, e_scaled, k, nodes, 1.0), 1.0 + 0j

    batch = propagate(potential, [k], nodes, grid.x_max, mesh=grid.knots, allow_lower=True)
    e0 = complex(batch.e_at_zero[0])
    if normalize and abs(e0) < residual_tol:
        raise AtEigenvalue(f"|e(k)| = {abs(e0):.3e} at k = {k}: spectral parameter is an eigenvalue")
    divisor = e0 if normalize else 1.0
    return kernel_from_scaled(batch.s_scaled[0], batch.e_scaled[0], k, nodes, divisor), e0


def resolvent_kernel(
    potential: Potential,
    lam: complex,
    grid: Grid,
    side: str = "full",
    delta_lambda: float = DELTA_LAMBDA,
    residual_tol: float = 1e-10,
) -> DiscretizedOperator:
    """
    Nystrom matrix R[i, j] = R(x_i, x_j, lambda) w_j of the free (side="free") or perturbed resolvent.

    Raises:
        TooCloseToContinuousSpectrum: lambda within delta_lambda of [0, inf).
        AtEigenvalue: e(k) vanishes at k = sqrt(lambda).
    """
    if distance_to_half_line(lam) < delta_lambda:
        raise TooCloseToContinuousSpectrum(f"lambda = {lam} is within {delta_lambda} of the continuous spectrum")
    k = spectral_k(lam)
    kernel, _ = kernel_at_k(potential, k, grid, side, residual_tol)
    label = "R0" if side == "free" or potential.is_zero else "RV"
    return DiscretizedOperator(kernel * grid.weights[None, :], grid.weights, label, complex(lam))


def sandwich(factors: FactorPair, operator: DiscretizedOperator, grid: Grid) -> DiscretizedOperator:
    """A R B*: rows scaled by a(x_i), columns by conj(b(x_j)); the weights stay inside R."""
    a = factors.a(grid.nodes)
    b = factors.b(grid.nodes)
    label = "Q0" if operator.label == "R0" else "QV"
    return DiscretizedOperator(a[:, None] * operator.matrix * np.conj(b)[None, :], grid.weights, label, operator.lam)


def multiplication(potential: Potential, grid: Grid) -> DiscretizedOperator:
    return DiscretizedOperator(np.diag(potential(grid.nodes)), grid.weights, "V")
