# src/kato_scat/evolution/propagator.py

import logging
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import fft, linalg
from scipy.interpolate import BarycentricInterpolator

from kato_scat.errors import AliasingDetected, ConfigError, StepTooLarge
from kato_scat.opcalc.grid import Grid
from kato_scat.potential.potential import Potential

DEFAULT_UNIFORM_NODES = 4096
ALIASING_FRACTION = 0.8
ALIASING_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class UniformGrid:
    """Interior points j h, j = 1..n-1, of [0, x_max] with h = x_max / n; Dirichlet at both ends."""

    x_max: float
    n: int = DEFAULT_UNIFORM_NODES

    def __post_init__(self):
        if self.x_max <= 0 or self.n < 8:
            raise ConfigError(f"uniform grid needs X_max > 0 and n >= 8, got {self.x_max}, {self.n}")

    @property
    def step(self) -> float:
        return self.x_max / self.n

    @cached_property
    def points(self) -> np.ndarray:
        return self.step * np.arange(1, self.n)

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        return np.pi * np.arange(1, self.n) / self.x_max

    @property
    def k_nyquist(self) -> float:
        return np.pi / self.step

    def norm(self, values: np.ndarray) -> float:
        return float(np.sqrt(self.step * np.sum(np.abs(values) ** 2)))

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        return complex(self.step * np.sum(f * np.conj(g)))


@dataclass
class EvolutionState:
    t: float
    vector: np.ndarray
    method: str
    absorbed_mass: float = 0.0


def sine_coefficients(values: np.ndarray) -> np.ndarray:
    """Orthonormal DST-I; real and imaginary parts are transformed separately."""
    values = np.asarray(values, dtype=complex)
    return fft.dst(values.real, type=1, norm="ortho") + 1j * fft.dst(values.imag, type=1, norm="ortho")


def aliasing_fraction(ugrid: UniformGrid, coefficients: np.ndarray) -> float:
    power = np.abs(coefficients) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    high = ugrid.wavenumbers > ALIASING_FRACTION * ugrid.k_nyquist
    return float(power[high].sum() / total)


def _check_band(ugrid: UniformGrid, coefficients: np.ndarray):
    fraction = aliasing_fraction(ugrid, coefficients)
    if fraction > ALIASING_TOL:
        raise AliasingDetected(f"{fraction:.3e} of the spectral mass lies above 0.8 of the Nyquist wavenumber")


def free_evolve(vector: np.ndarray, t: float, ugrid: UniformGrid, check: bool = True) -> np.ndarray:
    """
    exp(itT) on the uniform grid: multiplier exp(i t k_n^2) on the sine coefficients.

    Raises:
        AliasingDetected: the data carries spectral mass above 0.8 k_Nyquist.
    """
    coefficients = sine_coefficients(vector)
    if check:
        _check_band(ugrid, coefficients)
    if t == 0:
        return np.asarray(vector, dtype=complex).copy()
    return sine_coefficients(coefficients * np.exp(1j * t * ugrid.wavenumbers ** 2))


def _cell_integrals(potential: Potential, left: np.ndarray, right: np.ndarray, order: int) -> np.ndarray:
    t, w = np.polynomial.legendre.leggauss(order)
    half = (right - left) / 2
    points = (left + half)[:, None] + half[:, None] * t[None, :]
    values = np.asarray(potential(points.ravel()), dtype=complex).reshape(points.shape)
    return half * (values @ w)


def cell_averages(potential: Potential, ugrid: UniformGrid, order: int = 4) -> np.ndarray:
    """
    Mean of V over the cell [x_j - h/2, x_j + h/2] of every uniform point, with cells split at
    the jumps of V. A jump then enters the discrete operator at its true position.
    """
    half = ugrid.step / 2
    left = ugrid.points - half
    right = ugrid.points + half
    total = np.zeros(ugrid.points.size, dtype=complex)
    for edge in potential.breakpoints():
        cut = np.clip(edge, left, right)
        total += _cell_integrals(potential, left, cut, order)
        left = cut
    total += _cell_integrals(potential, left, right, order)
    return total / ugrid.step


def _split_step(values, potential_values, t, steps, ugrid):
    delta = t / steps
    half = np.exp(0.5j * delta * potential_values)
    kinetic = np.exp(1j * delta * ugrid.wavenumbers ** 2)
    for _ in range(steps):
        values = half * values
        values = sine_coefficients(kinetic * sine_coefficients(values))
        values = half * values
    return values


def perturbed_evolve(
    potential: Potential,
    vector: np.ndarray,
    t: float,
    ugrid: UniformGrid,
    steps: int,
    check: bool = True,
    step_tol: float = 1e-4,
) -> np.ndarray:
    """
    exp(itL) by Strang splitting: exp(i V d/2) exp(i T d) exp(i V d/2), d = t / steps.

    Raises:
        AliasingDetected: band check on the input or the result.
        StepTooLarge: rerunning with half the step moves the result by more than step_tol (relative).
    """
    if steps < 1:
        raise ConfigError(f"split-step evolution needs at least one step, got {steps}")
    values = np.asarray(vector, dtype=complex)
    if check:
        _check_band(ugrid, sine_coefficients(values))
    if potential.is_zero:
        return free_evolve(values, t, ugrid, check=False)

    v = cell_averages(potential, ugrid)
    result = _split_step(values, v, t, steps, ugrid)
    if check:
        finer = _split_step(values, v, t, 2 * steps, ugrid)
        change = ugrid.norm(finer - result) / max(ugrid.norm(finer), 1e-300)
        logging.debug(f"split step t = {t}: halving the step moves the result by {change:.3e}")
        if change > step_tol:
            raise StepTooLarge(f"halving the time step moved exp(itL) phi by {change:.3e} at t = {t}")
        _check_band(ugrid, sine_coefficients(finer))
        result = finer
    return result


def finite_difference_operator(potential: Potential, ugrid: UniformGrid) -> tuple[np.ndarray, np.ndarray]:
    """Main and off diagonal of the three-point L_h with Dirichlet ends."""
    h2 = ugrid.step ** 2
    main = 2.0 / h2 + cell_averages(potential, ugrid)
    off = np.full(ugrid.points.size - 1, -1.0 / h2, dtype=complex)
    return main, off


def resolvent_power_evolve(potential: Potential, vector: np.ndarray, t: float, n: int, ugrid: UniformGrid) -> np.ndarray:
    """(I - i t L_h / n)^{-n} phi with banded solves."""
    main, off = finite_difference_operator(potential, ugrid)
    scale = 1j * t / n
    bands = np.zeros((3, main.size), dtype=complex)
    bands[0, 1:] = -scale * off
    bands[1] = 1.0 - scale * main
    bands[2, :-1] = -scale * off
    values = np.asarray(vector, dtype=complex)
    for _ in range(n):
        values = linalg.solve_banded((1, 1), bands, values)
    return values


def resample_to_uniform(grid: Grid, values: np.ndarray, ugrid: UniformGrid) -> np.ndarray:
    """Panelwise barycentric interpolation of nodal values; zero beyond the panel grid."""
    out = np.zeros(ugrid.points.size, dtype=complex)
    points = ugrid.points
    for p, block in enumerate(grid.panel_slices()):
        left, right = grid.panel_edges[p], grid.panel_edges[p + 1]
        inside = (points >= left) & (points < right)
        if not inside.any():
            continue
        interpolator = BarycentricInterpolator(grid.nodes[block], values[block])
        out[inside] = interpolator(points[inside])
    return out


def from_uniform(ugrid: UniformGrid, values: np.ndarray, points: np.ndarray) -> np.ndarray:
    """Evaluates the sine series of uniform-grid data at arbitrary points; zero beyond x_max."""
    coefficients = sine_coefficients(values)
    points = np.asarray(points, dtype=float)
    basis = np.sin(np.outer(points, ugrid.wavenumbers)) * np.sqrt(2.0 / ugrid.n)
    out = basis @ coefficients
    out[points > ugrid.x_max] = 0.0
    return out
