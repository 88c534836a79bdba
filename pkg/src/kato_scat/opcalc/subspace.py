# src/kato_scat/opcalc/subspace.py

import numpy as np

from kato_scat.errors import ConfigError
from kato_scat.opcalc.grid import Grid

SUPPORT_FRACTION = 0.8
BAND_FRACTION = 0.8
GAUSSIAN_REACH = 7.0
LOW_ENERGY_REACH = 6.0


def gaussian_packet(x: np.ndarray, center: float, width: float, momentum: float) -> np.ndarray:
    return np.exp(-((x - center) ** 2) / (2 * width ** 2) + 1j * momentum * x)


def packet_basis(grid: Grid, count: int = 8, width: float | None = None, momenta=(0.0, 1.0, -1.0, 2.0)) -> np.ndarray:
    """
    Weighted-orthonormal basis of Gaussian packets.

    Every packet sits inside [0, 0.8 X_max] and away from 0 (to reach GAUSSIAN_REACH widths)
    and has sine-transform content below 0.8 of the grid's Nyquist wavenumber.
    """
    x_max = grid.x_max
    width = width or min(1.5, 0.04 * x_max)
    low = GAUSSIAN_REACH * width
    high = SUPPORT_FRACTION * x_max - GAUSSIAN_REACH * width
    if high <= low:
        raise ConfigError(f"X_max = {x_max} is too short for test packets of width {width}")
    band = max(abs(m) for m in momenta) + GAUSSIAN_REACH / width
    if band > BAND_FRACTION * grid.k_nyquist:
        raise ConfigError(f"test packets reach k = {band:.2f}, beyond 0.8 of the Nyquist limit {grid.k_nyquist:.2f}")

    centers = np.linspace(low, high, count)
    columns = [
        gaussian_packet(grid.nodes, center, width, momenta[j % len(momenta)])
        for j, center in enumerate(centers)
    ]
    return orthonormalize(np.stack(columns, axis=1), grid.weights)


def band_basis(grid: Grid, count: int = 8, width: float | None = None) -> np.ndarray:
    """
    Packet basis with |momentum| * width >= LOW_ENERGY_REACH: the sine transforms also vanish near
    k = 0, where W phi and Z phi grow tails longer than [0, X_max].
    """
    width = width or min(1.5, 0.04 * grid.x_max)
    base = LOW_ENERGY_REACH / width
    return packet_basis(grid, count, width, momenta=(base, base + 1.0, -base, base + 2.0))


def orthonormalize(vectors: np.ndarray, weights: np.ndarray) -> np.ndarray:
    root = np.sqrt(weights)
    q, _ = np.linalg.qr(root[:, None] * vectors)
    return q / root[:, None]


def restricted_norm(matrix: np.ndarray, basis: np.ndarray, weights: np.ndarray) -> float:
    """||M Q|| in the weighted metric for a weighted-orthonormal Q."""
    root = np.sqrt(weights)
    return float(np.linalg.norm(root[:, None] * (matrix @ basis), ord=2))


def compressed(matrix: np.ndarray, basis: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Q^H W M Q, the compression of M onto span Q."""
    return np.conj(basis.T) @ (weights[:, None] * (matrix @ basis))
