# src/kato_scat/opcalc/probes.py

"""Numerical checks of the resolvent bounds and identities on a grid."""

import logging
from dataclasses import dataclass

import numpy as np

from kato_scat.errors import AtEigenvalue
from kato_scat.opcalc.grid import Grid
from kato_scat.opcalc.operators import (
    free_scaled,
    kernel_at_k,
    kernel_from_scaled,
    multiplication,
    resolvent_kernel,
    spectral_k,
    weighted_norm,
)
from kato_scat.potential.potential import Potential, factorize, resolvent_bound_constant


@dataclass(frozen=True)
class BoundSample:
    k: complex
    value: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.value <= self.bound * (1 + 1e-10)


def _support(potential: Potential, grid: Grid):
    keep = np.abs(potential(grid.nodes)) > 0
    return grid.nodes[keep], grid.weights[keep], keep


def weighted_bound_probe(potential: Potential, ks, grid: Grid) -> list:
    """||e(k) A R_V(k^2) B*|| against exp(<a>^2) <a><b> at every k (Im k > 0)."""
    factors = factorize(potential)
    bound = resolvent_bound_constant(potential) * factors.a_weighted * factors.b_weighted
    if potential.is_zero:
        return [BoundSample(complex(k), 0.0, 0.0) for k in ks]
    nodes, weights, keep = _support(potential, grid)
    a = factors.a(nodes)
    b = factors.b(nodes)
    samples = []
    for k in ks:
        kernel, _ = kernel_at_k(potential, complex(k), grid, normalize=False)
        kernel = kernel[np.ix_(keep, keep)]
        matrix = a[:, None] * kernel * np.conj(b)[None, :] * weights[None, :]
        samples.append(BoundSample(complex(k), weighted_norm(matrix, weights), bound))
    return samples


def free_bound_probe(potential: Potential, ks, grid: Grid) -> list:
    """||A R0(k^2) A*|| against <a>^2."""
    factors = factorize(potential)
    bound = factors.a_weighted ** 2
    if potential.is_zero:
        return [BoundSample(complex(k), 0.0, 0.0) for k in ks]
    nodes, weights, _ = _support(potential, grid)
    a = factors.a(nodes)
    samples = []
    for k in ks:
        s_scaled, e_scaled = free_scaled(complex(k), nodes)
        kernel = kernel_from_scaled(s_scaled, e_scaled, complex(k), nodes, 1.0)
        matrix = a[:, None] * kernel * a[None, :] * weights[None, :]
        samples.append(BoundSample(complex(k), weighted_norm(matrix, weights), bound))
    return samples


def q_uniform_bound_probe(potential: Potential, lams, exclusion, radius: float, grid: Grid,
                          residual_tol: float = 1e-10) -> float:
    """
    Supremum of ||A R_V(lambda) B*|| over the lattice points outside the exclusion disks.

    Raises:
        AtEigenvalue: a lattice point sits on a zero of e.
    """
    factors = factorize(potential)
    if potential.is_zero:
        return 0.0
    nodes, weights, keep = _support(potential, grid)
    a = factors.a(nodes)
    b = factors.b(nodes)
    supremum = 0.0
    for lam in lams:
        if any(abs(lam - mu) < radius for mu in exclusion):
            continue
        kernel, e0 = kernel_at_k(potential, spectral_k(lam), grid, residual_tol=residual_tol)
        if abs(e0) < residual_tol:
            raise AtEigenvalue(f"lambda = {lam} is an eigenvalue")
        matrix = a[:, None] * kernel[np.ix_(keep, keep)] * np.conj(b)[None, :] * weights[None, :]
        supremum = max(supremum, weighted_norm(matrix, weights))
    logging.debug(f"sup ||Q_V|| over {len(lams)} lattice points: {supremum:.6g}")
    return supremum


def resolvent_identity_defect(potential: Potential, lam: complex, grid: Grid) -> float:
    """||R_V - R0 + R0 V R_V|| / (||R0|| ||R_V||)."""
    free = resolvent_kernel(potential, lam, grid, side="free")
    full = resolvent_kernel(potential, lam, grid, side="full")
    v = multiplication(potential, grid)
    defect = full - free + free @ v @ full
    return defect.norm() / (free.norm() * full.norm())


def free_resolvent_fd_defect(lam: complex, x_max: float, n_points: int) -> float:
    """
    max |(T_h - lambda) R0 h - I| over interior rows, T_h the three-point Dirichlet Laplacian
    on a uniform lattice with n_points interior nodes.
    """
    h = x_max / (n_points + 1)
    nodes = h * np.arange(1, n_points + 1)
    k = spectral_k(lam)
    s_scaled, e_scaled = free_scaled(k, nodes)
    matrix = kernel_from_scaled(s_scaled, e_scaled, k, nodes, 1.0) * h
    applied = (-matrix[:-2] + 2 * matrix[1:-1] - matrix[2:]) / h ** 2 - lam * matrix[1:-1]
    target = np.eye(n_points)[1:-1]
    return float(np.max(np.abs(applied - target)))
