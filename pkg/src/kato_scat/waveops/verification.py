# src/kato_scat/waveops/verification.py

import logging

import numpy as np
from scipy.optimize import linear_sum_assignment

from kato_scat.opcalc.grid import Grid
from kato_scat.opcalc.operators import resolvent_kernel
from kato_scat.opcalc.subspace import band_basis, compressed, restricted_norm
from kato_scat.potential.potential import Potential
from kato_scat.waveops.wave_operators import WaveOperatorPair

INTERTWINING_SAMPLES = (2j, -2j)


def _basis(grid: Grid, basis):
    return band_basis(grid) if basis is None else basis


def verify_completeness(pair: WaveOperatorPair, grid: Grid, basis: np.ndarray | None = None) -> dict:
    """
    ||(WZ - (I - P)) Q|| and ||(ZW - I) Q|| on the test subspace, plus ||Z f|| / ||f|| for every
    eigenfunction and |(W q, g)| / (||g|| ||q||) over the test vectors.
    """
    basis = _basis(grid, basis)
    w_mat, z_mat = pair.W.matrix, pair.Z.matrix
    complement = pair.projection.complement()
    identity = np.eye(grid.size)
    report = {
        "wz_defect": restricted_norm(w_mat @ z_mat - complement, basis, grid.weights),
        "zw_defect": restricted_norm(z_mat @ w_mat - identity, basis, grid.weights),
        "kernel_defect": 0.0,
        "range_defect": 0.0,
    }
    images = w_mat @ basis
    for eigen in pair.projection.pairs:
        report["kernel_defect"] = max(report["kernel_defect"], grid.norm(z_mat @ eigen.f) / grid.norm(eigen.f))
        overlaps = np.abs(np.conj(eigen.g * grid.weights) @ images) / grid.norm(eigen.g)
        report["range_defect"] = max(report["range_defect"], float(np.max(overlaps)))
    logging.info(
        f"Completeness: |WZ - (I-P)| = {report['wz_defect']:.3e}, |ZW - I| = {report['zw_defect']:.3e}, "
        f"|Z f| = {report['kernel_defect']:.3e}"
    )
    return report


def spectral_distance(first: np.ndarray, second: np.ndarray) -> float:
    """Largest distance between optimally matched eigenvalues, relative to the spectral radius."""
    a = np.linalg.eigvals(first)
    b = np.linalg.eigvals(second)
    cost = np.abs(a[:, None] - b[None, :])
    rows, cols = linear_sum_assignment(cost)
    scale = max(float(np.max(np.abs(b))), 1.0)
    return float(np.max(cost[rows, cols])) / scale


def verify_intertwining(
    pair: WaveOperatorPair,
    potential: Potential,
    grid: Grid,
    samples=INTERTWINING_SAMPLES,
    basis: np.ndarray | None = None,
) -> dict:
    """
    Resolvent intertwining ||(R_V(l) W - W R0(l)) Q|| / (||R_V|| ||W||) at every sample and the
    comparison of W T_h Z with L_h (I - P) compressed to the test subspace.

    Raises:
        AtEigenvalue: a sample is an eigenvalue of L.
    """
    basis = _basis(grid, basis)
    w_mat, z_mat = pair.W.matrix, pair.Z.matrix
    defects = {}
    for lam in samples:
        perturbed = resolvent_kernel(potential, lam, grid)
        free = resolvent_kernel(potential, lam, grid, side="free")
        gap = restricted_norm(perturbed.matrix @ w_mat - w_mat @ free.matrix, basis, grid.weights)
        scale = max(perturbed.norm() * pair.W.norm(), 1e-300)
        defects[f"{complex(lam).real:g}{complex(lam).imag:+g}i"] = gap / scale

    kinetic = -grid.second_derivative
    full = kinetic + np.diag(potential(grid.nodes))
    similar = compressed(w_mat @ kinetic @ z_mat, basis, grid.weights)
    target = compressed(full @ pair.projection.complement(), basis, grid.weights)
    operator_gap = float(np.linalg.norm(similar - target, 2) / max(np.linalg.norm(target, 2), 1e-300))
    report = {
        "resolvent_defects": defects,
        "resolvent_defect": max(defects.values()) if defects else 0.0,
        "similarity_defect": operator_gap,
        "spectral_distance": spectral_distance(similar, target),
    }
    logging.info(
        f"Intertwining: resolvent {report['resolvent_defect']:.3e}, WTZ vs L(I-P) {operator_gap:.3e}, "
        f"spectra {report['spectral_distance']:.3e}"
    )
    return report
