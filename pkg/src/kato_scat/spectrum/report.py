# src/kato_scat/spectrum/report.py

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from kato_scat.errors import KatoScatError, QuadratureNotConverged
from kato_scat.jost.jost_solver import certified_radius
from kato_scat.opcalc.grid import Grid
from kato_scat.potential.potential import Potential, first_moment
from kato_scat.spectrum.classifier import SimilarityClassifier
from kato_scat.spectrum.zeros import (
    CONTOUR_MARGIN,
    RESIDUAL_TOL,
    JostEvaluator,
    Region,
    contour_count,
    locate_eigenvalues,
)


@dataclass(frozen=True)
class SingularityCandidate:
    k: float
    abs_e: float
    confirmed: bool


@dataclass
class SpectralReport:
    eigen_k: list
    singularity_scan: list
    kato_moment: float
    region: Region | None
    certified: bool
    near_axis_count: int = 0
    verdict: str = "undetermined"
    notes: list = field(default_factory=list)

    @property
    def eigenvalues(self) -> list:
        return [zero.eigenvalue for zero in self.eigen_k]


def _polish_real_zero(evaluator: JostEvaluator, k: float, residual_tol: float):
    """Newton steps clamped to the closed upper half-plane; a true real zero pulls them onto the axis."""
    point = complex(k)
    for _ in range(40):
        value, slope = evaluator([point])
        value, slope = complex(value[0]), complex(slope[0])
        if abs(value) <= residual_tol * (1 + abs(slope)):
            break
        if slope == 0:
            return None
        point = point - value / slope
        point = complex(point.real, max(point.imag, 0.0))
    else:
        return None
    if point.imag > 1e-8:
        return None
    value, slope = evaluator([complex(point.real)])
    return point.real, float(abs(value[0])), float(abs(slope[0]))


def scan_singularities(
    potential: Potential,
    k_max: float,
    threshold: float = 1e-3,
    grid: Grid | None = None,
    k_min: float = 1e-3,
    n_lattice: int = 2001,
    residual_tol: float = RESIDUAL_TOL,
    threads: int = 1,
) -> list:
    """
    Local minima of |e(k)| on the real lattices [k_min, k_max] and [-k_max, -k_min] that fall below
    `threshold` after refinement. A candidate is confirmed when Newton polishing drives |e|
    below residual_tol * (1 + |e'|) on the axis.
    """
    if k_max <= k_min:
        raise QuadratureNotConverged(f"scan needs k_max > k_min, got {k_max} <= {k_min}")
    if potential.is_zero:
        return []

    evaluator = JostEvaluator(potential, grid, threads)
    positive = np.linspace(k_min, k_max, n_lattice)
    candidates = []
    for lattice in (positive, -positive[::-1]):
        magnitude = np.abs(evaluator(lattice)[0])
        interior = np.arange(1, lattice.size - 1)
        minima = interior[(magnitude[interior] <= magnitude[interior - 1]) & (magnitude[interior] <= magnitude[interior + 1])]
        if magnitude[0] < magnitude[1]:
            minima = np.append(minima, 0)
        if magnitude[-1] < magnitude[-2]:
            minima = np.append(minima, lattice.size - 1)
        for index in np.sort(minima):
            lo = lattice[max(index - 1, 0)]
            hi = lattice[min(index + 1, lattice.size - 1)]
            result = optimize.minimize_scalar(
                lambda x: float(abs(evaluator([x])[0][0])),
                bounds=(min(lo, hi), max(lo, hi)),
                method="bounded",
                options={"xatol": 1e-12},
            )
            k_best, abs_best = float(result.x), float(result.fun)
            if abs_best >= threshold:
                continue
            confirmed = False
            polished = _polish_real_zero(evaluator, k_best, residual_tol)
            if polished is not None:
                k_best, abs_best = polished[0], polished[1]
                confirmed = abs_best <= residual_tol * (1 + polished[2])
            candidates.append(SingularityCandidate(k=k_best, abs_e=abs_best, confirmed=confirmed))
            logging.info(f"Real-axis minimum |e({k_best:.10g})| = {abs_best:.3e} (confirmed: {confirmed})")
    return sorted(candidates, key=lambda c: c.k)


def near_axis_zero_count(potential: Potential, radius: float, grid: Grid | None = None,
                         delta: float = CONTOUR_MARGIN, threads: int = 1) -> int:
    """Zeros strictly between Im k = delta/20 and the contour margin; -1 if the strip contour is blocked."""
    if potential.is_zero or radius <= 0:
        return 0
    strip = Region(-radius, radius, delta / 20, delta)
    try:
        return contour_count(JostEvaluator(potential, grid, threads), strip, delta=delta / 20).count
    except KatoScatError as error:
        logging.warning(f"Near-axis strip count failed: {error.message}")
        return -1


def build_report(
    potential: Potential,
    grid: Grid | None = None,
    delta: float = CONTOUR_MARGIN,
    threshold: float = 1e-3,
    k_min: float = 1e-3,
    residual_tol: float = RESIDUAL_TOL,
    threads: int = 1,
) -> SpectralReport:
    """Eigenvalues, real-axis scan, Kato moment and the similarity verdict for one potential."""
    moment = first_moment(potential)
    notes = []
    try:
        search = locate_eigenvalues(potential, grid=grid, delta=delta, residual_tol=residual_tol, threads=threads)
        region, certified, zeros = search.region, search.certified, search.zeros
    except KatoScatError as error:
        logging.error(f"Zero search failed: {error.message}")
        notes.append(error.reason)
        region, certified, zeros = None, False, []

    radius = certified_radius(potential)
    scan = scan_singularities(potential, max(radius, 10 * k_min), threshold, grid, k_min,
                              residual_tol=residual_tol, threads=threads)
    near_axis = near_axis_zero_count(potential, radius, grid, delta, threads)

    report = SpectralReport(
        eigen_k=zeros,
        singularity_scan=scan,
        kato_moment=moment,
        region=region,
        certified=certified,
        near_axis_count=near_axis,
        notes=notes,
    )
    report.verdict = SimilarityClassifier().classify(report)
    logging.info(f"Verdict for {potential.label}: {report.verdict}")
    return report
