# src/kato_scat/spectrum/zeros.py

import logging
from dataclasses import dataclass

import numpy as np

from kato_scat.errors import InvalidRegion, MultiplicityAboveOne, QuadratureNotConverged, ZeroOnContour
from kato_scat.jost.jost_solver import certified_radius, default_grid, propagate
from kato_scat.opcalc.grid import Grid
from kato_scat.parallel import parallel_map
from kato_scat.potential.potential import Potential

CONTOUR_MARGIN = 1e-2
RESIDUAL_TOL = 1e-10
PHASE_STEP = 0.3
TRAPEZOID_STEP = 0.05
SPLIT_OFFSETS = ((0.5, 0.5), (0.4637, 0.5371), (0.5412, 0.4588))


@dataclass(frozen=True)
class Region:
    """Closed rectangle [re_min, re_max] x [im_min, im_max] in the k-plane."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float

    @property
    def width(self) -> float:
        return self.re_max - self.re_min

    @property
    def height(self) -> float:
        return self.im_max - self.im_min

    @property
    def diameter(self) -> float:
        return float(np.hypot(self.width, self.height))

    @property
    def center(self) -> complex:
        return complex((self.re_min + self.re_max) / 2, (self.im_min + self.im_max) / 2)

    def contains(self, k: complex, pad: float = 0.0) -> bool:
        return (self.re_min - pad <= k.real <= self.re_max + pad) and (self.im_min - pad <= k.imag <= self.im_max + pad)

    def boundary(self, s: np.ndarray) -> np.ndarray:
        """Counterclockwise parametrization, s in [0, 4] with one unit per side."""
        side = np.minimum(np.floor(s), 3).astype(int)
        t = s - side
        bottom = (self.re_min + t * self.width) + 1j * self.im_min
        right = self.re_max + 1j * (self.im_min + t * self.height)
        top = (self.re_max - t * self.width) + 1j * self.im_max
        left = self.re_min + 1j * (self.im_max - t * self.height)
        return np.choose(side, [bottom, right, top, left])

    def quadrisect(self, fx: float = 0.5, fy: float = 0.5) -> list["Region"]:
        xm = self.re_min + fx * self.width
        ym = self.im_min + fy * self.height
        return [
            Region(self.re_min, xm, self.im_min, ym),
            Region(xm, self.re_max, self.im_min, ym),
            Region(self.re_min, xm, ym, self.im_max),
            Region(xm, self.re_max, ym, self.im_max),
        ]

    def as_list(self) -> list:
        return [self.re_min, self.re_max, self.im_min, self.im_max]


@dataclass(frozen=True)
class ContourCount:
    count: int
    winding: float
    trapezoid: complex
    nodes: int
    min_abs: float


@dataclass(frozen=True)
class EigenK:
    k0: complex
    multiplicity: int
    residual: float

    @property
    def eigenvalue(self) -> complex:
        return self.k0 ** 2


@dataclass(frozen=True)
class ZeroSearch:
    region: Region
    certified: bool
    count: int
    zeros: list


class JostEvaluator:
    """e(k) and de/dk on batches of k for one potential and grid, split across threads."""

    def __init__(self, potential: Potential, grid: Grid | None = None, threads: int = 1, chunk: int = 256):
        self.potential = potential
        self.grid = grid or default_grid(potential)
        self.threads = threads
        self.chunk = chunk

    def __call__(self, ks) -> tuple[np.ndarray, np.ndarray]:
        ks = np.atleast_1d(np.asarray(ks, dtype=complex))
        if self.potential.is_zero:
            return np.ones(ks.size, dtype=complex), np.zeros(ks.size, dtype=complex)
        pieces = [ks[i:i + self.chunk] for i in range(0, ks.size, self.chunk)]
        results = parallel_map(self._evaluate, pieces, self.threads)
        values = np.concatenate([r[0] for r in results])
        slopes = np.concatenate([r[1] for r in results])
        return values, slopes

    def _evaluate(self, ks):
        batch = propagate(self.potential, ks, [0.0], self.grid.x_max, mesh=self.grid.knots,
                          regular=False, derivative=True)
        return batch.e_at_zero, batch.e_prime


def contour_count(
    evaluator: JostEvaluator,
    region: Region,
    delta: float = CONTOUR_MARGIN,
    zero_threshold: float = 1e-8,
    n_per_side: int = 32,
    max_nodes: int = 40000,
) -> ContourCount:
    """
    Argument-principle count of zeros of e inside `region`.

    The boundary is refined until the phase of e moves by less than PHASE_STEP between
    neighbouring nodes; the winding number from the accumulated phase must agree with the
    trapezoid value of (1/2 pi i) * contour integral of e'/e to within 0.1.

    Raises:
        InvalidRegion: the rectangle comes closer than `delta` to the real axis.
        ZeroOnContour: |e| drops below zero_threshold on the boundary.
        QuadratureNotConverged: refinement exceeds max_nodes or the two counts disagree.
    """
    if region.im_min < delta * (1 - 1e-12) or region.width <= 0 or region.height <= 0:
        raise InvalidRegion(f"region {region.as_list()} must lie at height >= {delta} with positive size")

    s = np.linspace(0.0, 4.0, 4 * n_per_side + 1)
    k = region.boundary(s)
    values, slopes = evaluator(k[:-1])
    values = np.append(values, values[0])
    slopes = np.append(slopes, slopes[0])

    while True:
        if np.min(np.abs(values)) < zero_threshold:
            where = k[np.argmin(np.abs(values))]
            raise ZeroOnContour(f"|e| = {np.min(np.abs(values)):.3e} at k = {where:.6g} on the contour")
        ratio = values[1:] / values[:-1]
        log_dk = np.abs(np.diff(k))
        swing = np.abs(slopes[1:] / values[1:] - slopes[:-1] / values[:-1]) * log_dk
        bad = (np.abs(np.angle(ratio)) > PHASE_STEP) | (np.abs(np.log(np.abs(ratio))) > PHASE_STEP) \
            | (swing > TRAPEZOID_STEP)
        if not np.any(bad):
            break
        if s.size + np.count_nonzero(bad) > max_nodes:
            raise QuadratureNotConverged(f"contour refinement exceeded {max_nodes} nodes on {region.as_list()}")
        s_new = (s[:-1][bad] + s[1:][bad]) / 2
        k_new = region.boundary(s_new)
        v_new, d_new = evaluator(k_new)
        order = np.argsort(np.concatenate([s, s_new]), kind="stable")
        s = np.concatenate([s, s_new])[order]
        k = np.concatenate([k, k_new])[order]
        values = np.concatenate([values, v_new])[order]
        slopes = np.concatenate([slopes, d_new])[order]

    winding = float(np.sum(np.angle(values[1:] / values[:-1])) / (2 * np.pi))
    log_derivative = slopes / values
    trapezoid = complex(np.sum((log_derivative[1:] + log_derivative[:-1]) / 2 * np.diff(k)) / (2j * np.pi))
    count = int(round(winding))
    if abs(trapezoid - count) > 0.1:
        raise QuadratureNotConverged(
            f"argument-principle value {trapezoid:.4f} is not within 0.1 of the winding number {count}"
        )
    return ContourCount(count=count, winding=winding, trapezoid=trapezoid, nodes=int(s.size),
                        min_abs=float(np.min(np.abs(values))))


def count_zeros(potential: Potential, region: Region, grid: Grid | None = None, threads: int = 1, **options) -> int:
    if potential.is_zero:
        return 0
    return contour_count(JostEvaluator(potential, grid, threads), region, **options).count


def newton_refine(evaluator: JostEvaluator, start: complex, residual_tol: float = RESIDUAL_TOL, max_iter: int = 60):
    """Newton iteration on e; returns (k, |e(k)|, |e'(k)|) or None if it leaves the upper half-plane."""
    k = complex(start)
    for _ in range(max_iter):
        value, slope = evaluator([k])
        value, slope = complex(value[0]), complex(slope[0])
        if abs(value) <= residual_tol * (1 + abs(slope)):
            return k, abs(value), abs(slope)
        if slope == 0:
            return None
        k = k - value / slope
        if k.imag <= 0:
            return None
    return None


def certified_region(potential: Potential, delta: float = CONTOUR_MARGIN) -> Region | None:
    """Box holding every zero with Im k >= delta, or None when no zero can exist there."""
    radius = certified_radius(potential)
    if radius <= delta:
        return None
    return Region(-radius, radius, delta, radius)


def _split_counts(evaluator, box, delta, depth, **options):
    last_error = None
    for offset in (SPLIT_OFFSETS[depth % len(SPLIT_OFFSETS)],) + SPLIT_OFFSETS:
        children = box.quadrisect(*offset)
        try:
            counts = [contour_count(evaluator, child, delta, **options).count for child in children]
        except ZeroOnContour as error:
            last_error = error
            continue
        return children, counts
    raise last_error


def locate_eigenvalues(
    potential: Potential,
    region: Region | None = None,
    grid: Grid | None = None,
    delta: float = CONTOUR_MARGIN,
    residual_tol: float = RESIDUAL_TOL,
    newton_width: float = 0.5,
    threads: int = 1,
    **options,
) -> ZeroSearch:
    """
    Isolates the zeros of e inside `region` by recursive quadrisection on contour counts and
    polishes each with Newton steps. With no region given, the certified outer box is used.
    """
    certified = region is None
    if region is None:
        region = certified_region(potential, delta)
        if region is None:
            logging.info(f"No zero of e can lie above Im k = {delta} for {potential.label}")
            return ZeroSearch(region=Region(-delta, delta, delta, 2 * delta), certified=True, count=0, zeros=[])
    if potential.is_zero:
        return ZeroSearch(region=region, certified=certified, count=0, zeros=[])

    evaluator = JostEvaluator(potential, grid, threads)
    total = contour_count(evaluator, region, delta, **options).count
    logging.info(f"{total} zero(s) of e in {region.as_list()}")

    zeros = []
    pending = [(region, total, 0)]
    while pending:
        box, count, depth = pending.pop()
        if count == 0:
            continue
        if count == 1 and max(box.width, box.height) <= newton_width:
            found = newton_refine(evaluator, box.center, residual_tol)
            if found is not None and box.contains(found[0], pad=1e-9):
                zeros.append(EigenK(k0=found[0], multiplicity=1, residual=found[1]))
                continue
        if box.diameter < 1e-7:
            found = newton_refine(evaluator, box.center, residual_tol)
            k0 = found[0] if found is not None else box.center
            residual = found[1] if found is not None else float(abs(evaluator([k0])[0][0]))
            logging.warning(f"{MultiplicityAboveOne.reason}: {count} zeros cluster at k = {k0:.10g}")
            zeros.append(EigenK(k0=k0, multiplicity=count, residual=residual))
            continue
        if depth > 80:
            raise QuadratureNotConverged(f"quadrisection did not isolate the zeros in {box.as_list()}")

        children, counts = _split_counts(evaluator, box, delta, depth, **options)
        if sum(counts) != count:
            raise QuadratureNotConverged(f"child counts {counts} do not add up to {count} in {box.as_list()}")
        pending.extend((child, c, depth + 1) for child, c in zip(children, counts))

    zeros.sort(key=lambda z: (round(z.k0.real, 10), round(z.k0.imag, 10)))
    if certified:
        for zero in zeros:
            if abs(zero.k0) >= region.re_max:
                raise QuadratureNotConverged(f"zero {zero.k0} lies outside the certified radius {region.re_max}")
    return ZeroSearch(region=region, certified=certified, count=total, zeros=zeros)


def onset_depth(factory, low: float, high: float, region: Region, grid: Grid | None = None, tol: float = 1e-3,
                **options) -> float:
    """Bisects a depth parameter for the smallest value at which `region` holds a zero."""
    if count_zeros(factory(low), region, grid, **options) != 0 or count_zeros(factory(high), region, grid, **options) == 0:
        raise InvalidRegion(f"depths {low} and {high} do not bracket the appearance of a zero")
    while high - low > tol:
        middle = (low + high) / 2
        if count_zeros(factory(middle), region, grid, **options) == 0:
            low = middle
        else:
            high = middle
    return (low + high) / 2
