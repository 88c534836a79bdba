# src/kato_scat/jost/jost_solver.py

import logging
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from kato_scat.errors import ConfigError, GridTooCoarse, QuadratureNotConverged, TailTooShort
from kato_scat.opcalc.grid import Grid
from kato_scat.potential.potential import Potential, jost_majorant, regular_majorant

DEFAULT_NODES = 2000
SMALL_CELL = 1e-3


def _validate_k(ks: np.ndarray) -> np.ndarray:
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    if np.any(ks.imag < 0):
        raise ConfigError("wavenumbers must satisfy Im k >= 0")
    if np.any(ks == 0):
        raise ConfigError("k = 0 is excluded")
    return ks


def _validate_real_or_upper(ks: np.ndarray) -> np.ndarray:
    """Like `_validate_k` but allows negative real k (boundary values from below the cut)."""
    ks = np.atleast_1d(np.asarray(ks, dtype=complex))
    if np.any(ks == 0):
        raise ConfigError("k = 0 is excluded")
    if np.any(ks.imag < -1e-14):
        raise ConfigError("wavenumbers must satisfy Im k >= 0")
    return ks


def _cell(q: np.ndarray, h: float):
    """
    cos(kappa h), sin(kappa h)/kappa and their derivatives in q = kappa^2.
    All four are entire in q, so the branch of kappa does not matter.
    """
    kappa = np.sqrt(q)
    z = kappa * h
    small = np.abs(z) < SMALL_CELL
    safe_kappa = np.where(small, 1.0, kappa)
    safe_q = np.where(small, 1.0, q)
    c = np.cos(z)
    s = np.where(small, h * (1 - z ** 2 / 6 + z ** 4 / 120), np.sin(z) / safe_kappa)
    dc = -h * s / 2
    ds = np.where(small, -h ** 3 / 6 + q * h ** 5 / 60, (h * c - s) / (2 * safe_q))
    return c, s, dc, ds


@dataclass(frozen=True, eq=False)
class JostBatch:
    """
    Regular and Jost solutions for a batch of wavenumbers, stored in scaled form
    s(x,k) e^{ikx} and e(x,k) e^{-ikx}, which stay bounded for every k in the closed upper half-plane.
    Arrays are indexed [k, point].
    """

    ks: np.ndarray
    points: np.ndarray
    s_scaled: np.ndarray | None
    e_scaled: np.ndarray
    e_at_zero: np.ndarray
    ex_at_zero: np.ndarray
    e_prime: np.ndarray | None
    error_estimate: float

    def s_values(self) -> np.ndarray:
        return self.s_scaled * np.exp(-1j * self.ks[:, None] * self.points[None, :])

    def e_values(self) -> np.ndarray:
        return self.e_scaled * np.exp(1j * self.ks[:, None] * self.points[None, :])


@dataclass(frozen=True, eq=False)
class JostData:
    """Solutions for one k on a grid, kept in the same scaled form as `JostBatch`."""

    k: complex
    nodes: np.ndarray
    s_scaled: np.ndarray
    e_scaled: np.ndarray
    e_at_zero: complex
    ex_at_zero: complex
    e_prime: complex | None

    @property
    def s_values(self) -> np.ndarray:
        return self.s_scaled * np.exp(-1j * self.k * self.nodes)

    @property
    def e_values(self) -> np.ndarray:
        return self.e_scaled * np.exp(1j * self.k * self.nodes)


def _forward(ks, knots, v_mid):
    """Regular solution, scaled by e^{ikx}, at every knot."""
    out = np.empty((ks.size, knots.size), dtype=complex)
    y = np.zeros(ks.size, dtype=complex)
    yp = np.ones(ks.size, dtype=complex)
    out[:, 0] = y
    k_sq = ks ** 2
    for m, h in enumerate(np.diff(knots)):
        c, s, _, _ = _cell(k_sq - v_mid[m], h)
        phase = np.exp(1j * ks * h)
        y, yp = phase * (c * y + s * yp), phase * (c * yp - (k_sq - v_mid[m]) * s * y)
        out[:, m + 1] = y
    return out


def _backward(ks, knots, v_mid, derivative):
    """Jost solution, scaled by e^{-ikx}, at every knot; optionally its k-derivative at 0."""
    out = np.empty((ks.size, knots.size), dtype=complex)
    u = np.ones(ks.size, dtype=complex)
    up = 1j * ks
    du = np.zeros(ks.size, dtype=complex)
    dup = np.full(ks.size, 1j, dtype=complex)
    out[:, -1] = u
    k_sq = ks ** 2
    steps = np.diff(knots)
    for m in range(steps.size - 1, -1, -1):
        h = steps[m]
        q = k_sq - v_mid[m]
        c, s, dc, ds = _cell(q, h)
        phase = np.exp(1j * ks * h)
        new_u = phase * (c * u - s * up)
        new_up = phase * (q * s * u + c * up)
        if derivative:
            dq = 2 * ks
            qs_d = s + q * ds
            new_du = 1j * h * new_u + phase * (dq * (dc * u - ds * up) + c * du - s * dup)
            new_dup = 1j * h * new_up + phase * (dq * (qs_d * u + dc * up) + q * s * du + c * dup)
            du, dup = new_du, new_dup
        u, up = new_u, new_up
        out[:, m] = u
    return out, up, (du if derivative else None)


def _sweep(potential, ks, knots, regular, derivative):
    v_mid = potential((knots[:-1] + knots[1:]) / 2)
    s_knots = _forward(ks, knots, v_mid) if regular else None
    e_knots, ex0, de0 = _backward(ks, knots, v_mid, derivative)
    return s_knots, e_knots, ex0, de0


def propagate(
    potential: Potential,
    ks,
    points,
    x_max: float | None = None,
    mesh=None,
    regular: bool = True,
    derivative: bool = False,
    grid_tol: float = 1e-4,
    tail_tol: float = 1e-8,
    allow_lower: bool = False,
) -> JostBatch:
    """
    Solves -y'' + V y = k^2 y for the regular and Jost solutions at `points`.

    V is frozen at the midpoint of every step between consecutive knots and (y, y') is
    carried through each step by the exact constant-coefficient transfer matrix. This is
    exact for piecewise-constant V whose breakpoints are knots; otherwise the sweep is
    repeated on halved steps and Richardson-extrapolated. Knots are the output points, the
    optional `mesh`, 0, x_max and the breakpoints of V.

    Raises:
        TailTooShort: the potential left beyond x_max can move e(x,k) by more than tail_tol.
        GridTooCoarse: halving the steps moves e(0,k), or s(x,k) relative to its peak, by more
            than grid_tol.
    """
    ks = _validate_real_or_upper(ks) if allow_lower else _validate_k(ks)
    points = np.atleast_1d(np.asarray(points, dtype=float))
    x_end = float(max(points.max(), x_max or 0.0))
    if x_end <= 0:
        x_end = 1.0

    if not potential.is_zero and potential.tail_moment(x_end) > 0:
        k_min = float(np.min(np.abs(ks)))
        tail = float(jost_majorant(potential, [x_end], k_min)[0])
        if tail > tail_tol:
            raise TailTooShort(f"potential beyond X_max = {x_end} moves e(x,k) by up to {tail:.3e}")

    extra = [0.0, x_end] + [b for b in potential.breakpoints() if b < x_end]
    knots = np.union1d(points, extra)
    if mesh is not None:
        knots = np.union1d(knots, np.asarray(mesh, dtype=float))
    where = np.searchsorted(knots, points)

    s_knots, e_knots, ex0, de0 = _sweep(potential, ks, knots, regular, derivative)
    error = 0.0
    if not potential.is_piecewise_constant:
        fine = np.sort(np.concatenate([knots, (knots[:-1] + knots[1:]) / 2]))
        s_fine, e_fine, ex_fine, de_fine = _sweep(potential, ks, fine, regular, derivative)
        if regular:
            drift = float(np.max(np.abs(s_fine[:, ::2] - s_knots)) / max(np.max(np.abs(s_fine)), 1e-300))
            if drift > grid_tol:
                raise GridTooCoarse(f"step halving moved s(x,k) by {drift:.3e} relative (> {grid_tol})")
        error = float(np.max(np.abs(e_fine[:, 0] - e_knots[:, 0])))
        if error > grid_tol:
            raise GridTooCoarse(f"step halving moved e(k) by {error:.3e} (> {grid_tol})")
        e_knots = (4 * e_fine[:, ::2] - e_knots) / 3
        ex0 = (4 * ex_fine - ex0) / 3
        if regular:
            s_knots = (4 * s_fine[:, ::2] - s_knots) / 3
        if derivative:
            de0 = (4 * de_fine - de0) / 3

    return JostBatch(
        ks=ks,
        points=points,
        s_scaled=s_knots[:, where] if regular else None,
        e_scaled=e_knots[:, where],
        e_at_zero=e_knots[:, 0],
        ex_at_zero=ex0,
        e_prime=de0,
        error_estimate=error,
    )


def default_grid(potential: Potential, n_nodes: int = DEFAULT_NODES, x_max: float | None = None) -> Grid:
    if x_max is None:
        x_max = max(potential.support_hint(), 1.0)
    return Grid.build(x_max, n_nodes, potential.breakpoints())


def jost_data(potential: Potential, k: complex, grid: Grid | None = None, derivative: bool = True) -> JostData:
    grid = grid or default_grid(potential)
    batch = propagate(potential, [k], grid.nodes, grid.x_max, mesh=grid.knots, regular=True, derivative=derivative)
    return JostData(
        k=complex(k),
        nodes=grid.nodes,
        s_scaled=batch.s_scaled[0],
        e_scaled=batch.e_scaled[0],
        e_at_zero=complex(batch.e_at_zero[0]),
        ex_at_zero=complex(batch.ex_at_zero[0]),
        e_prime=complex(batch.e_prime[0]) if derivative else None,
    )


def regular_solution(potential: Potential, k: complex, grid: Grid, grid_tol: float = 1e-4) -> np.ndarray:
    """
    s(x,k) at the grid nodes.

    Raises:
        GridTooCoarse: the step-halving check on s fails.
    """
    return propagate(potential, [k], grid.nodes, grid.x_max, mesh=grid.knots, grid_tol=grid_tol).s_values()[0]


def jost_solution(potential: Potential, k: complex, grid: Grid, mode: str = "direct") -> np.ndarray:
    """e(x,k) at the grid nodes; `mode="iteration"` sums the Neumann series instead."""
    if mode == "iteration":
        return neumann_jost(potential, k, grid)[0]
    if mode != "direct":
        raise ConfigError(f"unknown Jost mode '{mode}'")
    return propagate(potential, [k], grid.nodes, grid.x_max, mesh=grid.knots, regular=False).e_values()[0]


def jost_function(potential: Potential, k, grid: Grid | None = None):
    """e(k) = e(0,k); scalar in, scalar out, array in, array out."""
    scalar = np.ndim(k) == 0
    if potential.is_zero:
        values = np.ones(np.shape(np.atleast_1d(k)), dtype=complex)
        return complex(values[0]) if scalar else values
    grid = grid or default_grid(potential)
    values = propagate(potential, k, [0.0], grid.x_max, mesh=grid.knots, regular=False).e_at_zero
    return complex(values[0]) if scalar else values


def jost_derivative(potential: Potential, k, grid: Grid | None = None, check: bool = False, check_tol: float = 1e-5):
    """de/dk from the differentiated transfer matrices, optionally checked by a central difference."""
    scalar = np.ndim(k) == 0
    if potential.is_zero:
        values = np.zeros(np.shape(np.atleast_1d(k)), dtype=complex)
        return complex(values[0]) if scalar else values
    grid = grid or default_grid(potential)
    ks = np.atleast_1d(np.asarray(k, dtype=complex))
    values = propagate(potential, ks, [0.0], grid.x_max, mesh=grid.knots, regular=False, derivative=True).e_prime
    if check:
        # real-direction stencil stays in the closed upper half-plane
        step = 1e-5 * np.maximum(1.0, np.abs(ks))
        difference = (jost_function(potential, ks + step, grid) - jost_function(potential, ks - step, grid)) / (2 * step)
        mismatch = np.abs(difference - values) / np.maximum(np.abs(values), 1.0)
        if np.any(mismatch > check_tol):
            raise GridTooCoarse(f"finite-difference check of de/dk failed: {mismatch.max():.3e}")
    return complex(values[0]) if scalar else values


def _panel_integration_matrix(order: int) -> np.ndarray:
    """S[i, j] = integral of the j-th Lagrange basis polynomial from tau_i to 1 on [-1, 1]."""
    legendre = np.polynomial.legendre
    tau, _ = legendre.leggauss(order)
    vandermonde = legendre.legvander(tau, order - 1)
    coefficients = np.linalg.inv(vandermonde)
    upper = np.empty((order, order))
    for n in range(order):
        unit = np.zeros(order)
        unit[n] = 1.0
        antiderivative = legendre.legint(unit)
        upper[:, n] = legendre.legval(1.0, antiderivative) - legendre.legval(tau, antiderivative)
    return upper @ coefficients


def neumann_jost(potential: Potential, k: complex, grid: Grid, tol: float = 1e-15, max_terms: int = 400):
    """
    Jost solution from the Neumann series of
        u(x) = 1 + int_x^inf (e^{2ik(xi-x)} - 1)/(2ik) V(xi) u(xi) dxi,   u = e(x,k) e^{-ikx}.

    Each panel uses its own Gauss nodes for the partial integral from x_i to the panel end.
    Returns (e at nodes, e(k), number of terms).

    Raises:
        QuadratureNotConverged: the factorial majorant rho^n/n! does not drop below tol
            within max_terms terms.
    """
    k = complex(_validate_k(k)[0])
    rho = float(potential.tail_majorant(0.0, abs(k))[0])
    needed, bound = 0, 1.0
    while bound * np.exp(rho) > tol and needed < max_terms:
        needed += 1
        bound *= rho / needed
    if needed >= max_terms:
        raise QuadratureNotConverged(f"Neumann majorant rho = {rho:.3f} needs more than {max_terms} terms")

    x = grid.nodes
    v = potential(x)
    kernel = np.expm1(2j * k * (x[None, :] - x[:, None])) / (2j * k)
    panel = np.repeat(np.arange(grid.panel_count), grid.order)
    matrix = np.where(panel[None, :] > panel[:, None], kernel * (v * grid.weights)[None, :], 0.0)
    local = _panel_integration_matrix(grid.order)
    for p, block in enumerate(grid.panel_slices()):
        half = (grid.panel_edges[p + 1] - grid.panel_edges[p]) / 2
        matrix[block, block] = half * local * kernel[block, block] * v[None, block]
    row_zero = np.expm1(2j * k * x) / (2j * k) * v * grid.weights

    u = np.ones(x.size, dtype=complex)
    term = u.copy()
    terms = 0
    for terms in range(1, max_terms + 1):
        term = matrix @ term
        u = u + term
        if np.max(np.abs(term)) <= tol * np.max(np.abs(u)) and terms >= min(needed, 3):
            break
    e0 = 1.0 + row_zero @ u
    logging.debug(f"Neumann series at k = {k}: {terms} terms (majorant asks for {needed})")
    return u * np.exp(1j * k * x), complex(e0), terms


def majorant_ratios(potential: Potential, data: JostData) -> tuple[float, float]:
    """
    Largest ratio of |s e^{ikx}| and |e e^{-ikx} - 1| to their pointwise majorants over the nodes.
    Both ratios are <= 1 whenever the computed solutions respect the bounds.
    """
    x = data.nodes
    k = data.k
    s_scaled = np.abs(data.s_scaled)
    e_scaled = np.abs(data.e_scaled - 1)
    bound_s = regular_majorant(potential, x, k)
    bound_e = jost_majorant(potential, x, k)
    slack = 1e-13
    ratio_s = np.max(s_scaled / (bound_s * (1 + 1e-9) + slack))
    ratio_e = np.max(e_scaled / (bound_e * (1 + 1e-9) + slack))
    return float(ratio_s), float(ratio_e)


def certified_radius(potential: Potential, barrier: float = 0.5) -> float:
    """Radius R with |e(k) - 1| < barrier for all |k| >= R, so every zero has |k| < R."""
    if potential.is_zero:
        return 0.0

    def excess(radius):
        return float(np.expm1(potential.tail_majorant(0.0, radius)[0])) - barrier

    upper = 1.0
    while excess(upper) >= 0:
        upper *= 2.0
    lower = upper / 2.0
    if excess(lower) < 0:
        return lower
    return float(optimize.brentq(excess, lower, upper, xtol=1e-6)) * 1.01


def norming_integral(data: JostData) -> complex:
    """Closed form of int e(x,k0)^2 dx at a zero k0 of e: -e'(k0) e_x(0,k0) / (2 k0)."""
    if data.e_prime is None:
        raise ConfigError("norming integral needs the k-derivative of e")
    return -data.e_prime * data.ex_at_zero / (2 * data.k)


def ode_residual(potential: Potential, k: complex, x_max: float, step: float = 1e-2) -> tuple[float, float]:
    """
    Three-point residual of -y'' + V y - k^2 y for the computed regular and Jost solutions on a
    uniform lattice cut at the breakpoints of V. Returns (relative residual, residual / step^2).
    """
    cuts = sorted({0.0, float(x_max)} | {b for b in potential.breakpoints() if b < x_max})
    pieces = []
    for left, right in zip(cuts[:-1], cuts[1:]):
        count = max(int(np.ceil((right - left) / step)), 4)
        pieces.append(np.linspace(left, right, count + 1))
    points = np.unique(np.concatenate(pieces))
    batch = propagate(potential, [k], points, x_max)
    solutions = (batch.s_values()[0], batch.e_values()[0])

    worst = 0.0
    h_max = 0.0
    for piece in pieces:
        h = piece[1] - piece[0]
        h_max = max(h_max, h)
        index = np.searchsorted(points, piece)
        # interior of the piece only; V jumps at its ends
        v = potential(piece[1:-1])
        for values in solutions:
            y = values[index]
            second = (y[2:] - 2 * y[1:-1] + y[:-2]) / h ** 2
            residual = -second + (v - k ** 2) * y[1:-1]
            scale = max(float(np.max(np.abs(values))), 1e-300)
            worst = max(worst, float(np.max(np.abs(residual))) / scale)
    return worst, worst / h_max ** 2
