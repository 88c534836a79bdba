# src/kato_scat/evolution/nonstationary.py

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from kato_scat.errors import DomainEscape
from kato_scat.evolution.propagator import (
    EvolutionState,
    UniformGrid,
    free_evolve,
    from_uniform,
    perturbed_evolve,
    resample_to_uniform,
    sine_coefficients,
)
from kato_scat.jost.jost_solver import propagate
from kato_scat.opcalc.grid import Grid
from kato_scat.opcalc.operators import resolvent_kernel
from kato_scat.potential.potential import Potential, factorize
from kato_scat.riesz.projection import Eigenpair, Projection, eigen_action
from kato_scat.waveops.lattice import SpectralLattice
from kato_scat.waveops.traces import trace_energy, trace_table

T_LADDER = (2.0, 4.0, 8.0, 16.0)
EDGE_FRACTION = 0.1
EDGE_MASS_TOL = 1e-4
REACH_SIGMAS = 4.0
TIME_STEP = 5e-3
EIGENMODE_STEP = 5e-4


def _steps(t: float, dt: float) -> int:
    return max(int(np.ceil(abs(t) / dt)), 1)


class UniformProjector:
    """(I - P) on uniform-grid vectors; eigenfunctions are re-evaluated at the uniform points."""

    def __init__(self, potential: Potential, projection: Projection, grid: Grid, ugrid: UniformGrid):
        self.projection = projection
        self.grid = grid
        self.ugrid = ugrid
        self.modes = []
        for pair in projection.pairs:
            batch = propagate(potential, [pair.k0], ugrid.points, ugrid.x_max, regular=False)
            self.modes.append((batch.e_values()[0], pair.norming))

    def __call__(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=complex)
        if self.projection.rank == 0:
            return values
        if self.modes:
            out = values.copy()
            for f, norming in self.modes:
                # (u, g) with g = conj(f)
                out = out - f * (self.ugrid.step * np.sum(values * f)) / norming
            return out
        panel = from_uniform(self.ugrid, values, self.grid.nodes)
        removed = self.projection.matrix @ panel
        return values - resample_to_uniform(self.grid, removed, self.ugrid)


def edge_mass(ugrid: UniformGrid, values: np.ndarray) -> float:
    """Fraction of |values|^2 in the last 10% of the domain."""
    power = np.abs(values) ** 2
    total = power.sum()
    if total == 0:
        return 0.0
    return float(power[ugrid.points > (1 - EDGE_FRACTION) * ugrid.x_max].sum() / total)


def suggested_x_max(ugrid: UniformGrid, vector: np.ndarray, t_max: float) -> float:
    """Domain that keeps the free orbit up to t_max inside 0.9 X_max, from the packet's moments."""
    power = np.abs(vector) ** 2
    total = max(power.sum(), 1e-300)
    x = ugrid.points
    centre = float(np.sum(x * power) / total)
    spread = float(np.sqrt(np.sum((x - centre) ** 2 * power) / total))
    spectrum = np.abs(sine_coefficients(vector)) ** 2
    k = ugrid.wavenumbers
    k_mean = float(np.sum(k * spectrum) / max(spectrum.sum(), 1e-300))
    k_spread = float(np.sqrt(np.sum((k - k_mean) ** 2 * spectrum) / max(spectrum.sum(), 1e-300)))
    reach = centre + 2 * (k_mean + REACH_SIGMAS * k_spread) * abs(t_max) + REACH_SIGMAS * spread
    return float(np.ceil(reach / (1 - EDGE_FRACTION)))


def _guard(ugrid: UniformGrid, orbit: np.ndarray, packet: np.ndarray, t_max: float):
    mass = edge_mass(ugrid, orbit)
    if mass > EDGE_MASS_TOL:
        hint = suggested_x_max(ugrid, packet, t_max)
        raise DomainEscape(
            f"{mass:.3e} of the packet reaches the last 10% of [0, {ugrid.x_max}] by t = {t_max}", hint
        )


@dataclass
class NonstationaryResult:
    side: str
    times: list
    defects: list
    states: list = field(default_factory=list)

    @property
    def final(self) -> float:
        return self.defects[-1]

    @property
    def monotone(self) -> bool:
        return all(b < a for a, b in zip(self.defects[:-1], self.defects[1:]))


def _ladder(side, potential, projection, operator, packet, t_ladder, grid, ugrid, dt, check):
    project = UniformProjector(potential, projection, grid, ugrid)
    phi_panel = packet(grid.nodes)
    phi_uniform = np.asarray(packet(ugrid.points), dtype=complex)
    target = operator.matrix @ phi_panel
    scale = max(grid.norm(phi_panel), 1e-300)

    times, defects, states = [], [], []
    for t in t_ladder:
        if side == "W":
            orbit = free_evolve(phi_uniform, -t, ugrid)
            _guard(ugrid, orbit, phi_uniform, t)
            values = perturbed_evolve(potential, project(orbit), t, ugrid, _steps(t, dt), check=check)
        else:
            orbit = perturbed_evolve(potential, project(phi_uniform), -t, ugrid, _steps(t, dt), check=check)
            _guard(ugrid, orbit, phi_uniform, t)
            values = free_evolve(orbit, t, ugrid)
        mapped = from_uniform(ugrid, values, grid.nodes)
        defect = grid.norm(mapped - target) / scale
        times.append(float(t))
        defects.append(float(defect))
        states.append(EvolutionState(t=float(t), vector=values, method="split-step", absorbed_mass=edge_mass(ugrid, values)))
        logging.info(f"Non-stationary {side}: t = {t:g}, |w_t - {side} phi| / |phi| = {defect:.3e}")
    return NonstationaryResult(side, times, defects, states)


def nonstationary_W(potential, projection, w_operator, packet, grid, ugrid, t_ladder=T_LADDER, dt=TIME_STEP,
                    check=False) -> NonstationaryResult:
    """
    w_t = exp(itL)(I - P)exp(-itT) phi along the t ladder against the stationary W phi.
    `packet` maps points to the values of phi.

    Raises:
        DomainEscape: the free orbit reaches the last 10% of the uniform domain.
    """
    return _ladder("W", potential, projection, w_operator, packet, t_ladder, grid, ugrid, dt, check)


def nonstationary_Z(potential, projection, z_operator, packet, grid, ugrid, t_ladder=T_LADDER, dt=TIME_STEP,
                    check=False) -> NonstationaryResult:
    """z_t = exp(itT) exp(-itL)(I - P) phi along the t ladder against the stationary Z phi."""
    return _ladder("Z", potential, projection, z_operator, packet, t_ladder, grid, ugrid, dt, check)


def semigroup_check(potential: Potential, pair, grid: Grid, ugrid: UniformGrid, basis: np.ndarray,
                    t: float = 1.0, s: float = 1.0, dt: float = TIME_STEP) -> dict:
    """
    Relative defects over the test vectors of
        U_V(t + s) - U_V(t) U_V(s),   U_V(t) - W U0(t) Z,   U_V(t) W - W U0(t),
    with U_V(t) = exp(itL)(I - P).
    """
    project = UniformProjector(potential, pair.projection, grid, ugrid)

    def u_v(values, time):
        return perturbed_evolve(potential, project(values), time, ugrid, _steps(time, dt), check=False)

    def to_panel(values):
        return from_uniform(ugrid, values, grid.nodes)

    def u_0_panel(panel, time):
        return to_panel(free_evolve(resample_to_uniform(grid, panel, ugrid), time, ugrid))

    worst = {"semigroup": 0.0, "factorization": 0.0, "time_intertwining": 0.0}
    w_mat, z_mat = pair.W.matrix, pair.Z.matrix
    for column in basis.T:
        scale = max(grid.norm(column), 1e-300)
        uniform = resample_to_uniform(grid, column, ugrid)
        joint = u_v(uniform, t + s)
        chained = u_v(u_v(uniform, s), t)
        worst["semigroup"] = max(worst["semigroup"], ugrid.norm(joint - chained) / ugrid.norm(uniform))

        direct = to_panel(u_v(uniform, t))
        factored = w_mat @ u_0_panel(z_mat @ column, t)
        worst["factorization"] = max(worst["factorization"], grid.norm(direct - factored) / scale)

        moved = to_panel(u_v(resample_to_uniform(grid, w_mat @ column, ugrid), t))
        carried = w_mat @ u_0_panel(column, t)
        worst["time_intertwining"] = max(worst["time_intertwining"], grid.norm(moved - carried) / scale)
    logging.info(
        f"Semigroup: {worst['semigroup']:.3e}, U_V = W U0 Z: {worst['factorization']:.3e}, "
        f"U_V W = W U0: {worst['time_intertwining']:.3e}"
    )
    return worst


def laplace_check(potential: Potential, projection: Projection, vector: np.ndarray, lam: complex, grid: Grid,
                  ugrid: UniformGrid, horizons=(4.0, 8.0, 16.0), dt: float = 2e-2) -> dict:
    """
    || int_0^T exp(i lam t) U_V(t) phi dt - i R_V(-lam)(I - P) phi || / ||phi|| for each horizon T,
    with Im lam > 0. Time samples every dt, Simpson rule.
    """
    project = UniformProjector(potential, projection, grid, ugrid)
    horizons = sorted(horizons)
    complement = vector - projection.matrix @ vector
    expected = 1j * (resolvent_kernel(potential, -lam, grid).matrix @ complement)
    scale = max(grid.norm(vector), 1e-300)

    samples = _steps(horizons[-1], dt)
    times = np.linspace(0.0, horizons[-1], samples + 1)
    step = times[1] - times[0]
    current = project(resample_to_uniform(grid, vector, ugrid))
    orbit = [current]
    for _ in range(samples):
        current = perturbed_evolve(potential, current, step, ugrid, 1, check=False)
        orbit.append(current)
    orbit = np.stack(orbit) * np.exp(1j * lam * times)[:, None]

    defects = {}
    for horizon in horizons:
        upto = int(round(horizon / step)) + 1
        integral = integrate.simpson(orbit[:upto], x=times[:upto], axis=0)
        defects[float(horizon)] = grid.norm(from_uniform(ugrid, integral, grid.nodes) - expected) / scale
        logging.info(f"Laplace check: T = {horizon:g}, defect = {defects[float(horizon)]:.3e}")
    return defects


def free_overlap(potential: Potential, vector: np.ndarray, ugrid: UniformGrid, t_max: float, dt: float):
    """Times and ||A U0(-t) phi||^2 on [0, t_max]."""
    a = factorize(potential).a(ugrid.points)
    times = np.linspace(0.0, t_max, _steps(t_max, dt) + 1)
    coefficients = sine_coefficients(vector)
    values = []
    for t in times:
        orbit = sine_coefficients(coefficients * np.exp(-1j * t * ugrid.wavenumbers ** 2))
        values.append(ugrid.norm(a * orbit) ** 2)
    return times, np.asarray(values)


def cook_tail(potential: Potential, vector: np.ndarray, ugrid: UniformGrid, starts=(1.0, 2.0, 4.0, 8.0),
              t_max: float = 16.0, dt: float = 1e-2) -> dict:
    """int_s^{t_max} ||A U0(-t) phi||^2 dt for each start s."""
    times, overlap = free_overlap(potential, vector, ugrid, t_max, dt)
    tails = {}
    for s in starts:
        keep = times >= s
        tails[float(s)] = float(integrate.simpson(overlap[keep], x=times[keep])) if keep.sum() > 1 else 0.0
    return tails


def parseval_check(potential: Potential, vector: np.ndarray, grid: Grid, ugrid: UniformGrid,
                   lattice: SpectralLattice, t_max: float = 40.0, dt: float = 1e-2, threads: int = 1) -> dict:
    """int_0^inf ||A U0(-t) phi||^2 dt against (1/2pi) int ||A R0(l + i0) phi||^2 dl."""
    uniform = resample_to_uniform(grid, vector, ugrid)
    times, overlap = free_overlap(potential, uniform, ugrid, t_max, dt)
    in_time = float(integrate.simpson(overlap, x=times))
    _, weights, values = trace_table(potential, vector, "A_R0", grid, lattice, threads=threads)
    in_energy = trace_energy(grid, weights, values) / (2 * np.pi)
    relative = abs(in_time - in_energy) / max(abs(in_energy), 1e-300)
    logging.info(f"Parseval: time side {in_time:.6g}, spectral side {in_energy:.6g}, relative gap {relative:.3e}")
    return {"time_side": in_time, "spectral_side": in_energy, "relative_gap": relative}


def eigenmode_defect(potential: Potential, pair: Eigenpair, ugrid: UniformGrid, t: float = 1.0,
                     dt: float = EIGENMODE_STEP) -> float:
    """|| exp(itL) f - exp(it mu) f || / || f || with f re-evaluated on the uniform grid."""
    f = propagate(potential, [pair.k0], ugrid.points, ugrid.x_max, regular=False).e_values()[0]
    moved = perturbed_evolve(potential, f, t, ugrid, _steps(t, dt), check=False)
    expected = eigen_action(Eigenpair(pair.k0, f, np.conj(f), pair.norming, pair.norming_exact), t)
    return ugrid.norm(moved - expected) / ugrid.norm(f)
