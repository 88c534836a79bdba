# src/kato_scat/cli/commands.py

"""
One function per subcommand. Each takes a resolved RunConfig and returns (Report, exit code);
KatoScatError subclasses propagate to the caller, which turns them into error payloads.
"""

import logging
from pathlib import Path

import numpy as np

from kato_scat.config.models import RunConfig
from kato_scat.config.settings import build_potential
from kato_scat.errors import NearSingularity
from kato_scat.evolution.nonstationary import nonstationary_W, nonstationary_Z, suggested_x_max
from kato_scat.evolution.propagator import UniformGrid
from kato_scat.jost.jost_solver import certified_radius, jost_data, jost_function, majorant_ratios
from kato_scat.opcalc.determinant import fredholm_det
from kato_scat.opcalc.grid import Grid
from kato_scat.opcalc.operators import DiscretizedOperator
from kato_scat.opcalc.subspace import gaussian_packet
from kato_scat.potential.oracle import step_jost
from kato_scat.potential.potential import Potential, first_moment, kato_verdict, resolvent_bound_constant
from kato_scat.reporting.csv_rows import csv_name, determinant_rows, jost_rows, trajectory_rows, write_csv
from kato_scat.reporting.records import Report, at_least, check, config_hash, flag, operator_key
from kato_scat.riesz.projection import projection_from_zeros
from kato_scat.spectrum.report import build_report, scan_singularities
from kato_scat.spectrum.zeros import locate_eigenvalues
from kato_scat.storage.result_store import ResultStore, dump_operator
from kato_scat.waveops.lattice import SpectralLattice
from kato_scat.waveops.verification import verify_completeness, verify_intertwining
from kato_scat.waveops.wave_operators import assemble, wave_operator_pair

EXIT_PASS = 0
EXIT_FAILED = 1
ORACLE_TOL = 1e-8
MIN_ORDER = 2.0
WAVE_X_MAX = 40.0


# --- shared setup ---

def _grid(config: RunConfig, potential: Potential, minimum: float = 1.0) -> Grid:
    x_max = config.grid.x_max or max(potential.support_hint(), minimum)
    return Grid.build(x_max, config.grid.n, potential.breakpoints(), config.grid.order)


def _wave_grid(config: RunConfig, potential: Potential) -> Grid:
    return _grid(config, potential, max(WAVE_X_MAX, 2 * potential.support_hint()))


def _lattice(config: RunConfig) -> SpectralLattice:
    section = config.lattice
    return SpectralLattice(section.big_lambda, section.n_kappa, section.n_negative, section.lambda_min)


def _finish(report: Report) -> tuple[Report, int]:
    code = EXIT_PASS if report.status == "pass" else EXIT_FAILED
    logging.info(f"'{report.command}' finished with status {report.status} (exit {code})")
    return report, code


def _side_file(config: RunConfig, rows) -> Path | None:
    """CSV next to the JSON output, named by the report hash; skipped without --out."""
    if config.runtime.out is None:
        return None
    path = Path(config.runtime.out).parent / csv_name(config.command, config_hash(config))
    return write_csv(path, rows)


def _store(config: RunConfig) -> ResultStore | None:
    return ResultStore(config.runtime.store) if config.runtime.store else None


def _step_oracle(potential: Potential):
    """(v0, a) when V is a single well starting at the origin, else None."""
    if potential.family != "stack" or len(potential.intervals) != 1:
        return None
    x0, x1, value = potential.intervals[0]
    return (value, x1) if x0 == 0.0 else None


def _spectral_setup(config: RunConfig, potential: Potential, grid: Grid):
    """Refuses spectral singularities, then builds the Riesz projection from the located zeros."""
    tol = config.tolerances
    radius = certified_radius(potential)
    scan = scan_singularities(potential, max(radius, 1e-2), tol.singular, grid,
                              residual_tol=tol.residual, threads=config.runtime.threads)
    if scan:
        closest = min(scan, key=lambda candidate: candidate.abs_e)
        raise NearSingularity(
            f"|e(k)| = {closest.abs_e:.3e} at real k = {closest.k:.6f}; wave operators are not bounded there"
        )
    search = locate_eigenvalues(potential, grid=grid, delta=tol.contour_margin, residual_tol=tol.residual,
                                threads=config.runtime.threads)
    return search.zeros, projection_from_zeros(potential, search.zeros, grid)


# --- subcommands ---

def cmd_spectrum(config: RunConfig) -> tuple[Report, int]:
    potential = build_potential(config.potential)
    grid = _grid(config, potential)
    tol = config.tolerances
    spectral = build_report(potential, grid, delta=tol.contour_margin, threshold=tol.singular,
                            residual_tol=tol.residual, threads=config.runtime.threads)
    results = {
        "eigen_k": [
            {"k0": zero.k0, "multiplicity": zero.multiplicity, "residual": zero.residual, "eigenvalue": zero.eigenvalue}
            for zero in spectral.eigen_k
        ],
        "eigenvalues": spectral.eigenvalues,
        "singularity_scan": spectral.singularity_scan,
        "kato_moment": spectral.kato_moment,
        "kato_verdict": kato_verdict(potential),
        "verdict": spectral.verdict,
        "certified": spectral.certified,
        "region": spectral.region.as_list() if spectral.region else None,
        "near_axis_count": spectral.near_axis_count,
        "notes": spectral.notes,
    }
    checks = {}
    if spectral.kato_moment < 1:
        checks["kato_consistency"] = flag(not spectral.eigen_k and not spectral.singularity_scan)
    return _finish(Report.build(config, results, checks))


def cmd_kato(config: RunConfig) -> tuple[Report, int]:
    potential = build_potential(config.potential)
    moment = first_moment(potential)
    results = {
        "kato_moment": moment,
        "kato_verdict": kato_verdict(potential),
        "resolvent_bound_constant": resolvent_bound_constant(potential),
    }
    return _finish(Report.build(config, results))


def cmd_jost(config: RunConfig) -> tuple[Report, int]:
    potential = build_potential(config.potential)
    grid = _grid(config, potential)
    ks = config.lattice.ks
    values, slopes, bounds = [], [], []
    for k in ks:
        data = jost_data(potential, k, grid)
        values.append(data.e_at_zero)
        slopes.append(data.e_prime)
        bounds.append(majorant_ratios(potential, data))
    values = np.asarray(values)
    slopes = np.asarray(slopes)

    checks = {"majorants": check(max(max(pair) for pair in bounds), 1.0)}
    oracle = _step_oracle(potential)
    if oracle is not None:
        exact = step_jost(oracle[0], oracle[1], np.asarray(ks))
        checks["oracle"] = check(float(np.max(np.abs(values - exact))), ORACLE_TOL)
    elif potential.is_zero:
        checks["oracle"] = check(float(np.max(np.abs(values - 1))), ORACLE_TOL)

    results = {
        "x_max": grid.x_max,
        "nodes": grid.size,
        "table": [
            {"k": k, "e": e, "de": de, "ratio_s": ratio[0], "ratio_e": ratio[1]}
            for k, e, de, ratio in zip(ks, values, slopes, bounds)
        ],
    }
    written = _side_file(config, jost_rows(ks, values, slopes, bounds))
    if written:
        results["csv"] = written
    return _finish(Report.build(config, results, checks))


def cmd_det_check(config: RunConfig) -> tuple[Report, int]:
    potential = build_potential(config.potential)
    grid = _grid(config, potential)
    table = []
    for k in config.lattice.ks:
        jost = complex(jost_function(potential, k, grid))
        det = fredholm_det(potential, k, n_nodes=config.grid.n, tol=config.tolerances.grid)
        scale = max(abs(jost), 1e-300)
        coarse = abs(det.value - jost)
        fine = abs(det.refined - jost)
        # already at rounding level on N nodes
        order = float(np.log2(coarse / fine)) if fine > 1e-13 * max(1.0, abs(jost)) else float("inf")
        table.append({
            "k": complex(k),
            "jost": jost,
            "det": det.extrapolated,
            "relative_gap": abs(det.extrapolated - jost) / scale,
            "order": order,
        })
        logging.info(f"k = {complex(k):.6g}: e = {jost:.12g}, det = {det.extrapolated:.12g}, order {order:.2f}")

    checks = {"determinant_identity": check(max(row["relative_gap"] for row in table), config.tolerances.determinant)}
    if not potential.is_zero:
        checks["refinement_order"] = at_least(min(row["order"] for row in table), MIN_ORDER)
    results = {"table": table}
    written = _side_file(config, determinant_rows(table))
    if written:
        results["csv"] = written
    return _finish(Report.build(config, results, checks))


def cmd_waveops(config: RunConfig) -> tuple[Report, int]:
    potential = build_potential(config.potential)
    grid = _wave_grid(config, potential)
    tol = config.tolerances
    lattice = _lattice(config)
    zeros, projection = _spectral_setup(config, potential, grid)

    pair = wave_operator_pair(potential, projection, grid, lattice, config.lattice.method,
                              threads=config.runtime.threads, quad_tol=tol.quadrature)
    completeness = verify_completeness(pair, grid)
    intertwining = verify_intertwining(pair, potential, grid)

    checks = {
        "zw_inverse": check(completeness["zw_defect"], tol.inverse),
        "wz_completeness": check(completeness["wz_defect"], tol.completeness),
        "eigen_kernel": check(completeness["kernel_defect"], tol.kernel),
        "resolvent_intertwining": check(intertwining["resolvent_defect"], tol.intertwining),
        "spectral_mapping": check(intertwining["spectral_distance"], tol.spectral_mapping),
    }
    results = {
        "eigenvalues": [zero.eigenvalue for zero in zeros],
        "projection_rank": projection.rank,
        "projection_idempotence": projection.idempotence_defect(),
        "method": pair.method,
        "lattice_hash": lattice.digest(),
        "grid": {"x_max": grid.x_max, "nodes": grid.size},
        "completeness": completeness,
        "intertwining": intertwining,
        "norms": {"W": pair.W.norm(), "Z": pair.Z.norm()},
    }

    key = operator_key(config)
    store = _store(config)
    if store is not None:
        for operator in (pair.W, pair.Z):
            store.save_operator(key, operator.label, operator.matrix, operator.weights, grid.x_max, lattice.digest())
        results["operator_key"] = key
    if config.runtime.out is not None:
        target = Path(config.runtime.out).parent / f"W-{key}.bin"
        results["dump"] = dump_operator(target, pair.W.matrix, grid.x_max, lattice.digest())

    report = Report.build(config, results, checks)
    if store is not None:
        store.insert_report(report.config_hash, report.command, report.status, report.model_dump())
        store.close()
    return _finish(report)


def _stationary(config, side, potential, projection, grid, lattice) -> DiscretizedOperator:
    """Stored W or Z for the same potential, grid and lattice; recomputed when absent."""
    store = _store(config)
    if store is not None:
        loaded = store.load_operator(operator_key(config), side)
        store.close()
        if loaded is not None:
            matrix, weights, x_max, lattice_hash = loaded
            if matrix.shape[0] == grid.size and np.isclose(x_max, grid.x_max) and lattice_hash == lattice.digest():
                logging.info(f"Using stored stationary {side} ({grid.size} nodes)")
                return DiscretizedOperator(matrix, weights, side)
            logging.warning(f"Stored {side} does not match the current grid or lattice; recomputing")
    return assemble(potential, projection, grid, side, lattice, config.lattice.method,
                    threads=config.runtime.threads, quad_tol=config.tolerances.quadrature)


def _evolution_grid(config: RunConfig, grid: Grid, packet) -> UniformGrid:
    evolution = config.evolution
    n_u = config.grid.n_u
    if evolution.x_max is not None:
        return UniformGrid(evolution.x_max, n_u)
    trial = UniformGrid(grid.x_max, n_u)
    reach = suggested_x_max(trial, packet(trial.points), max(evolution.t_ladder))
    x_max = max(reach, grid.x_max)
    logging.info(f"Uniform evolution domain sized to X = {x_max:g}")
    return UniformGrid(x_max, max(n_u, int(np.ceil(n_u * x_max / grid.x_max))))


def cmd_evolve_compare(config: RunConfig) -> tuple[Report, int]:
    potential = build_potential(config.potential)
    grid = _wave_grid(config, potential)
    lattice = _lattice(config)
    evolution = config.evolution
    _, projection = _spectral_setup(config, potential, grid)

    center = evolution.packet_center if evolution.packet_center is not None else 0.4 * grid.x_max

    def packet(x):
        return gaussian_packet(np.asarray(x, dtype=float), center, evolution.packet_width, evolution.packet_momentum)

    ugrid = _evolution_grid(config, grid, packet)
    w_operator = _stationary(config, "W", potential, projection, grid, lattice)
    z_operator = _stationary(config, "Z", potential, projection, grid, lattice)
    w_result = nonstationary_W(potential, projection, w_operator, packet, grid, ugrid, evolution.t_ladder, evolution.dt)
    z_result = nonstationary_Z(potential, projection, z_operator, packet, grid, ugrid, evolution.t_ladder, evolution.dt)

    tol = config.tolerances.nonstationary
    checks = {
        "w_final": check(w_result.final, tol),
        "w_monotone": flag(w_result.monotone or w_result.final <= tol * 1e-3),
        "z_final": check(z_result.final, tol),
        "z_monotone": flag(z_result.monotone or z_result.final <= tol * 1e-3),
    }
    results = {
        "uniform_grid": {"x_max": ugrid.x_max, "n": ugrid.n},
        "W": {"times": w_result.times, "defects": w_result.defects},
        "Z": {"times": z_result.times, "defects": z_result.defects},
        "absorbed_mass": max(state.absorbed_mass for state in w_result.states + z_result.states),
    }
    written = _side_file(config, trajectory_rows(w_result, z_result))
    if written:
        results["csv"] = written
    return _finish(Report.build(config, results, checks))


COMMANDS = {
    "spectrum": cmd_spectrum,
    "waveops": cmd_waveops,
    "evolve-compare": cmd_evolve_compare,
    "det-check": cmd_det_check,
    "jost": cmd_jost,
    "kato": cmd_kato,
}
