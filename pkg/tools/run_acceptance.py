# tools/run_acceptance.py

import sys
import argparse
from pathlib import Path
import time
import logging

import numpy as np

# --- Setup ---
logging.basicConfig(level=logging.INFO, format='%(asctime)s - %(levelname)s - %(message)s', stream=sys.stdout)

script_dir = Path(__file__).resolve().parent
project_root = script_dir.parent
src_dir = project_root / "src"
sys.path.insert(0, str(src_dir))

from kato_scat.cli.commands import cmd_evolve_compare, cmd_waveops
from kato_scat.config.settings import load_config
from kato_scat.errors import KatoScatError
from kato_scat.evolution.nonstationary import (
    cook_tail,
    eigenmode_defect,
    laplace_check,
    parseval_check,
    semigroup_check,
)
from kato_scat.evolution.propagator import UniformGrid
from kato_scat.jost.jost_solver import default_grid, jost_function, jost_data, majorant_ratios
from kato_scat.opcalc.determinant import (
    cauchy_riemann_defect,
    convergence_order,
    fredholm_det,
    ordering_defect,
    support_grid,
    trace_defect,
)
from kato_scat.opcalc.grid import Grid
from kato_scat.opcalc.probes import (
    free_bound_probe,
    free_resolvent_fd_defect,
    q_uniform_bound_probe,
    resolvent_identity_defect,
    weighted_bound_probe,
)
from kato_scat.opcalc.subspace import band_basis, gaussian_packet, packet_basis
from kato_scat.potential.oracle import bound_state_count, step_jost
from kato_scat.potential.potential import Potential, first_moment
from kato_scat.reporting.records import dumps
from kato_scat.riesz.projection import (
    commutator_identity_check,
    eigenpair,
    lp_commutation_defect,
    projection_contour,
    projection_from_zeros,
)
from kato_scat.spectrum.report import build_report
from kato_scat.spectrum.zeros import Region, count_zeros, locate_eigenvalues, onset_depth
from kato_scat.waveops.lattice import SpectralLattice
from kato_scat.waveops.traces import hardy_ladder
from kato_scat.waveops.wave_operators import wave_operator_pair

UPPER_KS = [complex(re, im) for re in (-2.0, 0.0, 1.0, 2.5, 4.0) for im in (0.3, 1.5)]


# --- Acceptance Steps ---

def step_free_case() -> dict:
    zero = Potential.zero()
    grid = Grid.build(20.0, 200)
    pair = wave_operator_pair(zero, projection_from_zeros(zero, [], grid), grid)
    identity = np.eye(grid.size)
    return {
        "jost": float(np.max(np.abs(jost_function(zero, np.array(UPPER_KS)) - 1))),
        "W": float(np.max(np.abs(pair.W.matrix - identity))),
        "Z": float(np.max(np.abs(pair.Z.matrix - identity))),
    }


def step_jost_oracle() -> dict:
    worst_gap, worst_ratio = 0.0, 0.0
    for depth in (-1.9, -3.0, -10.0):
        potential = Potential.step(depth, 1.0)
        grid = default_grid(potential, 400)
        for k in UPPER_KS:
            data = jost_data(potential, k, grid)
            worst_gap = max(worst_gap, abs(data.e_at_zero - complex(step_jost(depth, 1.0, k))))
            worst_ratio = max(worst_ratio, *majorant_ratios(potential, data))
    return {"oracle_gap": worst_gap, "majorant_ratio": worst_ratio}


def step_threshold(samples: int) -> dict:
    region = Region(-0.5, 0.5, 0.002, 3.5)
    onset = onset_depth(lambda depth: Potential.step(-depth, 1.0), 2.0, 3.0, region, delta=0.002)
    rng = np.random.default_rng(7)
    outer = Region(-0.5, 0.5, 0.02, 6.0)
    mismatches = 0
    for depth in rng.uniform(0.5, 30.0, samples):
        if count_zeros(Potential.step(-depth, 1.0), outer) != bound_state_count(depth):
            mismatches += 1
    return {"onset": onset, "bracketed": 2.4 < onset < 2.5, "count_mismatches": mismatches}


def step_kato() -> dict:
    battery = [Potential.step(-1.9, 1.0), Potential.step(1.5, 1.0, 0.7), Potential.exponential(-0.9, 1.0),
               Potential.gaussian(0.5 - 0.5j, 1.0)]
    failures = []
    for potential in battery:
        if first_moment(potential) >= 1:
            continue
        report = build_report(potential)
        if report.eigen_k or report.singularity_scan:
            failures.append(potential.label)
    return {"failures": failures}


def step_determinant() -> dict:
    worst, orders = 0.0, []
    for potential in (Potential.step(-3.0, 1.0), Potential.exponential(-2.0, 1.0)):
        grid = default_grid(potential)
        for k in (0.5j, 1j, 2j, 1 + 1j, 2 + 0.5j):
            jost = complex(jost_function(potential, k, grid))
            det = fredholm_det(potential, k, n_nodes=2000)
            worst = max(worst, abs(det.extrapolated - jost) / abs(jost))
            orders.append(convergence_order(potential, k, jost, 200))
    potential = Potential.step(-3.0, 1.0)
    small = support_grid(potential, 200)
    return {
        "relative_gap": worst,
        "min_order": min(orders),
        "ordering": ordering_defect(potential, 1j, small),
        "trace": trace_defect(potential, 1j, small),
        "cauchy_riemann": cauchy_riemann_defect(potential, 1 + 1j, small),
    }


def step_bounds() -> dict:
    ks = [complex(re, im) for re in np.linspace(-3, 3, 5) for im in np.linspace(0.2, 3, 5)]
    held = True
    for potential in (Potential.step(-1.9, 1.0), Potential.step(-3.0, 1.0, 0.4), Potential.exponential(-1 + 1j, 2.0)):
        grid = default_grid(potential, 400)
        samples = weighted_bound_probe(potential, ks, grid) + free_bound_probe(potential, ks, grid)
        held = held and all(sample.holds for sample in samples)

    deep = Potential.step(-3.0, 1.0)
    grid = Grid.build(10.0, 400, deep.breakpoints())
    mu = locate_eigenvalues(deep, grid=grid).zeros[0].eigenvalue
    lams = [complex(re, im) for re in np.linspace(-4, 4, 9) for im in (-1.0, 0.5, 1.0)]
    return {
        "bounds_hold": held,
        "q_uniform": q_uniform_bound_probe(deep, lams, [mu], 0.3, grid),
        "resolvent_identity": resolvent_identity_defect(deep, -1 + 1j, grid),
        "free_fd": free_resolvent_fd_defect(-1 + 1j, 10.0, 400),
    }


def step_riesz() -> dict:
    potential = Potential.step(-3.0, 1.0)
    grid = Grid.build(20.0, 400, potential.breakpoints())
    zeros = locate_eigenvalues(potential, grid=grid).zeros
    rank1 = projection_from_zeros(potential, zeros, grid)
    contour = projection_contour(potential, [zero.eigenvalue for zero in zeros], grid, n_quad=128)
    ladder = commutator_identity_check(potential, rank1, grid)
    pair = eigenpair(potential, zeros[0].k0, grid, residual_step=None)
    return {
        "eigenmode_rotation": eigenmode_defect(potential, pair, UniformGrid(40.0, 4096)),
        "rank": rank1.rank,
        "zero_count": len(zeros),
        "cross_validation": rank1.distance(contour),
        "idempotence": rank1.idempotence_defect(),
        "commutation": lp_commutation_defect(potential, rank1, grid, packet_basis(grid)),
        "commutator_ladder": ladder.subspace_defects,
        "commutator_decreasing": ladder.decreasing,
        "commutator_final_relative": ladder.final / ladder.p_norm,
    }


def step_command(command, depth: float, n: int, store: Path) -> dict:
    config = load_config(overrides={
        "potential": {"family": "step", "v0": depth, "a": 1.0},
        "grid": {"n": n, "x_max": 40.0},
        "runtime": {"store": store},
    }, command=command)
    runner = cmd_waveops if command == "waveops" else cmd_evolve_compare
    report, code = runner(config)
    return {"status": report.status, "exit_code": code, "checks": report.checks}


def step_semigroup(n: int) -> dict:
    potential = Potential.step(-1.9, 1.0)
    grid = Grid.build(40.0, n, potential.breakpoints())
    projection = projection_from_zeros(potential, [], grid)
    pair = wave_operator_pair(potential, projection, grid, SpectralLattice(), method="spectral")
    ugrid = UniformGrid(80.0, 4096)
    basis = band_basis(grid, count=3)
    defects = semigroup_check(potential, pair, grid, ugrid, basis, dt=1e-3)
    laplace = laplace_check(potential, projection, packet_basis(grid, count=3)[:, 0], 1j, grid, ugrid)
    return {**defects, "laplace": laplace}


def step_traces(n: int) -> dict:
    potential = Potential.step(-1.9, 1.0)
    grid = Grid.build(20.0, n, potential.breakpoints())
    lattice = SpectralLattice()
    vector = gaussian_packet(grid.nodes, 6.0, 1.0, 1.0)
    ladder = hardy_ladder(potential, vector, "A_R0", grid, lattice.coarsened())
    ugrid = UniformGrid(80.0, 4096)
    return {
        "hardy_energies": ladder.energies,
        "hardy_stable": ladder.stable,
        "hardy_mean_square_decreasing": ladder.mean_square_decreasing,
        "parseval": parseval_check(potential, vector, grid, ugrid, lattice),
        "cook_tail": cook_tail(potential, gaussian_packet(ugrid.points, 6.0, 1.0, -1.0), ugrid),
    }


# --- Main Orchestrator ---

def main():
    """Runs the acceptance battery step by step and prints one JSON summary."""
    parser = argparse.ArgumentParser(description="Acceptance battery for kato-scat.")
    parser.add_argument("--samples", type=int, default=20, help="Random depths in the zero-count check.")
    parser.add_argument("--n", type=int, default=800, help="Grid nodes for the wave-operator steps.")
    parser.add_argument("--quick", action="store_true", help="Skip the wave-operator and evolution steps.")
    args = parser.parse_args()

    store = project_root / "data" / "acceptance.db"
    steps = [
        ("free case", step_free_case),
        ("jost oracle", step_jost_oracle),
        ("spectrum threshold", lambda: step_threshold(args.samples)),
        ("kato consistency", step_kato),
        ("determinant identity", step_determinant),
        ("resolvent bounds", step_bounds),
        ("riesz projection", step_riesz),
    ]
    if not args.quick:
        steps += [
            ("wave operators, no eigenvalue", lambda: step_command("waveops", -1.9, args.n, store)),
            ("wave operators, one eigenvalue", lambda: step_command("waveops", -3.0, args.n, store)),
            ("non-stationary limits", lambda: step_command("evolve-compare", -1.9, args.n, store)),
            ("semigroup and laplace", lambda: step_semigroup(args.n)),
            ("boundary traces", lambda: step_traces(args.n)),
        ]

    summary = {}
    pipeline_start_time = time.time()
    for number, (name, step) in enumerate(steps, start=1):
        logging.info(f"--- STEP {number}: {name} ---")
        start = time.time()
        try:
            summary[name] = step()
        except KatoScatError as error:
            logging.error(f"Step '{name}' stopped: {error.reason}: {error.message}")
            summary[name] = error.to_dict()
        logging.info(f"--- STEP {number} done in {time.time() - start:.2f} seconds ---")

    logging.info(f"--- ACCEPTANCE BATTERY COMPLETED in {time.time() - pipeline_start_time:.2f} seconds ---")
    print(dumps(summary))


if __name__ == "__main__":
    main()
