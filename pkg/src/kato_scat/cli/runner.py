# src/kato_scat/cli/runner.py

import argparse
import logging
import sys
from pathlib import Path

from kato_scat.cli.commands import COMMANDS
from kato_scat.config.settings import load_config
from kato_scat.errors import KatoScatError
from kato_scat.reporting.records import dumps

# flag destination -> (config section, key)
FLAG_SECTIONS = {
    "family": ("potential", "family"),
    "v0": ("potential", "v0"),
    "a": ("potential", "a"),
    "theta": ("potential", "theta"),
    "intervals": ("potential", "intervals"),
    "amplitude_re": ("potential", "amplitude_re"),
    "amplitude_im": ("potential", "amplitude_im"),
    "rate": ("potential", "rate"),
    "width": ("potential", "width"),
    "csv": ("potential", "csv"),
    "tail_kind": ("potential", "tail_kind"),
    "tail_rate": ("potential", "tail_rate"),
    "x_max": ("grid", "x_max"),
    "n": ("grid", "n"),
    "n_u": ("grid", "n_u"),
    "method": ("lattice", "method"),
    "big_lambda": ("lattice", "big_lambda"),
    "n_kappa": ("lattice", "n_kappa"),
    "k_values": ("lattice", "k_values"),
    "t_ladder": ("evolution", "t_ladder"),
    "evolve_x_max": ("evolution", "x_max"),
    "threads": ("runtime", "threads"),
    "log_level": ("runtime", "log_level"),
    "store": ("runtime", "store"),
    "out": ("runtime", "out"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description="Spectral and scattering checks for the half-line Schrodinger operator with a complex potential."
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="Run file with [section] key = value lines.")
    potential = common.add_argument_group("potential")
    potential.add_argument("--family", help="zero, step, stack, exponential, gaussian or sampled.")
    potential.add_argument("--v0", type=float, help="Step depth (negative for a well).")
    potential.add_argument("--a", type=float, help="Step width.")
    potential.add_argument("--theta", type=float, help="Phase of the step value.")
    potential.add_argument("--intervals", help="Stack intervals 'x0:x1:re:im, ...'.")
    potential.add_argument("--amplitude-re", type=float)
    potential.add_argument("--amplitude-im", type=float)
    potential.add_argument("--rate", type=float, help="Exponential decay rate.")
    potential.add_argument("--width", type=float, help="Gaussian width.")
    potential.add_argument("--csv", type=Path, help="Sampled potential: columns x, Re V[, Im V].")
    potential.add_argument("--tail-kind", choices=["exponential", "power"])
    potential.add_argument("--tail-rate", type=float)
    numerics = common.add_argument_group("numerics")
    numerics.add_argument("--x-max", type=float, help="Right end of the panel grid.")
    numerics.add_argument("--n", type=int, help="Panel grid nodes.")
    numerics.add_argument("--n-u", type=int, help="Uniform evolution grid points.")
    numerics.add_argument("--method", choices=["forms", "spectral"], help="Wave operator construction.")
    numerics.add_argument("--big-lambda", type=float, help="Spectral cutoff Lambda.")
    numerics.add_argument("--n-kappa", type=int, help="Nodes on the positive spectral half-line.")
    numerics.add_argument("--k-values", help="Wavenumbers for jost and det-check, e.g. '1j, 1+0.5j'.")
    numerics.add_argument("--t-ladder", help="Times for evolve-compare, e.g. '2, 4, 8, 16'.")
    numerics.add_argument("--evolve-x-max", type=float, help="Uniform evolution domain length.")
    runtime = common.add_argument_group("runtime")
    runtime.add_argument("--threads", type=int)
    runtime.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    runtime.add_argument("--store", type=Path, help="SQLite result store.")
    runtime.add_argument("--out", type=Path, help="JSON report path; CSV side files go next to it.")

    helps = {
        "spectrum": "Eigenvalues, singularity scan, Kato moment and similarity verdict.",
        "waveops": "Assemble W and Z and check completeness and intertwining.",
        "evolve-compare": "Time-dependent limits against the stationary wave operators.",
        "det-check": "Jost function against the Fredholm determinant.",
        "jost": "Jost function table with majorant ratios.",
        "kato": "Kato moment only.",
    }
    for name, text in helps.items():
        subparsers.add_parser(name, parents=[common], help=text)
    return parser


def collect_overrides(args: argparse.Namespace) -> dict:
    overrides: dict = {}
    for dest, (section, key) in FLAG_SECTIONS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides.setdefault(section, {})[key] = value
    return overrides


def run(argv=None) -> int:
    """Parses arguments, runs one subcommand and writes its JSON; returns the exit code."""
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args.config, collect_overrides(args), command=args.command)
        logging.getLogger().setLevel(config.runtime.log_level)
        logging.info(f"--- Running '{args.command}' ---")
        report, code = COMMANDS[args.command](config)
        text = report.to_json()
        if config.runtime.out is not None:
            config.runtime.out.parent.mkdir(parents=True, exist_ok=True)
            config.runtime.out.write_text(text + "\n", encoding="utf-8")
            logging.info(f"Report written to {config.runtime.out}")
        else:
            sys.stdout.write(text + "\n")
        return code
    except KatoScatError as error:
        logging.error(f"{args.command} stopped: {error.reason}: {error.message}")
        sys.stdout.write(dumps(error.to_dict()) + "\n")
        return error.exit_code
