# src/kato_scat/reporting/csv_rows.py

import csv
import logging
from pathlib import Path
from typing import Iterable, Iterator


def csv_name(command: str, digest: str) -> str:
    return f"{command}-{digest}.csv"


def jost_rows(ks, e_values, e_prime, bounds=None) -> Iterator[dict]:
    """
    Yields one row per wavenumber for the Jost table.

    Args:
        ks: wavenumbers.
        e_values: e(k) at each wavenumber.
        e_prime: de/dk at each wavenumber.
        bounds: optional (ratio_s, ratio_e) pairs from the pointwise majorant check.
    """
    for index, k in enumerate(ks):
        row = {
            "k_re": float(k.real),
            "k_im": float(k.imag),
            "e_re": float(e_values[index].real),
            "e_im": float(e_values[index].imag),
            "de_re": float(e_prime[index].real),
            "de_im": float(e_prime[index].imag),
        }
        if bounds is not None:
            row["ratio_s"], row["ratio_e"] = (float(value) for value in bounds[index])
        yield row


def determinant_rows(table: Iterable[dict]) -> Iterator[dict]:
    for entry in table:
        yield {
            "k_re": entry["k"].real,
            "k_im": entry["k"].imag,
            "jost_re": entry["jost"].real,
            "jost_im": entry["jost"].imag,
            "det_re": entry["det"].real,
            "det_im": entry["det"].imag,
            "relative_gap": entry["relative_gap"],
            "order": entry["order"],
        }


def trajectory_rows(*results) -> Iterator[dict]:
    """(side, t, defect) rows from non-stationary ladders."""
    for result in results:
        for t, defect in zip(result.times, result.defects):
            yield {"side": result.side, "t": t, "defect": defect}


def write_csv(path, rows: Iterable[dict]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = list(rows)
    with path.open("w", newline="", encoding="utf-8") as handle:
        if rows:
            writer = csv.DictWriter(handle, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    logging.info(f"Wrote {len(rows)} rows to {path}")
    return path
