"""
Run artifacts: result.json plus schema-stable CSV tables.

Every CSV starts with one "# units: ..." comment line, then a fixed header.
Floats are written with 17 significant digits so identical runs produce
identical bytes. Condition estimates are only estimates and keep 6 digits.
"""

import csv
import logging
from pathlib import Path
from typing import Iterable, List, Sequence

import numpy as np

from casimir_bem.schemas.result_schema import (
    UNITS,
    BreakdownRow,
    RunResult,
    SpectrumSample,
    SweepRow,
)

logger = logging.getLogger(__name__)

SPECTRUM_COLUMNS = ("kappa", "integrand", "formulation", "precision", "condition_estimate")
SWEEP_COLUMNS = ("separation", "formulation", "precision", "energy", "force", "proximity_force")
BREAKDOWN_COLUMNS = SPECTRUM_COLUMNS + ("relative_error", "status")

UNITS_LINE = "# units: " + " ".join(f"{k}={v}" for k, v in UNITS.items())
ESTIMATE_DIGITS = ".6g"


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if hasattr(value, "value"):
        return str(value.value)
    return str(value)


def _estimate(value) -> str:
    return "" if value is None else format(float(value), ESTIMATE_DIGITS)


def _write_table(path: Path, columns: Sequence[str], rows: Iterable[Sequence]) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        handle.write(UNITS_LINE + "\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        count = 0
        for row in rows:
            writer.writerow([_cell(v) for v in row])
            count += 1
    logger.info("wrote %s (%d rows)", path, count)
    return path


def write_spectrum_csv(samples: Iterable[SpectrumSample], path) -> Path:
    return _write_table(
        Path(path),
        SPECTRUM_COLUMNS,
        (
            (s.kappa, s.integrand, s.formulation, s.precision, _estimate(s.condition_estimate))
            for s in samples
        ),
    )


def write_sweep_csv(rows: Iterable[SweepRow], path) -> Path:
    return _write_table(
        Path(path),
        SWEEP_COLUMNS,
        (
            (r.separation, r.formulation, r.precision, r.energy, r.force, r.proximity_force)
            for r in rows
        ),
    )


def write_breakdown_csv(rows: Iterable[BreakdownRow], path) -> Path:
    return _write_table(
        Path(path),
        BREAKDOWN_COLUMNS,
        (
            (
                r.kappa,
                r.integrand,
                r.formulation,
                r.precision,
                _estimate(r.condition_estimate),
                r.relative_error,
                r.status,
            )
            for r in rows
        ),
    )


def write_result_json(result: RunResult, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(result.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.info("wrote %s", path)
    return path


def dump_matrix(entries: np.ndarray, directory, name: str) -> Path:
    """Dense .npy dump for cross-checking an assembled matrix."""
    path = Path(directory) / f"{name}.npy"
    path.parent.mkdir(parents=True, exist_ok=True)
    np.save(path, np.asarray(entries))
    logger.debug("dumped %s %s", name, np.asarray(entries).shape)
    return path


def read_table(path) -> List[dict]:
    """Rows of a CSV written above, as dicts of strings."""
    with Path(path).open(encoding="utf-8", newline="") as handle:
        first = handle.readline()
        if not first.startswith("# units:"):
            handle.seek(0)
        return list(csv.DictReader(handle))
