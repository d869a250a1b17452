"""CSV emission and ingestion.

Every emitted file starts with a ``# provenance:`` comment carrying the
configuration hash and the seed, followed by a one-line header and
rows of floats printed with 17 significant digits (lossless for
float64).  The reader skips comment lines, so every emitted file
round-trips through it.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from .errors import IngestError

FLOAT_FORMAT = "{:.17g}"


def config_hash(resolved: dict) -> str:
    """Stable short hash of a fully resolved configuration mapping."""
    canonical = json.dumps(resolved, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()[:16]


def provenance_line(cfg_hash: str, seed: int) -> str:
    return f"# provenance: config_sha256={cfg_hash} seed={seed}"


def write_csv(path, header: list[str], columns: list[np.ndarray], provenance: str | None = None) -> None:
    """Write named columns of floats; all columns must share one length."""
    columns = [np.asarray(c) for c in columns]
    if len(columns) != len(header):
        raise ValueError(f"write_csv: {len(header)} header fields but {len(columns)} columns")
    lengths = {c.shape[0] for c in columns} if columns else {0}
    if len(lengths) > 1:
        raise ValueError(f"write_csv: column lengths differ: {sorted(lengths)}")
    lines = []
    if provenance is not None:
        lines.append(provenance)
    lines.append(",".join(header))
    n = lengths.pop() if columns else 0
    for i in range(n):
        lines.append(",".join(_format_cell(c[i]) for c in columns))
    Path(path).write_text("\n".join(lines) + "\n")


def _format_cell(value) -> str:
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    return FLOAT_FORMAT.format(float(value))


def read_csv(path) -> tuple[list[str], dict[str, np.ndarray], str | None]:
    """Read a headered CSV, skipping ``#`` comments.

    Returns (header, columns-as-float-arrays, provenance comment or
    None).  Non-numeric cells raise, so this is the strict reader for
    files this package wrote itself; measured traces go through
    :func:`ingest_measured_trace`, which tolerates and reports bad rows.
    """
    path = Path(path)
    provenance = None
    header: list[str] | None = None
    rows: list[list[float]] = []
    for line_number, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            if provenance is None and stripped.startswith("# provenance:"):
                provenance = stripped
            continue
        if header is None:
            header = [field.strip() for field in stripped.split(",")]
            continue
        cells = stripped.split(",")
        if len(cells) != len(header):
            raise IngestError(f"{path}:{line_number}: expected {len(header)} fields, found {len(cells)}")
        try:
            rows.append([float(cell) for cell in cells])
        except ValueError as exc:
            raise IngestError(f"{path}:{line_number}: non-numeric cell ({exc})") from None
    if header is None:
        raise IngestError(f"{path}: no header line found")
    data = np.asarray(rows, dtype=float) if rows else np.empty((0, len(header)))
    return header, {name: data[:, j] for j, name in enumerate(header)}, provenance


def ingest_measured_trace(path) -> tuple[np.ndarray, list[int]]:
    """Read a measured relative-transmission trace.

    The file must carry a ``transmittance`` column (``timestamp_s`` and
    other columns are tolerated).  Rows that fail to parse or fall
    outside [0, 1] are rejected individually and reported by line
    number; ingestion fails only when no valid rows remain.
    """
    path = Path(path)
    if not path.exists():
        raise IngestError(f"{path}: no such file")
    header: list[str] | None = None
    column = None
    values: list[float] = []
    rejected: list[int] = []
    for line_number, line in enumerate(path.read_text().splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if header is None:
            header = [field.strip() for field in stripped.split(",")]
            if "transmittance" not in header:
                raise IngestError(f"{path}: header must contain a 'transmittance' column, got {header}")
            column = header.index("transmittance")
            continue
        cells = stripped.split(",")
        if len(cells) != len(header):
            rejected.append(line_number)
            continue
        try:
            value = float(cells[column])
        except ValueError:
            rejected.append(line_number)
            continue
        if not (0.0 <= value <= 1.0) or not np.isfinite(value):
            rejected.append(line_number)
            continue
        values.append(value)
    if header is None:
        raise IngestError(f"{path}: file is empty")
    if not values:
        raise IngestError(f"{path}: no valid transmittance rows ({len(rejected)} rejected)")
    return np.asarray(values), rejected
