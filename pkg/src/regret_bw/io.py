"""Dataset ingestion and machine-readable output."""

from __future__ import annotations

import csv
import io
import json
import logging
import subprocess
from dataclasses import asdict, is_dataclass
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import __version__
from .design_space import ExperimentDesign
from .errors import DatasetParseError, DimensionError, InvalidDesignError, NonBinaryValueError

log = logging.getLogger(__name__)

SCHEMA_VERSION = "1.0"


def load_dataset(
    path: str | Path, target_point: Sequence[float] | None = None, lipschitz_c: float = 0.0
) -> ExperimentDesign:
    """Read a ``y,d,x1[,x2,...]`` CSV into a design centred on ``target_point``.

    Only the covariates and treatment indicators matter for the minimax
    bandwidth; ``y`` is validated but otherwise ignored.
    """
    path = Path(path)
    try:
        fh = path.open(newline="", encoding="utf-8")
    except OSError as exc:
        raise DatasetParseError(f"cannot open {path}: {exc}") from exc
    with fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise DatasetParseError("file is empty", line=1)
        header = [h.strip() for h in header]
        dx = len(header) - 2
        if header[:2] != ["y", "d"] or dx < 1 or header[2:] != [f"x{i + 1}" for i in range(dx)]:
            raise DatasetParseError(f"header must be y,d,x1[,x2,...], got {','.join(header)}", line=1)
        treated, control = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != dx + 2:
                raise DatasetParseError(f"expected {dx + 2} fields, got {len(row)}", line=line)
            try:
                y, d, *x = (float(cell) for cell in row)
            except ValueError:
                raise DatasetParseError(f"non-numeric field in {row!r}", line=line) from None
            if y not in (0.0, 1.0):
                raise NonBinaryValueError(f"y must be 0 or 1, got {row[0].strip()}", line=line)
            if d not in (0.0, 1.0):
                raise NonBinaryValueError(f"d must be 0 or 1, got {row[1].strip()}", line=line)
            if not all(np.isfinite(x)):
                raise DatasetParseError("non-finite covariate", line=line)
            (treated if d == 1.0 else control).append(x)

    if not treated or not control:
        raise InvalidDesignError("dataset needs at least one row in each treatment arm")
    target = np.zeros(dx) if target_point is None else np.asarray(target_point, dtype=np.float64).ravel()
    if target.shape != (dx,):
        raise DimensionError(f"target point has dimension {target.size}, covariates have {dx}")
    log.warning(
        "outcomes in %s are not used: the minimax bandwidth depends only on the covariate design", path
    )
    return ExperimentDesign(np.array(treated) - target, np.array(control) - target, lipschitz_c)


def write_dataset(design: ExperimentDesign, path: str | Path) -> None:
    """Write a design as ``y,d,x...`` rows (y is a 0 placeholder), treated arm first."""
    header = ["y", "d"] + [f"x{i + 1}" for i in range(design.dim)]
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for d, xs in ((1, design.x1), (0, design.x0)):
            for x in xs:
                w.writerow([0, d] + [repr(float(v)) for v in x])


def build_id() -> str:
    """``git describe`` of the source checkout when available, else the package version."""
    try:
        out = subprocess.run(
            ["git", "describe", "--tags", "--always"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True,
            text=True,
            timeout=5,
            check=True,
        )
        desc = out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        desc = ""
    return f"regret_bw-{__version__}" + (f"-g{desc}" if desc else "")


def plain(obj: Any) -> Any:
    """Convert dataclasses, numpy scalars/arrays and tuples into JSON-ready values."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return {k: plain(v) for k, v in asdict(obj).items()}
    if isinstance(obj, dict):
        return {str(k): plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [plain(v) for v in obj.tolist()]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    return obj


def dumps_json(doc: dict) -> str:
    # floats use repr (shortest round-trip), so values reload bit-exactly
    return json.dumps(plain(doc), indent=2, allow_nan=False) + "\n"


def dumps_csv(columns: Sequence[str], rows: Iterable[Sequence[Any]], meta: dict | None = None) -> str:
    """CSV text; ``meta`` entries become leading ``# key: value`` comment lines."""
    buf = io.StringIO()
    for k, v in (meta or {}).items():
        buf.write(f"# {k}: {json.dumps(plain(v))}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()
