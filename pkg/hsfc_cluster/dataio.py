from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import pandas as pd

from .errors import DataFormatError
from .models import DataMatrix, HardPartition

logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"
LABEL_COLUMN = "label"

_REQUIRED_RESULT_FIELDS = ("schema_version", "method", "centroids", "memberships")


def _read_frame(path: Path, *, delimiter: str) -> pd.DataFrame:
    if len(delimiter) != 1:
        raise DataFormatError(f"delimiter must be a single character, got {delimiter!r}")
    try:
        return pd.read_csv(
            path,
            sep=delimiter,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError as exc:
        raise DataFormatError(f"empty file: {path}") from exc
    except pd.errors.ParserError as exc:
        raise DataFormatError(f"ragged rows in {path}: {exc}") from exc
    except UnicodeDecodeError as exc:
        raise DataFormatError(f"file is not valid UTF-8: {path}") from exc


def _locate_bad_cell(cells: np.ndarray, row_offset: int) -> DataFormatError:
    for r, row in enumerate(cells):
        for c, cell in enumerate(row):
            try:
                float(cell)
            except ValueError:
                return DataFormatError(
                    f"non-numeric cell {cell!r}", row=r + 1 + row_offset, column=c + 1
                )
    return DataFormatError("non-numeric cell")


def load_csv(path: str | Path, has_header: bool = False, delimiter: str = ",") -> DataMatrix:
    csv_path = Path(path)
    if not csv_path.is_file():
        raise FileNotFoundError(f"data file not found: {csv_path}")
    frame = _read_frame(csv_path, delimiter=delimiter)

    names: tuple[str, ...] = ()
    row_offset = 0
    if has_header:
        names = tuple(str(item).strip() for item in frame.iloc[0].tolist())
        frame = frame.iloc[1:]
        row_offset = 1
    if frame.empty:
        raise DataFormatError(f"no data rows in {csv_path}")

    missing = frame.isna().to_numpy()
    if missing.any():
        r, c = np.argwhere(missing)[0]
        raise DataFormatError(
            "ragged row (too few fields)", row=int(r) + 1 + row_offset, column=int(c) + 1
        )

    cells = np.char.strip(frame.to_numpy(dtype=str))
    try:
        values = cells.astype(np.float64)
    except ValueError:
        raise _locate_bad_cell(cells, row_offset) from None

    finite = np.isfinite(values)
    if not finite.all():
        r, c = np.argwhere(~finite)[0]
        raise DataFormatError(
            f"non-finite value {cells[r, c]!r}", row=int(r) + 1 + row_offset, column=int(c) + 1
        )
    logger.debug(
        "csv_loaded path=%s n=%s p=%s header=%s",
        csv_path,
        values.shape[0],
        values.shape[1],
        has_header,
    )
    return DataMatrix(values=values, feature_names=names)


def write_csv(
    path: str | Path,
    values: DataMatrix | np.ndarray,
    *,
    feature_names: Sequence[str] | None = None,
    delimiter: str = ",",
) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(values, DataMatrix):
        names = list(feature_names or values.feature_names)
        matrix = values.values
    else:
        names = list(feature_names or [])
        matrix = np.asarray(values, dtype=np.float64)
    frame = pd.DataFrame(matrix)
    frame.to_csv(
        out,
        sep=delimiter,
        index=False,
        header=names if names else False,
        float_format=FLOAT_FORMAT,
        lineterminator="\n",
    )
    return out


def write_labels_csv(path: str | Path, partition: HardPartition) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    pd.DataFrame({LABEL_COLUMN: partition.labels}).to_csv(out, index=False, lineterminator="\n")
    return out


def load_labels_csv(path: str | Path) -> HardPartition:
    csv_path = Path(path)
    if not csv_path.is_file():
        raise FileNotFoundError(f"labels file not found: {csv_path}")
    try:
        frame = pd.read_csv(csv_path, dtype=str, keep_default_na=False)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise DataFormatError(f"unreadable labels file {csv_path}: {exc}") from exc
    column = LABEL_COLUMN if LABEL_COLUMN in frame.columns else frame.columns[0]
    raw = frame[column].str.strip()
    labels = pd.to_numeric(raw, errors="coerce")
    if labels.isna().any():
        bad = int(np.flatnonzero(labels.isna().to_numpy())[0])
        raise DataFormatError(f"non-integer label {raw.iloc[bad]!r}", row=bad + 2, column=1)
    if (labels % 1 != 0).any() or (labels < 0).any():
        raise DataFormatError(f"labels must be non-negative integers in {csv_path}")
    return HardPartition.from_labels(labels.astype(np.int64).to_numpy())


def write_result_json(path: str | Path, payload: dict[str, Any]) -> Path:
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(payload, ensure_ascii=False, indent=2), encoding="utf-8")
    return out


def read_result_json(path: str | Path) -> dict[str, Any]:
    result_path = Path(path)
    if not result_path.is_file():
        raise FileNotFoundError(f"result file not found: {result_path}")
    try:
        payload = json.loads(result_path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise DataFormatError(f"malformed result file {result_path}: {exc}") from exc
    if not isinstance(payload, dict):
        raise DataFormatError(f"result file {result_path} must hold a JSON object")
    missing = [name for name in _REQUIRED_RESULT_FIELDS if name not in payload]
    if missing:
        raise DataFormatError(f"result file {result_path} lacks fields: {','.join(missing)}")
    if payload["schema_version"] != SCHEMA_VERSION:
        raise DataFormatError(
            f"unsupported schema_version={payload['schema_version']} in {result_path}"
        )
    return payload
