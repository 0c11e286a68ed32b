"""Embedding CSV input and JSON report output."""

from __future__ import annotations

import csv
import json
import math

import numpy as np

from .errors import EmbeddingParseError


def read_embedding_csv(path, header: bool = False) -> np.ndarray:
    """Read a rectangular CSV of floats, one row per sample.

    Rows and columns in error messages are 1-based and count the header line
    when ``header`` is set, so they match what an editor shows.
    """
    rows: list[list[float]] = []
    width = None
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for line_no, record in enumerate(reader, start=1):
            if header and line_no == 1:
                continue
            if not record or all(not cell.strip() for cell in record):
                continue
            if width is None:
                width = len(record)
            elif len(record) != width:
                raise EmbeddingParseError(
                    f"{path}: row {line_no} has {len(record)} columns, expected {width}",
                    row=line_no,
                )
            values = []
            for col_no, cell in enumerate(record, start=1):
                try:
                    value = float(cell)
                except ValueError:
                    raise EmbeddingParseError(
                        f"{path}: row {line_no}, column {col_no}: cannot parse {cell.strip()!r} as a number",
                        row=line_no,
                        column=col_no,
                    ) from None
                if not math.isfinite(value):
                    raise EmbeddingParseError(
                        f"{path}: row {line_no}, column {col_no}: non-finite value {cell.strip()!r}",
                        row=line_no,
                        column=col_no,
                    )
                values.append(value)
            rows.append(values)
    if not rows:
        raise EmbeddingParseError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def write_matrix_csv(fh, matrix, header=None) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    if header is not None:
        writer.writerow([repr(float(v)) for v in header])
    for row in np.asarray(matrix):
        writer.writerow([repr(float(v)) for v in row])


def dump_json(obj) -> str:
    # repr-precision floats and sorted keys: identical inputs give identical bytes
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"
