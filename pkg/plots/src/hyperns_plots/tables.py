"""CSV loading with explicit schema errors.

The solver writes plain comma-separated files with a single header row
(diagnostics may carry ``#`` comment lines first). Figures declare which
columns they need; a mismatch is reported by naming every missing column
at once instead of failing on the first array lookup.
"""

from __future__ import annotations

import dataclasses

import numpy as np


class SchemaError(ValueError):
    """Input CSV does not match the documented schema."""


@dataclasses.dataclass(frozen=True)
class Table:
    path: str
    columns: tuple
    data: np.ndarray  # shape (n_rows, n_columns)

    def col(self, name: str) -> np.ndarray:
        try:
            k = self.columns.index(name)
        except ValueError:
            raise SchemaError(f"{self.path}: no column {name!r}") from None
        return self.data[:, k]

    def has(self, name: str) -> bool:
        return name in self.columns

    def require(self, names) -> None:
        missing = [n for n in names if n not in self.columns]
        if missing:
            raise SchemaError(
                f"{self.path}: missing columns: " + ", ".join(missing)
            )


def load_table(path) -> Table:
    path = str(path)
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    rows = [ln for ln in lines if ln.strip() and not ln.lstrip().startswith("#")]
    if not rows:
        raise SchemaError(f"{path}: empty file, expected a CSV header row")
    columns = tuple(c.strip() for c in rows[0].split(","))
    if len(columns) != len(set(columns)):
        raise SchemaError(f"{path}: duplicate column names in header")
    body = []
    for i, ln in enumerate(rows[1:], start=2):
        cells = ln.split(",")
        if len(cells) != len(columns):
            raise SchemaError(
                f"{path}: row {i} has {len(cells)} cells, header has "
                f"{len(columns)}"
            )
        try:
            body.append([float(c) for c in cells])
        except ValueError as exc:
            raise SchemaError(f"{path}: row {i}: {exc}") from None
    if not body:
        raise SchemaError(f"{path}: no data rows")
    return Table(path=path, columns=columns, data=np.array(body, dtype=np.float64))
