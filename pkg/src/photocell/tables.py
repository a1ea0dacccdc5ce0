"""CSV result tables with a leading ``#`` metadata block."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

#: Metadata key left out of byte-for-byte reproducibility comparisons.
TIMESTAMP_KEY = "generated"


@dataclass
class ResultTable:
    columns: list[str]
    rows: np.ndarray
    metadata: list[tuple[str, str]] = field(default_factory=list)

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=float).reshape(-1, len(self.columns))

    def column(self, name: str) -> np.ndarray:
        return self.rows[:, self.columns.index(name)]

    def meta(self, key: str) -> list[str]:
        return [v for k, v in self.metadata if k == key]


def format_number(x: float) -> str:
    return f"{x:.16e}"


def render_csv(table: ResultTable) -> str:
    buf = io.StringIO()
    for key, value in table.metadata:
        if "\n" in value or ":" in key:
            raise ValueError(f"metadata entry {key!r} must be a single line")
        buf.write(f"# {key}: {value}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_number(x) for x in row])
    return buf.getvalue()


def write_csv(table: ResultTable, path: str | Path) -> None:
    Path(path).write_text(render_csv(table))


def parse_csv(text: str) -> ResultTable:
    metadata = []
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            key, _, value = line[1:].strip().partition(": ")
            metadata.append((key, value))
        elif line.strip():
            body.append(line)
    if not body:
        raise ValueError("CSV has no header row")
    reader = csv.reader(body)
    columns = next(reader)
    rows = [[float(x) for x in r] for r in reader]
    return ResultTable(columns, np.array(rows).reshape(-1, len(columns)), metadata)


def read_csv(path: str | Path) -> ResultTable:
    return parse_csv(Path(path).read_text())


def strip_timestamp(text: str) -> str:
    return "".join(line for line in text.splitlines(keepends=True) if not line.startswith(f"# {TIMESTAMP_KEY}:"))


def table_from_columns(names: Sequence[str], *columns: Sequence[float], metadata=None) -> ResultTable:
    rows = np.column_stack([np.asarray(c, dtype=float) for c in columns]) if columns else np.empty((0, len(names)))
    return ResultTable(list(names), rows, list(metadata or []))
