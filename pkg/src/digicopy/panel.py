"""Panel data model: ingestion, validation and window extraction.

A panel is the "digital copy" of an enterprise: ``T`` periods by ``n``
parameters of monetary flows (thousand currency units). Rows are periods,
columns are parameters. Internally periods are addressed by 0-based index.
"""

from __future__ import annotations

import csv
import io
import math
import os
import re
from dataclasses import dataclass, field
from typing import BinaryIO, Iterable, Sequence, TextIO, Union

import numpy as np

from .errors import PanelParseError, PanelValidationError, WindowRangeError

EXPENSE = "expense"
INCOME = "income"
KINDS = (EXPENSE, INCOME)

_NUMBER = re.compile(r"^[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?$")
_INT_LABEL = re.compile(r"^[+-]?\d+$")
_MONTH_LABEL = re.compile(r"^\d{4}-(0[1-9]|1[0-2])$")

Source = Union[str, bytes, bytearray, os.PathLike, BinaryIO, TextIO]


@dataclass(frozen=True)
class ParamMeta:
    id: str
    process_id: str = ""
    kind: str = EXPENSE

    def __post_init__(self):
        if not self.process_id:
            object.__setattr__(self, "process_id", self.id)


@dataclass(frozen=True, eq=False)
class Panel:
    """Immutable T x n matrix of monetary flows.

    The constructor does not enforce the invariants, so that
    :func:`validate_panel` can report on arbitrary data; use
    :func:`make_panel` or :func:`load_panel` to get a checked panel.
    """

    periods: tuple
    params: tuple
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim == 1:
            values = values.reshape(-1, 1)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "periods", tuple(self.periods))
        object.__setattr__(
            self,
            "params",
            tuple(p if isinstance(p, ParamMeta) else ParamMeta(str(p)) for p in self.params),
        )

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def n(self) -> int:
        return self.values.shape[1]

    @property
    def ids(self) -> list[str]:
        return [p.id for p in self.params]

    def columns_of_process(self, process_id: str, kind: str | None = None) -> list[int]:
        return [
            i
            for i, p in enumerate(self.params)
            if p.process_id == process_id and (kind is None or p.kind == kind)
        ]

    def with_values(self, values: np.ndarray) -> "Panel":
        return Panel(self.periods, self.params, values)

    def __eq__(self, other):
        if not isinstance(other, Panel):
            return NotImplemented
        return (
            self.periods == other.periods
            and self.params == other.params
            and self.values.shape == other.values.shape
            and bool(np.array_equal(self.values, other.values))
        )

    __hash__ = None


@dataclass(frozen=True)
class Finding:
    severity: str  # "error" or "warning"
    message: str
    period: object = None
    column: str | None = None

    def __str__(self):
        where = []
        if self.period is not None:
            where.append(f"period {self.period}")
        if self.column is not None:
            where.append(f'column "{self.column}"')
        suffix = f" ({', '.join(where)})" if where else ""
        return f"{self.severity}: {self.message}{suffix}"


@dataclass
class ValidationReport:
    findings: list = field(default_factory=list)

    @property
    def errors(self) -> list:
        return [f for f in self.findings if f.severity == "error"]

    @property
    def warnings(self) -> list:
        return [f for f in self.findings if f.severity == "warning"]

    @property
    def ok(self) -> bool:
        return not self.errors

    def __len__(self):
        return len(self.findings)


@dataclass(frozen=True)
class WindowSpec:
    k: int = 6

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 2:
            raise ValueError(f"window length k must be an integer >= 2, got {self.k!r}")


@dataclass(frozen=True, eq=False)
class WindowMatrix:
    """Rows ``x(t-1), x(t-2), ..., x(t-k)`` of a panel, newest first."""

    rows: np.ndarray
    at_time: int

    @property
    def k(self) -> int:
        return self.rows.shape[0]

    @property
    def n(self) -> int:
        return self.rows.shape[1]


def _label_order_key(periods: Sequence) -> list | None:
    """Comparable keys for period labels, or None if labels are not usable."""
    if all(isinstance(p, (int, np.integer)) and not isinstance(p, bool) for p in periods):
        return [int(p) for p in periods]
    if all(isinstance(p, str) and _MONTH_LABEL.match(p) for p in periods):
        return list(periods)
    return None


def validate_panel(p: Panel) -> ValidationReport:
    """Check every panel invariant and return the findings (never raises)."""
    report = ValidationReport()
    add = report.findings.append
    values = p.values
    if values.ndim != 2:
        add(Finding("error", f"values must be 2-dimensional, got {values.ndim} dimensions"))
        return report
    T, n = values.shape
    if T < 1:
        add(Finding("error", "panel has no periods"))
    if n < 1:
        add(Finding("error", "panel has no parameters"))
    if len(p.periods) != T:
        add(Finding("error", f"{len(p.periods)} period labels for {T} rows"))
    if len(p.params) != n:
        add(Finding("error", f"{len(p.params)} parameters for {n} columns"))
    if report.errors:
        return report

    seen = set()
    for meta in p.params:
        if not meta.id:
            add(Finding("error", "empty parameter id"))
        elif meta.id in seen:
            add(Finding("error", "duplicate parameter id", column=meta.id))
        seen.add(meta.id)
        if meta.kind not in KINDS:
            add(Finding("error", f"kind must be one of {KINDS}, got {meta.kind!r}", column=meta.id))

    keys = _label_order_key(p.periods)
    if keys is None:
        add(Finding("error", "period labels must be all integers or all YYYY-MM strings"))
    else:
        for t in range(1, T):
            if not keys[t] > keys[t - 1]:
                add(Finding("error", "period labels not strictly increasing", period=p.periods[t]))

    bad_rows, bad_cols = np.nonzero(~np.isfinite(values))
    for t, i in zip(bad_rows.tolist(), bad_cols.tolist()):
        add(Finding("error", f"non-finite value {values[t, i]!r}", period=p.periods[t], column=p.params[i].id))

    if T >= 2:
        constant = (values == values[0]).all(axis=0)
        for i in np.nonzero(constant)[0].tolist():
            add(Finding("warning", "zero variance possible in any window", column=p.params[i].id))
    return report


def make_panel(
    values,
    periods: Iterable | None = None,
    params: Iterable | None = None,
) -> Panel:
    """Build a panel and raise :class:`PanelValidationError` on the first error."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim == 1:
        values = values.reshape(-1, 1)
    if periods is None:
        periods = range(1, values.shape[0] + 1)
    if params is None:
        params = [f"x{i + 1}" for i in range(values.shape[1])]
    panel = Panel(tuple(periods), tuple(params), values)
    errors = validate_panel(panel).errors
    if errors:
        first = errors[0]
        row = None
        if first.period is not None:
            row = panel.periods.index(first.period) + 1
        raise PanelValidationError(first.message, row=row, column=first.column)
    return panel


def _read_text(source: Source) -> str:
    if isinstance(source, (bytes, bytearray)):
        data = bytes(source)
    elif isinstance(source, (str, os.PathLike)):
        with open(source, "rb") as fh:
            data = fh.read()
    else:
        data = source.read()
    if isinstance(data, str):
        return data
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise PanelParseError(f"input is not valid UTF-8: {exc}") from exc


def _rows(text: str):
    reader = csv.reader(io.StringIO(text, newline=""), strict=True)
    try:
        for row in reader:
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            yield reader.line_num, [c.strip() for c in row]
    except csv.Error as exc:
        raise PanelParseError(str(exc), line=reader.line_num) from exc


def _parse_period(label: str, line: int):
    if _INT_LABEL.match(label):
        return int(label)
    if _MONTH_LABEL.match(label):
        return label
    raise PanelValidationError(f"line {line}: bad period label {label!r}", column="period")


def load_panel(source: Source, meta: Source | None = None) -> Panel:
    """Parse a wide CSV (``period,<id>,<id>,...``) into a validated panel.

    ``source`` may be a path, raw bytes, or an open file. ``meta`` is an
    optional sidecar CSV ``param_id,process_id,kind``.
    """
    rows = _rows(_read_text(source))
    try:
        line, header = next(rows)
    except StopIteration:
        raise PanelParseError("empty input: header row missing", line=1) from None
    if header[0].lstrip("﻿") != "period":
        raise PanelParseError(f'first header must be "period", got {header[0]!r}', line=line)
    ids = header[1:]
    if not ids:
        raise PanelValidationError("no parameter columns in header")
    seen = set()
    for pid in ids:
        if not pid:
            raise PanelValidationError("empty parameter id in header")
        if pid in seen:
            raise PanelValidationError("duplicate parameter id", column=pid)
        seen.add(pid)

    periods = []
    data = []
    for data_row, (line, cells) in enumerate(rows, start=1):
        if len(cells) < len(header):
            # first absent column
            raise PanelValidationError(
                f"line {line}: missing cell, expected {len(header)} fields, got {len(cells)}",
                row=data_row,
                column=ids[max(len(cells) - 1, 0)],
            )
        if len(cells) > len(header):
            raise PanelParseError(f"expected {len(header)} fields, got {len(cells)}", line=line)
        periods.append(_parse_period(cells[0], line))
        values = []
        for pid, cell in zip(ids, cells[1:]):
            if cell == "":
                raise PanelValidationError(f"line {line}: missing cell", row=data_row, column=pid)
            if not _NUMBER.match(cell):
                raise PanelValidationError(f"line {line}: non-numeric cell {cell!r}", row=data_row, column=pid)
            x = float(cell)
            if not math.isfinite(x):
                raise PanelValidationError(f"line {line}: non-finite cell {cell!r}", row=data_row, column=pid)
            values.append(x)
        data.append(values)
    if not data:
        raise PanelValidationError("panel has no periods")

    keys = _label_order_key(periods)
    if keys is None:
        raise PanelValidationError("period labels must be all integers or all YYYY-MM strings", column="period")
    for t in range(1, len(keys)):
        if not keys[t] > keys[t - 1]:
            raise PanelValidationError("non-increasing period", row=t + 1, column="period")

    params = [ParamMeta(pid) for pid in ids]
    if meta is not None:
        params = _apply_meta(params, meta)
    return make_panel(np.array(data, dtype=np.float64), periods, params)


def _apply_meta(params: list, meta: Source) -> list:
    rows = _rows(_read_text(meta))
    try:
        line, header = next(rows)
    except StopIteration:
        raise PanelParseError("empty metadata file", line=1) from None
    if header[:3] != ["param_id", "process_id", "kind"]:
        raise PanelParseError("metadata header must be param_id,process_id,kind", line=line)
    index = {p.id: i for i, p in enumerate(params)}
    out = list(params)
    for line, cells in rows:
        if len(cells) < 3:
            raise PanelParseError("metadata row needs 3 fields", line=line)
        pid, process, kind = cells[:3]
        if pid not in index:
            raise PanelValidationError(f"metadata line {line}: unknown parameter", column=pid)
        kind = kind or EXPENSE
        if kind not in KINDS:
            raise PanelValidationError(f"metadata line {line}: bad kind {kind!r}", column=pid)
        out[index[pid]] = ParamMeta(pid, process or pid, kind)
    return out


def dump_panel(p: Panel) -> bytes:
    """Serialize to the wide CSV format; floats use round-trip repr."""
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["period", *p.ids])
    for label, row in zip(p.periods, p.values.tolist()):
        writer.writerow([label, *(repr(float(x)) for x in row)])
    return buf.getvalue().encode("utf-8")


def dump_meta(p: Panel) -> bytes:
    buf = io.StringIO(newline="")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["param_id", "process_id", "kind"])
    for meta in p.params:
        writer.writerow([meta.id, meta.process_id, meta.kind])
    return buf.getvalue().encode("utf-8")


def window_slice(p: Panel, t: int, w: WindowSpec | int) -> WindowMatrix:
    """Rows ``t-1 ... t-k`` of the panel (0-based ``t``), newest first.

    ``t == T`` is allowed: it is the forecast point just past the panel end.
    """
    k = w.k if isinstance(w, WindowSpec) else WindowSpec(int(w)).k
    if t < k:
        raise WindowRangeError(f"evaluation index t={t} is before the first full window; minimum valid t is {k}")
    if t > p.T:
        raise WindowRangeError(f"evaluation index t={t} is past the forecast point T={p.T}")
    rows = np.array(p.values[t - k : t][::-1], dtype=np.float64, copy=True)
    return WindowMatrix(rows, t)
