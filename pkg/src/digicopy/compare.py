"""Mode comparison, the published-table check, and report rendering."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import _table
from .errors import AxisMismatchError
from .indicator import IndicatorSeries, total_indicator

ROW_TOLERANCE = 2e-4
TOTAL_TOLERANCE = 0.05
FORMATS = ("csv", "json", "svg")


@dataclass(frozen=True)
class Totals:
    base: float
    ctrl: float
    delta: float

    @property
    def delta_of_totals(self) -> float:
        return self.ctrl - self.base


@dataclass(frozen=True, eq=False)
class ModeComparison:
    base: IndicatorSeries
    ctrl: IndicatorSeries
    delta: np.ndarray
    totals: Totals

    @property
    def times(self) -> tuple:
        return self.base.times


def compare_modes(base: IndicatorSeries, ctrl: IndicatorSeries) -> ModeComparison:
    """Pair two regimes on a shared time axis; ``delta = ctrl - base``."""
    if len(base) == 0:
        raise AxisMismatchError("empty series")
    for idx, (a, b) in enumerate(zip(base.times, ctrl.times)):
        if a != b:
            raise AxisMismatchError(f"time axes diverge at index {idx}: {a!r} != {b!r}", idx)
    if len(base) != len(ctrl):
        idx = min(len(base), len(ctrl))
        raise AxisMismatchError(f"time axes differ in length ({len(base)} vs {len(ctrl)}), first divergent index {idx}", idx)
    if base.n is not None and ctrl.n is not None and base.n != ctrl.n:
        raise AxisMismatchError(f"parameter counts differ: {base.n} vs {ctrl.n}")
    delta = ctrl.v_agg - base.v_agg
    delta.setflags(write=False)
    totals = Totals(
        math.fsum(base.v_agg.tolist()),
        math.fsum(ctrl.v_agg.tolist()),
        math.fsum(delta.tolist()),
    )
    return ModeComparison(base, ctrl, delta, totals)


@dataclass(frozen=True)
class PaperTableFixture:
    rows: tuple  # (t, v_basic, v_strat, printed_delta)

    def __post_init__(self):
        ts = [r[0] for r in self.rows]
        if ts != list(range(1, len(ts) + 1)):
            raise ValueError("fixture times must run 1..N without gaps")

    @property
    def times(self) -> list[int]:
        return [r[0] for r in self.rows]

    def column(self, name: str) -> np.ndarray:
        idx = {"v_basic": 1, "v_strat": 2, "delta": 3}[name]
        return np.array([r[idx] for r in self.rows])

    def series(self) -> tuple[IndicatorSeries, IndicatorSeries]:
        return (
            IndicatorSeries.from_values(self.times, self.column("v_basic"), "basic_mode"),
            IndicatorSeries.from_values(self.times, self.column("v_strat"), "strat_plan"),
        )

    def comparison(self) -> ModeComparison:
        return compare_modes(*self.series())


def paper_table() -> PaperTableFixture:
    return PaperTableFixture(tuple((t, float(b), float(s), float(d)) for t, b, s, d in _table.ROWS))


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    value: float
    expected: float
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: value={self.value:.6f} expected={self.expected:.6f} tol={self.tolerance:g}"


@dataclass
class VerificationReport:
    rows: list = field(default_factory=list)
    totals: list = field(default_factory=list)

    @property
    def checks(self) -> list:
        return self.rows + self.totals

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_text(self) -> str:
        lines = [c.line() for c in self.checks]
        n_ok = sum(c.passed for c in self.checks)
        lines.append(f"{'OK' if self.passed else 'FAILED'}: {n_ok}/{len(self.checks)} checks passed")
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        def row(c):
            return {"name": c.name, "passed": c.passed, "value": c.value, "expected": c.expected, "tolerance": c.tolerance}

        return {
            "passed": self.passed,
            "row_checks": [row(c) for c in self.rows],
            "total_checks": [row(c) for c in self.totals],
        }


def verify_paper_table(fx: PaperTableFixture | None = None) -> VerificationReport:
    """Internal-arithmetic check of the published two-regime table.

    Per row, the printed delta must match ``strat - basic`` up to two 4-dp
    roundings. The column sums must match the published 2-dp totals. The
    difference of totals is reported next to the delta column sum, since the
    published totals and delta disagree in the last digit.
    """
    fx = fx or paper_table()
    report = VerificationReport()
    for t, vb, vs, d in fx.rows:
        diff = vs - vb
        report.rows.append(Check(f"row t={t} delta", abs(diff - d) <= ROW_TOLERANCE, diff, d, ROW_TOLERANCE))
    sb = math.fsum(fx.column("v_basic").tolist())
    ss = math.fsum(fx.column("v_strat").tolist())
    sd = math.fsum(fx.column("delta").tolist())
    for name, value, expected in (
        ("sum v_basic", sb, _table.TOTAL_BASIC),
        ("sum v_strat", ss, _table.TOTAL_STRAT),
        ("sum delta", sd, _table.TOTAL_DELTA),
        ("sum v_strat - sum v_basic", ss - sb, _table.TOTAL_DELTA),
    ):
        report.totals.append(Check(name, abs(value - expected) <= TOTAL_TOLERANCE, value, expected, TOTAL_TOLERANCE))
    return report


def _fmt4(x: float) -> str:
    s = f"{x:.4f}"
    return "0.0000" if s == "-0.0000" else s


def render_report(cmp: ModeComparison, format: str = "csv") -> bytes:
    if len(cmp.times) == 0:
        raise ValueError("empty comparison")
    if format == "csv":
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "v_basic", "v_strat", "delta"])
        for t, b, c, d in zip(cmp.times, cmp.base.v_agg.tolist(), cmp.ctrl.v_agg.tolist(), cmp.delta.tolist()):
            w.writerow([t, _fmt4(b), _fmt4(c), _fmt4(d)])
        return buf.getvalue().encode("utf-8")
    if format == "json":
        doc = {
            "labels": {"base": cmp.base.mode_label, "ctrl": cmp.ctrl.mode_label},
            "rows": [
                {"t": t, "v_basic": b, "v_strat": c, "delta": d}
                for t, b, c, d in zip(cmp.times, cmp.base.v_agg.tolist(), cmp.ctrl.v_agg.tolist(), cmp.delta.tolist())
            ],
            "totals": {
                "v_basic": cmp.totals.base,
                "v_strat": cmp.totals.ctrl,
                "delta": cmp.totals.delta,
                "delta_of_totals": cmp.totals.delta_of_totals,
            },
        }
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    if format == "svg":
        return render_svg(cmp)
    raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")


# -- SVG -------------------------------------------------------------------

WIDTH, HEIGHT = 960, 480
MARGIN = {"left": 70, "right": 20, "top": 40, "bottom": 50}
COLORS = ("#1f77b4", "#d62728")


def _padded(lo: float, hi: float) -> tuple[float, float]:
    if hi == lo:
        return lo - 1.0, hi + 1.0
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _ticks(lo: float, hi: float, count: int = 6) -> list[float]:
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    first = math.ceil(lo / step) * step
    out = []
    x = first
    while x <= hi + 1e-12 * abs(hi):
        out.append(round(x, 10))
        x += step
    return out


def _num(x: float) -> str:
    return f"{x:.2f}"


def render_svg(cmp: ModeComparison, title: str = "Indicator dynamics") -> bytes:
    xs = [float(t) for t in cmp.times]
    ys = cmp.base.v_agg.tolist() + cmp.ctrl.v_agg.tolist()
    x0, x1 = _padded(min(xs), max(xs))
    y0, y1 = _padded(min(ys), max(ys))
    left, top = MARGIN["left"], MARGIN["top"]
    pw = WIDTH - MARGIN["left"] - MARGIN["right"]
    ph = HEIGHT - MARGIN["top"] - MARGIN["bottom"]

    def sx(x):
        return left + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return top + ph - (y - y0) / (y1 - y0) * ph

    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
        f'<text x="{WIDTH / 2:.0f}" y="24" text-anchor="middle" font-family="sans-serif" font-size="16">{title}</text>',
        '<g id="axes" stroke="black" stroke-width="1">',
        f'<line x1="{left}" y1="{top + ph}" x2="{left + pw}" y2="{top + ph}"/>',
        f'<line x1="{left}" y1="{top}" x2="{left}" y2="{top + ph}"/>',
        "</g>",
        '<g id="ticks" font-family="sans-serif" font-size="11">',
    ]
    for v in _ticks(x0, x1):
        px = _num(sx(v))
        out.append(f'<line x1="{px}" y1="{top + ph}" x2="{px}" y2="{top + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{px}" y="{top + ph + 18}" text-anchor="middle">{v:g}</text>')
    for v in _ticks(y0, y1):
        py = _num(sy(v))
        out.append(f'<line x1="{left - 5}" y1="{py}" x2="{left}" y2="{py}" stroke="black"/>')
        out.append(f'<text x="{left - 8}" y="{py}" text-anchor="end" dominant-baseline="middle">{v:g}</text>')
    out.append("</g>")
    out.append(f'<text x="{left + pw / 2:.0f}" y="{HEIGHT - 10}" text-anchor="middle" font-family="sans-serif" font-size="12">t</text>')
    for series, color in zip((cmp.base, cmp.ctrl), COLORS):
        pts = " ".join(f"{_num(sx(x))},{_num(sy(y))}" for x, y in zip(xs, series.v_agg.tolist()))
        label = series.mode_label or "series"
        out.append(f'<polyline id="{label}" fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
    for i, (series, color) in enumerate(zip((cmp.base, cmp.ctrl), COLORS)):
        ly = top + 12 + 16 * i
        out.append(f'<line x1="{left + pw - 150}" y1="{ly}" x2="{left + pw - 125}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(
            f'<text x="{left + pw - 118}" y="{ly}" dominant-baseline="middle" font-family="sans-serif" font-size="11">'
            f"{series.mode_label or 'series'}</text>"
        )
    out.append("</svg>")
    return ("\n".join(out) + "\n").encode("utf-8")


# -- indicator series output ------------------------------------------------

def render_series(s: IndicatorSeries, format: str = "csv") -> bytes:
    """Indicator series as CSV (``t,period,v`` then one G column per parameter) or JSON."""
    periods = s.periods or (None,) * len(s)
    if format == "csv":
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "period", "v", *s.params])
        for row, (t, period, v) in enumerate(zip(s.times, periods, s.v_agg.tolist())):
            g = [] if s.g is None else [repr(x) for x in s.g[row].tolist()]
            w.writerow([t, "" if period is None else period, repr(v), *g])
        return buf.getvalue().encode("utf-8")
    if format == "json":
        points = []
        for row, (t, period, v) in enumerate(zip(s.times, periods, s.v_agg.tolist())):
            pt = {"t": t, "period": period, "v": v}
            if s.g is not None:
                pt["g"] = s.g[row].tolist()
            points.append(pt)
        doc = {"mode_label": s.mode_label, "aggregate": s.aggregate, "params": list(s.params), "points": points}
        if s.g is not None or s.aggregate == "sum":
            doc["total"] = total_indicator(s)
        return (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    raise ValueError(f"unknown format {format!r}; expected csv or json")


def parse_series(data: bytes, mode_label: str = "") -> IndicatorSeries:
    """Read a series written by :func:`render_series` (CSV)."""
    rows = list(csv.reader(io.StringIO(data.decode("utf-8-sig"), newline="")))
    header = rows[0]
    if header[:3] != ["t", "period", "v"]:
        raise ValueError("series CSV header must start with t,period,v")
    body = [r for r in rows[1:] if r]
    times = [int(r[0]) for r in body]
    v = [float(r[2]) for r in body]
    g = None
    if len(header) > 3:
        g = np.array([[float(x) for x in r[3:]] for r in body])
    periods = tuple((int(r[1]) if r[1].lstrip("-").isdigit() else (r[1] or None)) for r in body)
    return IndicatorSeries(tuple(times), np.array(v), g, mode_label, tuple(header[3:]), periods)
