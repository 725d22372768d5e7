"""Integral-indicator engine.

``G_i(t)`` is the sum over all ``j`` (diagonal included) of ``|r_ij(t)|`` for
the window ending just before ``t``. The engine never materializes the
``n x n`` matrix: it walks the upper triangle in ``block x block`` tiles,
one stripe of row blocks at a time.

Determinism: every tile is computed by the same code regardless of which
worker runs it, and tile sums are folded into the per-row accumulators on
the calling thread in ascending column-block order. Output is therefore
bit-identical for any thread count.
"""

from __future__ import annotations

import math
import os
import threading
from concurrent.futures import Executor, ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass, field

import numpy as np

from .corrwin import MATERIALIZATION_LIMIT, StandardizedWindow, _finish, corr_tile, standardize
from .errors import PanelTooShortError
from .panel import Panel, WindowSpec, window_slice

THREADS_ENV = "DIGICOPY_THREADS"
AGGREGATES = ("sum", "mean")


def default_threads() -> int:
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


@dataclass(frozen=True)
class EngineConfig:
    block: int = 256
    threads: int = field(default_factory=default_threads)
    aggregate: str = "sum"
    materialization_limit: int = MATERIALIZATION_LIMIT
    # emit the point t = T whose window is the last k rows
    forecast_point: bool = True
    # rows longer than this use a compensated accumulator
    compensate_above: int = 100_000

    def __post_init__(self):
        if self.block < 1:
            raise ValueError("block must be >= 1")
        if self.threads < 1:
            raise ValueError("threads must be >= 1")
        if self.aggregate not in AGGREGATES:
            raise ValueError(f"aggregate must be one of {AGGREGATES}")


@dataclass(frozen=True, eq=False)
class IndicatorSeries:
    """Per-time indicator vectors and their aggregate ``V(t)``.

    ``g`` is None for opaque published series where only ``V(t)`` is known.
    """

    times: tuple
    v_agg: np.ndarray
    g: np.ndarray | None = None
    mode_label: str = ""
    params: tuple = ()
    periods: tuple = ()
    aggregate: str = "sum"

    def __post_init__(self):
        v = np.array(self.v_agg, dtype=np.float64)
        v.setflags(write=False)
        object.__setattr__(self, "v_agg", v)
        object.__setattr__(self, "times", tuple(self.times))
        if self.g is not None:
            g = np.array(self.g, dtype=np.float64)
            g.setflags(write=False)
            object.__setattr__(self, "g", g)
        if len(self.times) != len(v):
            raise ValueError("times and v_agg lengths differ")

    @classmethod
    def from_values(cls, times, values, mode_label: str = "") -> "IndicatorSeries":
        return cls(tuple(times), np.asarray(values, dtype=np.float64), None, mode_label)

    @property
    def n(self) -> int | None:
        return None if self.g is None else self.g.shape[1]

    def __len__(self):
        return len(self.times)


def aggregate(g_row: np.ndarray, how: str = "sum") -> float:
    total = math.fsum(g_row.tolist())
    if how == "mean":
        return total / len(g_row)
    return total


class _Accumulator:
    """Per-row running sums, optionally Neumaier-compensated."""

    def __init__(self, n: int, compensated: bool):
        self.s = np.zeros(n)
        self.c = np.zeros(n) if compensated else None

    def add(self, sl: slice, x: np.ndarray):
        if self.c is None:
            self.s[sl] += x
            return
        s = self.s[sl]
        t = s + x
        self.c[sl] += np.where(np.abs(s) >= np.abs(x), (s - t) + x, (x - t) + s)
        self.s[sl] = t

    def result(self) -> np.ndarray:
        return self.s if self.c is None else self.s + self.c


_buffers = threading.local()


def _tile_buffers(a: int, b: int):
    size = getattr(_buffers, "size", 0)
    if size < a * b:
        _buffers.out = np.empty(a * b)
        _buffers.tmp = np.empty(a * b)
        _buffers.size = a * b
    return _buffers.out[: a * b].reshape(a, b), _buffers.tmp[: a * b].reshape(a, b)


def _abs_tile_sums(z: np.ndarray, ri: slice, rj: slice, diagonal: bool):
    zi = z[:, ri]
    zj = z[:, rj]
    out, tmp = _tile_buffers(zi.shape[1], zj.shape[1])
    corr_tile(zi, zj, out, tmp)
    np.abs(out, out=out)
    if diagonal:
        np.fill_diagonal(out, 1.0)
        return out.sum(axis=1), None
    return out.sum(axis=1), out.sum(axis=0)


@contextmanager
def _pool(threads: int, executor: Executor | None):
    if executor is not None or threads <= 1:
        yield executor
        return
    with ThreadPoolExecutor(max_workers=threads) as ex:
        yield ex


def row_abs_sums(
    z: StandardizedWindow,
    cfg: EngineConfig | None = None,
    executor: Executor | None = None,
) -> np.ndarray:
    """``out[i] = sum_j |r_ij|`` from blocked k-length dot products."""
    cfg = cfg or EngineConfig()
    n = z.n
    B = cfg.block
    blocks = [slice(s, min(s + B, n)) for s in range(0, n, B)]
    acc = _Accumulator(n, n > cfg.compensate_above)
    zz = z.z
    with _pool(cfg.threads, executor) as ex:
        for bi, ri in enumerate(blocks):
            jobs = range(bi, len(blocks))

            def work(bj, ri=ri, bi=bi):
                return _abs_tile_sums(zz, ri, blocks[bj], bj == bi)

            results = map(work, jobs) if ex is None or len(jobs) == 1 else ex.map(work, jobs)
            # Rows of stripe bi already hold blocks < bi from earlier stripes;
            # rows of block bj > bi receive block bi here, before their own stripe.
            for bj, (rows, cols) in zip(jobs, results):
                acc.add(ri, rows)
                if cols is not None:
                    acc.add(blocks[bj], cols)
    return acc.result()


def naive_row_abs_sums(z: StandardizedWindow, limit: int = MATERIALIZATION_LIMIT) -> np.ndarray:
    """Reference path: materialize R, then sum absolute rows."""
    from .corrwin import correlation_matrix

    return np.abs(correlation_matrix(z, limit).r).sum(axis=1)


def evaluation_times(T: int, k: int, forecast_point: bool = True) -> range:
    return range(k, T + 1 if forecast_point else T)


def indicator_series(
    p: Panel,
    w: WindowSpec | int = 6,
    cfg: EngineConfig | None = None,
    mode_label: str = "basic_mode",
) -> IndicatorSeries:
    cfg = cfg or EngineConfig()
    w = w if isinstance(w, WindowSpec) else WindowSpec(int(w))
    times = evaluation_times(p.T, w.k, cfg.forecast_point)
    if p.T < w.k or len(times) == 0:
        raise PanelTooShortError(f"panel shorter than window: T={p.T}, k={w.k}")
    g = np.empty((len(times), p.n))
    with _pool(cfg.threads, None) as ex:
        for row, t in enumerate(times):
            g[row] = row_abs_sums(standardize(window_slice(p, t, w)), cfg, ex)
    v = [aggregate(g_t, cfg.aggregate) for g_t in g]
    periods = tuple(p.periods[t] if t < p.T else None for t in times)
    return IndicatorSeries(tuple(times), np.array(v), g, mode_label, tuple(p.ids), periods, cfg.aggregate)


def total_indicator(s: IndicatorSeries) -> float:
    """Grand total ``G``: every ``G_i(t)`` over all parameters and times."""
    if len(s) == 0:
        raise ValueError("empty indicator series")
    if s.g is None:
        if s.aggregate != "sum":
            raise ValueError("series without g vectors needs the sum aggregate")
        return math.fsum(s.v_agg.tolist())
    return math.fsum(s.g.ravel().tolist())


class SlidingIndicator:
    """Incremental engine state over a sliding k-row window.

    Running per-column sums and sums of squares are kept relative to a shift
    (the oldest row at the last refresh) to limit cancellation. They are
    rebuilt from the buffered rows every ``k`` slides, which bounds drift and
    makes the state after a full window replacement identical to a freshly
    initialized one. Not safe for concurrent mutation.
    """

    def __init__(self, rows: np.ndarray, at_time: int, cfg: EngineConfig | None = None):
        rows = np.array(rows, dtype=np.float64)  # chronological: oldest first
        if rows.ndim != 2 or rows.shape[0] < 2:
            raise ValueError("need a k x n window with k >= 2")
        if not np.isfinite(rows).all():
            raise ValueError("window contains non-finite values")
        self.cfg = cfg or EngineConfig()
        self.k, self.n = rows.shape
        self.at_time = at_time
        self._buf = rows
        self._head = 0  # index of the oldest row
        self._refresh()

    @classmethod
    def from_panel(cls, p: Panel, t: int, w: WindowSpec | int = 6, cfg: EngineConfig | None = None):
        win = window_slice(p, t, w)
        return cls(win.rows[::-1], t, cfg)

    def _chronological(self) -> np.ndarray:
        return np.roll(self._buf, -self._head, axis=0)

    def _refresh(self):
        rows = self._chronological()
        self._buf = rows
        self._head = 0
        self._shift = rows[0].copy()
        d = rows - self._shift
        self._s1 = d.sum(axis=0)
        self._s2 = (d * d).sum(axis=0)
        self._since_refresh = 0

    def window(self) -> np.ndarray:
        """Current rows, newest first (same layout as ``window_slice``)."""
        return self._chronological()[::-1]

    def standardized(self) -> StandardizedWindow:
        x = self.window()
        k = self.k
        mean = self._shift + self._s1 / k
        variance = (self._s2 - self._s1 * self._s1 / k) / (k - 1)
        constant = (x == x[0]).all(axis=0)
        return _finish(x - mean, variance, constant, self.at_time)

    def g(self) -> np.ndarray:
        return row_abs_sums(self.standardized(), self.cfg)

    def push(self, row) -> np.ndarray:
        """Drop the oldest row, append ``row`` and return the new ``G`` vector."""
        row = np.asarray(row, dtype=np.float64)
        if row.shape != (self.n,):
            raise ValueError(f"expected a row of length {self.n}, got shape {row.shape}")
        if not np.isfinite(row).all():
            raise ValueError("next_row contains non-finite values")
        old = self._buf[self._head].copy()
        self._buf[self._head] = row
        self._head = (self._head + 1) % self.k
        self.at_time += 1
        self._since_refresh += 1
        if self._since_refresh >= self.k:
            self._refresh()
        else:
            dn = row - self._shift
            do = old - self._shift
            self._s1 += dn - do
            self._s2 += dn * dn - do * do
        return self.g()


def incremental_update(state: SlidingIndicator, next_row) -> tuple[SlidingIndicator, np.ndarray]:
    g = state.push(next_row)
    return state, g
