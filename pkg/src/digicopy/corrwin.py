"""Windowed standardization and Pearson correlation.

This is the explicit small-n realization: it materializes the full
correlation matrix. Use :mod:`digicopy.indicator` for large panels.

Each coefficient is the k-term dot product of two standardized columns,
accumulated in row order ``l = 0 .. k-1``, divided by ``k - 1`` and clamped
to ``[-1, 1]``. The tile kernel and the scalar path perform exactly the same
floating-point operations, so matrix entries equal scalar entries bitwise.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError
from .panel import WindowMatrix

DEAD_VARIANCE = 1e-24
MATERIALIZATION_LIMIT = 4096


@dataclass(frozen=True, eq=False)
class StandardizedWindow:
    z: np.ndarray  # k x n, C-contiguous
    dead_mask: np.ndarray  # n booleans
    at_time: int

    @property
    def k(self) -> int:
        return self.z.shape[0]

    @property
    def n(self) -> int:
        return self.z.shape[1]


@dataclass(frozen=True, eq=False)
class CorrelationWindow:
    r: np.ndarray
    dead_mask: np.ndarray
    at_time: int


def _finish(deviations: np.ndarray, variance: np.ndarray, dead: np.ndarray, at_time: int) -> StandardizedWindow:
    dead = dead | (variance < DEAD_VARIANCE)
    scale = np.sqrt(np.where(dead, 1.0, variance))
    z = deviations / scale
    z[:, dead] = 0.0
    z = np.ascontiguousarray(z)
    z.setflags(write=False)
    dead.setflags(write=False)
    return StandardizedWindow(z, dead, at_time)


def standardize(w: WindowMatrix) -> StandardizedWindow:
    """Center and scale every column of the window to unit sample variance.

    A column is dead when its values are all equal or its sample variance is
    below ``1e-24``; dead columns come out as all zeros.
    """
    x = w.rows
    k = x.shape[0]
    if k < 2:
        raise ValueError("standardization needs at least 2 rows")
    mean = x.sum(axis=0) / k
    d = x - mean
    variance = (d * d).sum(axis=0) / (k - 1)
    # For large constant amounts the rounded mean differs from the value by an
    # ulp, so an exact-equality test is needed on top of the threshold.
    constant = (x == x[0]).all(axis=0)
    return _finish(d, variance, constant, w.at_time)


def corr_tile(zi: np.ndarray, zj: np.ndarray, out: np.ndarray | None = None, tmp: np.ndarray | None = None) -> np.ndarray:
    """Clamped correlation block between column sets ``zi`` (k x a) and ``zj`` (k x b)."""
    k = zi.shape[0]
    shape = (zi.shape[1], zj.shape[1])
    if out is None:
        out = np.empty(shape)
    if tmp is None:
        tmp = np.empty(shape)
    np.multiply.outer(zi[0], zj[0], out=out)
    for l in range(1, k):
        np.multiply.outer(zi[l], zj[l], out=tmp)
        out += tmp
    out /= k - 1
    np.clip(out, -1.0, 1.0, out=out)
    return out


def correlation_entry(z: StandardizedWindow, i: int, j: int) -> float:
    n = z.n
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"column index out of range for n={n}: ({i}, {j})")
    if i == j:
        return 1.0
    if z.dead_mask[i] or z.dead_mask[j]:
        return 0.0
    zz = z.z
    acc = zz[0, i] * zz[0, j]
    for l in range(1, z.k):
        acc = acc + zz[l, i] * zz[l, j]
    r = acc / (z.k - 1)
    return float(min(1.0, max(-1.0, r)))


def correlation_matrix(z: StandardizedWindow, limit: int = MATERIALIZATION_LIMIT) -> CorrelationWindow:
    n = z.n
    if n > limit:
        raise CapacityError(
            f"n={n} exceeds the materialization limit {limit}; "
            "use digicopy.indicator.row_abs_sums for large panels"
        )
    r = corr_tile(z.z, z.z)
    # mirror the upper triangle so symmetry is exact
    lower = np.tril_indices(n, -1)
    r[lower] = r.T[lower]
    np.fill_diagonal(r, 1.0)
    r.setflags(write=False)
    return CorrelationWindow(r, z.dead_mask, z.at_time)
