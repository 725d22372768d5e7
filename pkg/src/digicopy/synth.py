"""Seeded synthetic digital copies.

Panels follow a factor model ``x(t) = level + L f(t) + e(t)``. Randomness
comes from numpy's PCG64 bit generator, whose raw 64-bit output stream is
fixed for a given seed. Streams are split with ``SeedSequence(seed).spawn``:

* child 0 draws the factor matrix (row-major, period by factor),
* child 1 draws random loadings when requested,
* child ``2 + j`` draws the noise of column ``j``.

Raw words become uniforms ``((w >> 11) + 0.5) / 2**53`` in the open unit
interval and normals through the inverse normal CDF (``scipy.special.ndtri``).
Generator methods such as ``standard_normal`` are avoided on purpose: their
algorithms are not frozen across numpy releases.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri

from .errors import ModelError
from .panel import EXPENSE, Panel, ParamMeta, make_panel
from .strategy import StrategyModel

_FACTOR_STREAM = 0
_LOADING_STREAM = 1
_FIRST_NOISE_STREAM = 2


def _normals(seed_seq: np.random.SeedSequence, size: int) -> np.ndarray:
    words = np.random.PCG64(seed_seq).random_raw(size)
    u = ((words >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53
    return ndtri(u)


@dataclass(frozen=True, eq=False)
class SynthSpec:
    n: int
    T: int
    loadings: np.ndarray  # n x f
    noise_sigma: float | np.ndarray = 1.0
    seed: int = 0
    level: float | np.ndarray = 0.0
    # (start period index, loading perturbation added from that period on)
    regime_switch: tuple | None = None
    processes: tuple = ()

    def __post_init__(self):
        lam = np.asarray(self.loadings, dtype=np.float64).reshape(self.n, -1)
        object.__setattr__(self, "loadings", lam)
        if self.n < 1 or self.T < 1:
            raise ValueError("n and T must be >= 1")
        if np.any(np.asarray(self.noise_sigma) < 0):
            raise ValueError("noise_sigma must be >= 0")

    @property
    def f(self) -> int:
        return self.loadings.shape[1]


def generate_panel(spec: SynthSpec) -> Panel:
    n, T, f = spec.n, spec.T, spec.f
    children = np.random.SeedSequence(spec.seed).spawn(_FIRST_NOISE_STREAM + n)
    factors = _normals(children[_FACTOR_STREAM], T * f).reshape(T, f)

    lam = np.broadcast_to(spec.loadings, (T, n, f)).copy()
    if spec.regime_switch is not None:
        start, shift = spec.regime_switch
        lam[start:] += np.broadcast_to(np.asarray(shift, dtype=np.float64), (n, f))

    values = np.zeros((T, n)) + np.broadcast_to(np.asarray(spec.level, dtype=np.float64), (n,))
    # explicit per-factor accumulation; BLAS reductions are not bit-portable
    for h in range(f):
        values += factors[:, h, None] * lam[:, :, h]
    sigma = np.broadcast_to(np.asarray(spec.noise_sigma, dtype=np.float64), (n,))
    for j in range(n):
        if sigma[j] > 0:
            values[:, j] += sigma[j] * _normals(children[_FIRST_NOISE_STREAM + j], T)

    params = [ParamMeta(f"x{j + 1:0{len(str(n))}d}", _process_of(spec, j), EXPENSE) for j in range(n)]
    return make_panel(values, range(1, T + 1), params)


def _process_of(spec: SynthSpec, j: int) -> str:
    if not spec.processes:
        return ""
    per = -(-spec.n // len(spec.processes))
    return spec.processes[j // per]


def spec_from_dict(d: dict) -> SynthSpec:
    """Build a spec from its JSON form.

    ``loadings`` is either an explicit n x f list or an object with ``kind``:
    ``constant`` (``f``, ``value``), ``blocks`` (``sizes``: one factor per
    block, loading 1 inside the block) or ``random`` (``f``, standard normal
    draws from the loading stream).
    """
    n, T = int(d["n"]), int(d["T"])
    seed = int(d.get("seed", 0))
    spec_l = d.get("loadings", {"kind": "constant", "f": 1, "value": 1.0})
    if isinstance(spec_l, list):
        lam = np.asarray(spec_l, dtype=np.float64)
    else:
        kind = spec_l.get("kind")
        if kind == "constant":
            lam = np.full((n, int(spec_l.get("f", 1))), float(spec_l.get("value", 1.0)))
        elif kind == "blocks":
            sizes = [int(s) for s in spec_l["sizes"]]
            if sum(sizes) != n:
                raise ValueError("block sizes must add up to n")
            lam = np.zeros((n, len(sizes)))
            row = 0
            for b, size in enumerate(sizes):
                lam[row : row + size, b] = float(spec_l.get("value", 1.0))
                row += size
        elif kind == "random":
            f = int(spec_l.get("f", 1))
            children = np.random.SeedSequence(seed).spawn(_FIRST_NOISE_STREAM)
            lam = _normals(children[_LOADING_STREAM], n * f).reshape(n, f)
        else:
            raise ValueError(f"unknown loadings kind {kind!r}")
    switch = d.get("regime_switch")
    if switch is not None:
        switch = (int(switch["start"]), switch.get("shift", 0.0))
    return SynthSpec(
        n=n,
        T=T,
        loadings=lam,
        noise_sigma=d.get("noise_sigma", 1.0),
        seed=seed,
        level=d.get("level", 0.0),
        regime_switch=switch,
        processes=tuple(d.get("processes", ())),
    )


def load_spec(text: str | bytes) -> SynthSpec:
    return spec_from_dict(json.loads(text))


def apply_strategy_overlay(p: Panel, mdl: StrategyModel, effect, start: int = 0) -> Panel:
    """Controlled-mode panel: assigned strategies add cost to their processes.

    For every assigned (strategy, process) pair, each expense column of that
    process gains ``effect`` (scalar or per-pair matrix, thousand currency
    units per period) in every period with 0-based index ``>= start``.
    """
    mdl.check()
    effect = np.broadcast_to(np.asarray(effect, dtype=np.float64), mdl.shape)
    known = {meta.process_id for meta in p.params}
    values = np.array(p.values, copy=True)
    for i, j in zip(*np.nonzero(mdl.assign)):
        process = mdl.processes[j]
        if process not in known:
            raise ModelError(f"unknown process id {process!r}")
        if effect[i, j] == 0:
            continue
        for col in p.columns_of_process(process, EXPENSE):
            values[start:, col] += effect[i, j]
    return p.with_values(values)
