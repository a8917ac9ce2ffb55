"""Markov process over structures and the three-state caricature chain.

Random numbers come from a counter-based hash keyed by
``(seed, trajectory, step)``, so every trajectory can be replayed alone and
ensembles do not depend on evaluation order.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Sequence

import numpy as np

from . import _kernels
from .apriori import JumpTable

MAX_STEPS = 10_000
EXTINCT = "extinct"
ALIVE = "alive"
STEP_LIMIT = "step-limit"


class ProcessError(RuntimeError):
    pass


@dataclass
class Trajectory:
    index: int
    seed: int
    steps: list = field(default_factory=list)  # (state id, successor id, probability)
    terminal: str = ALIVE
    final: str = ""

    @property
    def weight(self) -> float:
        w = 1.0
        for _, _, p in self.steps:
            w *= p
        return w


def _ordered(table: JumpTable, ident) -> list[tuple[str, Any, float]]:
    rows = sorted(((ident(k), k, p) for k, p in table.jumps.items()), key=lambda r: r[0])
    return rows


class _Cache:
    def __init__(self, evaluator, ident):
        self.evaluator = evaluator
        self.ident = ident
        self.tables: dict = {}

    def get(self, state):
        sid = self.ident(state)
        if sid not in self.tables:
            try:
                table = self.evaluator(state)
            except Exception as exc:
                raise ProcessError(f"evaluator failed on structure {sid}: {exc}") from exc
            if table is None:
                self.tables[sid] = None
            else:
                rows = _ordered(table, self.ident)
                cum = np.cumsum([p for _, _, p in rows]) if rows else np.zeros(0)
                self.tables[sid] = (table, rows, cum)
        return self.tables[sid]


def _walk(initial, cache: _Cache, index: int, seed: int, max_steps: int) -> Trajectory:
    tr = Trajectory(index, seed)
    state = initial
    for step in range(max_steps):
        entry = cache.get(state)
        sid = cache.ident(state)
        if entry is None:
            tr.terminal, tr.final = ALIVE, sid
            return tr
        table, rows, cum = entry
        u = _kernels.uniform(seed, index, step)
        j = int(np.searchsorted(cum, u, side="right"))
        if j >= len(rows) and rows and table.extinction == 0.0:
            j = len(rows) - 1  # rounding sliver of a normalised table
        if j >= len(rows):
            # extinction is the last slot
            tr.steps.append((sid, EXTINCT, table.extinction))
            tr.terminal, tr.final = EXTINCT, sid
            return tr
        nid, nxt, p = rows[j]
        tr.steps.append((sid, nid, p))
        state = nxt
    tr.terminal, tr.final = STEP_LIMIT, cache.ident(state)
    if cache.get(state) is None:
        tr.terminal = ALIVE
    return tr


@dataclass
class Ensemble:
    seed: int
    count: int
    max_steps: int
    trajectories: list
    jump_tables: dict

    def report(self) -> dict:
        n = max(self.count, 1)
        terminals = Counter(t.terminal for t in self.trajectories)
        hits = Counter(t.final for t in self.trajectories if t.terminal == ALIVE)
        lengths = [len(t.steps) for t in self.trajectories]
        paths = {}
        for t in self.trajectories:
            paths[tuple((a, b) for a, b, _ in t.steps)] = t.weight
        replay = max((abs(t.weight - math.prod(p for _, _, p in t.steps)) for t in self.trajectories), default=0.0)
        return {
            "seed": self.seed,
            "trajectories": self.count,
            "max_steps": self.max_steps,
            "terminals": {k: terminals.get(k, 0) for k in (ALIVE, EXTINCT, STEP_LIMIT)},
            "extinction_rate": terminals.get(EXTINCT, 0) / n if self.count else 0.0,
            "hitting_frequencies": {k: v / n for k, v in sorted(hits.items())},
            "mean_length": (sum(lengths) / n) if self.count else 0.0,
            "weights": {
                "distinct_paths": len(paths),
                "distinct_path_weight_sum": math.fsum(paths.values()),
                "replay_residual": replay,
            },
            "jump_tables": self.jump_tables,
        }

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["trajectory", "step", "structure", "successor", "probability", "terminal"])
        for t in self.trajectories:
            for k, (a, b, p) in enumerate(t.steps):
                w.writerow([t.index, k, a, b, repr(p), t.terminal])
            if not t.steps:
                w.writerow([t.index, 0, t.final, "", "", t.terminal])
        return buf.getvalue()


def run_trajectories(
    initial: Hashable,
    evaluator: Callable[[Any], JumpTable | None],
    count: int,
    max_steps: int = MAX_STEPS,
    seed: int = 0,
    ident: Callable[[Any], str] = str,
) -> Ensemble:
    """Sample ``count`` independent trajectories from ``initial``.

    ``evaluator(state)`` returns the jump table of a state, or ``None`` for a
    halting state where the observer is left alive. Successors are ordered by
    ``ident`` with extinction last.
    """
    if count < 0 or max_steps < 0:
        raise ProcessError("count and max_steps must be nonnegative")
    cache = _Cache(evaluator, ident)
    trs = [_walk(initial, cache, i, seed, max_steps) for i in range(count)]
    if count == 0:
        cache.get(initial)
    tables = {sid: e[0].to_json(ident) for sid, e in sorted(cache.tables.items()) if e is not None}
    return Ensemble(seed, count, max_steps, trs, tables)


# --------------------------------------------------------------------------
# caricature: o loops with weight x, else drops into one of the sinks


@dataclass(frozen=True)
class CaricatureSpec:
    p: float
    q: float
    x: float
    variant: str = "A"
    weights_a: tuple = ()
    weights_b: tuple = ()

    def __post_init__(self):
        v = self.variant.upper()
        if v not in ("A", "B", "C"):
            raise ValueError(f"unknown caricature variant {self.variant!r}")
        if min(self.p, self.q, self.x) < 0:
            raise ValueError("p, q, x must be nonnegative")
        if not self.p + self.q > 0:
            raise ValueError("p + q must be positive")
        if v == "A":
            wa, wb = (1.0,), (1.0,)
        elif v == "B":
            wa, wb = (1.0, 1.0), (1.0,)
        else:
            wa, wb = tuple(map(float, self.weights_a)), tuple(map(float, self.weights_b))
            if not wa or not wb or min(wa + wb) < 0:
                raise ValueError("variant C needs nonnegative weight lists for both outcomes")
        object.__setattr__(self, "variant", v)
        object.__setattr__(self, "weights_a", wa)
        object.__setattr__(self, "weights_b", wb)

    @property
    def W_a(self) -> float:
        return math.fsum(self.weights_a)

    @property
    def W_b(self) -> float:
        return math.fsum(self.weights_b)

    def transition_row(self) -> np.ndarray:
        """Probabilities from ``o`` to ``[o, a_1.., b_1..]``."""
        row = np.array([self.x] + [w * self.p for w in self.weights_a] + [w * self.q for w in self.weights_b])
        return row / row.sum()


@dataclass(frozen=True)
class CaricatureClosedForm:
    F_a: float
    F_b: float
    spec: CaricatureSpec

    def F_n(self, n: int) -> float:
        """Probability of landing on an ``a`` sink at exactly step ``n``."""
        s = self.spec
        tot = s.W_a * s.p + s.W_b * s.q + s.x
        return (s.W_a * s.p / tot) * (s.x / tot) ** (n - 1)


def caricature_closed_form(spec: CaricatureSpec) -> CaricatureClosedForm:
    a = spec.W_a * spec.p
    b = spec.W_b * spec.q
    if not a + b > 0:
        raise ValueError("both outcomes have zero weight")
    return CaricatureClosedForm(a / (a + b), b / (a + b), spec)


def caricature_chain(spec: CaricatureSpec) -> tuple[np.ndarray, np.ndarray]:
    """Cumulative transition matrix and absorbing flags of the expanded chain."""
    row = spec.transition_row()
    k = row.size
    P = np.eye(k)
    P[0] = row
    cdf = np.cumsum(P, axis=1)
    cdf[:, -1] = 1.0
    absorbing = np.ones(k, dtype=bool)
    absorbing[0] = False
    return cdf, absorbing


@dataclass(frozen=True)
class CaricatureEstimate:
    F_a: float
    F_b: float
    se_a: float
    se_b: float
    count: int
    unfinished: int
    mean_steps: float
    max_steps_taken: int

    def to_json(self) -> dict:
        return dict(self.__dict__)


def caricature_simulate(spec: CaricatureSpec, count: int, seed: int = 0, max_steps: int = MAX_STEPS) -> CaricatureEstimate:
    cdf, absorbing = caricature_chain(spec)
    final, steps = _kernels.sample_chain(cdf, absorbing, 0, count, max_steps, seed)
    na = len(spec.weights_a)
    in_a = (final >= 1) & (final <= na)
    in_b = final > na
    fa = float(in_a.mean()) if count else 0.0
    fb = float(in_b.mean()) if count else 0.0
    se = lambda f: math.sqrt(f * (1 - f) / count) if count else 0.0
    return CaricatureEstimate(
        fa,
        fb,
        se(fa),
        se(fb),
        int(count),
        int((final == 0).sum()),
        float(steps.mean()) if count else 0.0,
        int(steps.max()) if count else 0,
    )
