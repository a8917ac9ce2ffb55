"""Geometric realisations of switching structures.

Each switch follows a path ``t -> (x^n(t), L^n(t))`` of translations and
restricted Lorentz maps, parametrised by proper time. Between breakpoints
the Lorentz part is ``L(t) = L(t0) expm((t - t0) K)`` for a generator ``K``
and the velocity is ``dx/dt = L(t) u`` for a constant unit timelike ``u``.
The switch occupies ``Lambda_n(t) = x^n(t) + L^n(t)(Lambda - x)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Mapping, Sequence

import numpy as np
from scipy.linalg import expm
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import causal
from .causal import Ball, Box, Docket, Hull, MixedRelationError, Relation, Region
from .structures import SwitchingStructure

TOL = 1e-9
CONTACT_NUMBER = 13
SAMPLES_PER_UNIT = 64


class GeometryError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Segment:
    t0: float
    u: np.ndarray
    K: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "u", np.asarray(self.u, dtype=float))
        object.__setattr__(self, "K", np.asarray(self.K, dtype=float))
        d = len(self.u)
        eta = np.diag([-1.0] + [1.0] * (d - 1))
        if self.K.shape != (d, d) or np.abs(eta @ self.K + self.K.T @ eta).max() > 1e-9:
            raise GeometryError("segment generator is not in the Lorentz algebra")
        if self.u[0] <= 0 or abs(self.u @ eta @ self.u + 1.0) > 1e-9:
            raise GeometryError("segment velocity must be a future-pointing unit timelike vector")


def _flow(K: np.ndarray, u: np.ndarray, s: float) -> tuple[np.ndarray, np.ndarray]:
    """``(expm(sK), int_0^s expm(rK) u dr)`` via one augmented exponential."""
    d = len(u)
    A = np.zeros((d + 1, d + 1))
    A[:d, :d] = K
    A[:d, d] = u
    E = expm(s * A)
    return E[:d, :d], E[:d, d]


class SwitchPath:
    """Piecewise path starting at ``x`` with ``L = 1`` at ``t = 0``."""

    def __init__(self, segments: Sequence[Segment], T: float, x0=None):
        segs = sorted(segments, key=lambda sg: sg.t0)
        if not segs or abs(segs[0].t0) > 0:
            raise GeometryError("the first segment must start at t = 0")
        if len({sg.t0 for sg in segs}) != len(segs):
            raise GeometryError("segment start times must be distinct")
        self.segments = tuple(segs)
        self.T = float(T)
        self.dim = len(segs[0].u)
        self.x0 = np.zeros(self.dim) if x0 is None else np.asarray(x0, dtype=float)
        if segs[-1].t0 > self.T:
            raise GeometryError("segment starts after the path ends")

    @cached_property
    def _starts(self) -> list[tuple[np.ndarray, np.ndarray]]:
        """``(x, L)`` at each segment start, by continuity."""
        x = self.x0.copy()
        L = np.eye(self.dim)
        out = [(x, L)]
        for a, b in zip(self.segments, self.segments[1:]):
            E, I = _flow(a.K, a.u, b.t0 - a.t0)
            x = x + L @ I
            L = L @ E
            out.append((x, L))
        return out

    def _locate(self, t: float) -> int:
        if t < -TOL or t > self.T + TOL:
            raise GeometryError(f"t = {t} outside [0, {self.T}]")
        k = 0
        for i, sg in enumerate(self.segments):
            if sg.t0 <= t:
                k = i
        return k

    def state(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        """Position ``x^n(t)`` and Lorentz map ``L^n(t)``."""
        k = self._locate(t)
        sg = self.segments[k]
        x, L = self._starts[k]
        E, I = _flow(sg.K, sg.u, t - sg.t0)
        return x + L @ I, L @ E

    def position(self, t: float) -> np.ndarray:
        return self.state(t)[0]

    def lorentz(self, t: float) -> np.ndarray:
        return self.state(t)[1]

    def velocity(self, t: float) -> np.ndarray:
        k = self._locate(t)
        return self.lorentz(t) @ self.segments[k].u

    def to_json(self) -> dict:
        return {
            "T": self.T,
            "segments": [{"t": sg.t0, "u": sg.u.tolist(), "K": sg.K.tolist()} for sg in self.segments],
        }

    @classmethod
    def from_json(cls, obj: dict, x0=None) -> "SwitchPath":
        segs = [Segment(s["t"], s["u"], s["K"]) for s in obj["segments"]]
        return cls(segs, obj["T"], x0)


def rest_velocity(dim: int = causal.DEFAULT_DIM) -> np.ndarray:
    u = np.zeros(dim)
    u[0] = 1.0
    return u


def velocity_for(displacement, duration: float) -> np.ndarray:
    """Unit timelike ``u`` covering a spatial ``displacement`` in proper time ``duration``."""
    w = np.asarray(displacement, dtype=float) / duration
    return np.concatenate([[math.sqrt(1.0 + w @ w)], w])


def rest_path(T: float, dim: int = causal.DEFAULT_DIM, x0=None) -> SwitchPath:
    return SwitchPath([Segment(0.0, rest_velocity(dim), np.zeros((dim, dim)))], T, x0)


def travel_then_rest(displacement, travel: float, T: float, x0=None) -> SwitchPath:
    """Move by a spatial ``displacement`` during ``[0, travel]``, then rest."""
    disp = np.asarray(displacement, dtype=float)
    dim = len(disp) + 1
    if not np.any(disp):
        return rest_path(T, dim, x0)
    zero = np.zeros((dim, dim))
    segs = [Segment(0.0, velocity_for(disp, travel), zero), Segment(travel, rest_velocity(dim), zero)]
    return SwitchPath(segs, T, x0)


# --------------------------------------------------------------------------
# manifestations


@dataclass(eq=False)
class SwitchGeometry:
    path: SwitchPath
    det_times: tuple
    collapse_times: tuple
    first_collapse: int  # index m_n^i of the first collapse (1-based)
    P: int | None = None
    Q: int | None = None

    def __post_init__(self):
        self.det_times = tuple(float(t) for t in self.det_times)
        self.collapse_times = tuple(float(t) for t in self.collapse_times)

    @property
    def T(self) -> float:
        return self.path.T

    @property
    def S(self) -> float:
        return self.det_times[0]

    @property
    def last_collapse(self) -> int:
        return self.first_collapse + len(self.collapse_times) - 1


@dataclass(eq=False)
class Manifestation:
    x: np.ndarray
    base: Region
    switches: list
    theta: dict = field(default_factory=dict)
    projections: list = field(default_factory=list)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        for sw in self.switches:
            if not np.allclose(sw.path.x0, self.x):
                sw.path = SwitchPath(sw.path.segments, sw.path.T, self.x)
        self.theta = {int(k): tuple(int(v) for v in vals) for k, vals in self.theta.items()}

    @property
    def n(self) -> int:
        return len(self.switches)

    def switch(self, n: int) -> SwitchGeometry:
        if not 1 <= n <= self.n:
            raise GeometryError(f"no switch {n}")
        return self.switches[n - 1]

    def to_json(self) -> dict:
        from .quantum import matrix_to_json

        return {
            "base_point": self.x.tolist(),
            "base_region": self.base.to_json(),
            "theta": {str(k): list(v) for k, v in sorted(self.theta.items())},
            "switches": [
                {
                    "path": sw.path.to_json(),
                    "det_times": list(sw.det_times),
                    "collapse_times": list(sw.collapse_times),
                    "first_collapse": sw.first_collapse,
                    "P": sw.P,
                    "Q": sw.Q,
                }
                for sw in self.switches
            ],
            "projections": [matrix_to_json(p, (p.shape[0],)) for p in self.projections],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "Manifestation":
        from .quantum import matrix_from_json

        x = np.asarray(obj["base_point"], dtype=float)
        sws = [
            SwitchGeometry(
                SwitchPath.from_json(s["path"], x),
                s["det_times"],
                s["collapse_times"],
                int(s["first_collapse"]),
                s.get("P"),
                s.get("Q"),
            )
            for s in obj["switches"]
        ]
        projs = [matrix_from_json(p)[0] for p in obj.get("projections", [])]
        theta = {int(k): tuple(v) for k, v in obj.get("theta", {}).items()}
        return cls(x, causal.region_from_json(obj["base_region"]), sws, theta, projs)


def region_at(m: Manifestation, n: int, t: float) -> Region:
    """``Lambda_n(t)``: the base region moved by the switch's Poincare map."""
    sw = m.switch(n)
    x, L = sw.path.state(t)
    return m.base.poincare(x, L, m.x)


def determination_regions(m: Manifestation, s: SwitchingStructure) -> list[Region]:
    """``A_{j_n(k)} = Lambda_n(t_nk)`` placed at their positions in the order."""
    regions: list = [None] * s.m
    for n in range(1, s.n + 1):
        idx = s.indices(n)
        sw = m.switch(n)
        if len(idx) != len(sw.det_times):
            raise GeometryError(f"switch {n}: {len(sw.det_times)} times for {len(idx)} determinations")
        for i, t in zip(idx, sw.det_times):
            regions[i] = region_at(m, n, t)
    return regions


def docket_from_manifestation(m: Manifestation, s: SwitchingStructure) -> Docket:
    return causal.docket_of(determination_regions(m, s))


# --------------------------------------------------------------------------
# sampled tubes and overlap graphs


def time_grid(a: float, b: float, per_unit: int = SAMPLES_PER_UNIT, extra: Sequence[float] = ()) -> np.ndarray:
    k = max(2, int(math.ceil((b - a) * per_unit)) + 1)
    pts = np.concatenate([np.linspace(a, b, k), [t for t in extra if a <= t <= b]])
    return np.unique(pts)


def _overlaps(A: Sequence[Region], B: Sequence[Region], tol: float = TOL) -> np.ndarray:
    """Boolean matrix of pairwise intersection between two region lists."""
    if not A or not B:
        return np.zeros((len(A), len(B)), dtype=bool)
    if all(isinstance(r, Ball) for r in A) and all(isinstance(r, Ball) for r in B):
        ca = np.array([r.center for r in A])
        cb = np.array([r.center for r in B])
        ra = np.array([r.radius for r in A])
        rb = np.array([r.radius for r in B])
        dist = np.linalg.norm(ca[:, None, :] - cb[None, :, :], axis=2)
        return dist <= ra[:, None] + rb[None, :] + tol
    la, ha = zip(*(causal.bounding_box(r) for r in A))
    lb, hb = zip(*(causal.bounding_box(r) for r in B))
    la, ha, lb, hb = map(np.array, (la, ha, lb, hb))
    out = np.all((la[:, None, :] <= hb[None, :, :] + tol) & (lb[None, :, :] <= ha[:, None, :] + tol), axis=2)
    exact_boxes = all(isinstance(r, Box) for r in A) and all(isinstance(r, Box) for r in B)
    if not exact_boxes:
        for i, j in zip(*np.nonzero(out)):
            out[i, j] = causal.regions_overlap(A[i], B[j], tol)
    return out


@dataclass
class Report:
    clauses: dict

    @property
    def ok(self) -> bool:
        return all(c["pass"] for c in self.clauses.values())

    def to_json(self) -> dict:
        return {"ok": self.ok, "clauses": self.clauses}


def _clause(ok: bool, **detail) -> dict:
    return {"pass": bool(ok), **detail}


def _is_generator(K: np.ndarray, tol: float = TOL) -> bool:
    eta = causal.minkowski_metric(K.shape[0])
    return bool(np.allclose(K.T @ eta + eta @ K, 0.0, atol=tol))


def proper_time_residual(path: SwitchPath, samples: int = 100, h: float = 1e-5) -> float:
    """Largest ``|v.v + 1|`` of the numerically differentiated path."""
    worst = 0.0
    ends = [sg.t0 for sg in path.segments[1:]] + [path.T]
    for sg, end in zip(path.segments, ends):
        if end - sg.t0 <= 4 * h:
            continue
        for t in np.linspace(sg.t0 + 2 * h, end - 2 * h, samples):
            v = (path.position(t + h) - path.position(t - h)) / (2 * h)
            worst = max(worst, abs(causal.interval(v) + 1.0))
    return worst


def check_manifestation(
    m: Manifestation,
    s: SwitchingStructure,
    samples_per_unit: int = SAMPLES_PER_UNIT,
    contact_number: int = CONTACT_NUMBER,
) -> Report:
    """Clause-by-clause check of a manifestation against a structure."""
    c: dict = {}
    N = s.n
    if m.n != N:
        raise GeometryError(f"manifestation has {m.n} switches, structure has {N}")

    c["base_contains_origin"] = _clause(m.base.contains(m.x, 1e-12) and m.base.dim == len(m.x), note="base region contains x")

    bad = []
    for n in range(1, N + 1):
        sw = m.switch(n)
        ts = sw.det_times
        if len(ts) != len(s.indices(n)) or not (ts[0] >= 0 and all(a < b for a, b in zip(ts, ts[1:])) and ts[-1] <= sw.T):
            bad.append(n)
    c["determination_times_ordered"] = _clause(not bad, failing_switches=bad)

    bad = []
    for n in range(1, N + 1):
        sw = m.switch(n)
        ct = sw.collapse_times
        ok = (
            1 <= sw.first_collapse <= sw.last_collapse <= s.m
            and len(ct) >= 1
            and abs(ct[0] - sw.S) <= TOL
            and all(a <= b for a, b in zip(ct, ct[1:]))
            and ct[-1] <= sw.T
        )
        if not ok:
            bad.append(n)
    c["collapse_times_ordered"] = _clause(not bad, failing_switches=bad)

    c["paths_start_at_origin"] = _clause(all(np.allclose(m.switch(n).path.position(0.0), m.x) for n in range(1, N + 1)))

    bad = [n for n in range(1, N + 1) if not all(_is_generator(sg.K) for sg in m.switch(n).path.segments)]
    c["lorentz_generators"] = _clause(not bad, failing_switches=bad)

    # velocity may only change at collapse times once the switch is active
    bad = []
    for n in range(1, N + 1):
        sw = m.switch(n)
        segs = sw.path.segments
        for a, b in zip(segs, segs[1:]):
            if b.t0 > sw.S + TOL and not np.allclose(a.u, b.u):
                if not any(abs(b.t0 - t) <= TOL for t in sw.collapse_times):
                    bad.append(n)
                    break
    c["velocity_changes_at_collapses"] = _clause(not bad, failing_switches=bad)

    bad = []
    for n in range(1, N + 1):
        for sg in m.switch(n).path.segments:
            if abs(causal.interval(sg.u) + 1.0) > TOL or sg.u[0] <= 0:
                bad.append(n)
                break
    residual = max(proper_time_residual(m.switch(n).path) for n in range(1, N + 1))
    c["proper_time_parametrised"] = _clause(not bad and residual < 1e-6, failing_switches=bad, proper_time_residual=residual)

    # collapses follow at least m determinations
    det_points = np.array(
        [m.switch(n).path.position(t) for n in range(1, N + 1) for t in m.switch(n).det_times]
    )
    counts = {}
    bad = []
    for n in range(1, N + 1):
        sw = m.switch(n)
        for k, t in enumerate(sw.collapse_times):
            idx = sw.first_collapse + k
            y = sw.path.position(t)
            d = y[None, :] - det_points
            cnt = int(np.sum(d[:, 0] + 1e-9 >= np.linalg.norm(d[:, 1:], axis=1)))
            counts[f"{n}:{idx}"] = cnt
            if cnt < idx:
                bad.append([n, idx])
    c["collapses_follow_determinations"] = _clause(not bad, failing=bad, counts=counts)

    try:
        d = docket_from_manifestation(m, s)
        c["docket_matches_structure"] = _clause(d == s.docket, docket=list(d.rel))
    except MixedRelationError as e:
        c["docket_matches_structure"] = _clause(False, mixed=[e.i, e.j])
        d = None

    # sampled tubes of every active switch
    grids = {n: time_grid(m.switch(n).S, m.switch(n).T, samples_per_unit, m.switch(n).det_times) for n in range(1, N + 1)}
    tubes = {n: [region_at(m, n, t) for t in grids[n]] for n in range(1, N + 1)}

    c["spacelike_pairs_connected"] = _check_connected(m, s, d, grids, tubes)
    c["contact_number"] = check_contacts(tubes, contact_number, samples_per_unit)
    c["partner_not_ordered"] = _check_theta(m, s, grids, tubes)

    bad = []
    for n in range(1, N + 1):
        if not redetermination_spacing_holds(s.statuses(n), m.switch(n).det_times):
            bad.append(n)
    c["redetermination_spacing"] = _clause(not bad, failing_switches=bad)

    c["projection_pairs_orthogonal"] = _check_pairs(m)
    return Report(c)


def _check_connected(m, s, d, grids, tubes) -> dict:
    nodes: list = []
    owner = []
    det_node = {}
    for n in sorted(tubes):
        for t, r in zip(grids[n], tubes[n]):
            for k, td in enumerate(m.switch(n).det_times):
                if abs(t - td) <= 1e-12:
                    det_node[s.indices(n)[k]] = len(nodes)
            nodes.append(r)
            owner.append(n)
    adj = _overlaps(nodes, nodes)
    _, labels = connected_components(csr_matrix(adj), directed=False)
    bad = []
    if d is not None:
        for i in range(s.m):
            for j in range(i + 1, s.m):
                if d.rel[i][j] == "S" and labels[det_node[i]] != labels[det_node[j]]:
                    bad.append([i, j])
    return _clause(not bad and d is not None, disconnected_pairs=bad, components=int(labels.max() + 1))


def check_contacts(tubes, contact_number, samples_per_unit) -> dict:
    worst = 0
    where = None
    for n in tubes:
        hits = np.zeros(len(tubes[n]), dtype=int)
        for n2 in tubes:
            if n2 == n:
                continue
            hits += _overlaps(tubes[n], tubes[n2]).any(axis=1)
        k = int(np.argmax(hits))
        if hits[k] > worst:
            worst, where = int(hits[k]), [n, k]
    return _clause(worst <= contact_number, max_contacts=worst, at=where, bound=contact_number, samples_per_unit=samples_per_unit)


def _check_theta(m, s, grids, tubes) -> dict:
    bad = []
    for n in range(1, s.n + 1):
        if n not in m.theta:
            bad.append([n, "missing"])
            continue
        n2, k1, k2 = m.theta[n]
        if not 1 <= n2 <= s.n or (s.n > 1 and n2 == n):
            bad.append([n, "partner"])
            continue
        st = s.statuses(n2)
        if not (1 <= k1 < k2 <= len(st)) or st[k1 - 1] != -st[k2 - 1]:
            bad.append([n, "statuses"])
            continue
        first = region_at(m, n, m.switch(n).det_times[0])
        if not any(causal.causal_relation(first, r) in (Relation.SPACELIKE, Relation.MIXED) for r in tubes[n2]):
            bad.append([n, "ordered"])
    return _clause(not bad, failing=bad)


def _check_pairs(m) -> dict:
    if not m.projections:
        return _clause(True, note="no projection registry supplied")
    bad = []
    for n, sw in enumerate(m.switches, 1):
        try:
            P, Q = m.projections[sw.P], m.projections[sw.Q]
        except (TypeError, IndexError):
            bad.append(n)
            continue
        if np.linalg.norm(P @ Q) > TOL:
            bad.append(n)
    return _clause(not bad, failing_switches=bad)


def redetermination_spacing_holds(statuses: Sequence[int], times: Sequence[float]) -> bool:
    """Same-status redeterminations are at least half an alternating cycle apart."""
    K = len(statuses)
    triples = [
        times[k3] - times[k1]
        for k1 in range(K)
        for k2 in range(k1 + 1, K)
        for k3 in range(k2 + 1, K)
        if statuses[k1] == -statuses[k2] == statuses[k3]
    ]
    if not triples:
        return not any(statuses[a] == statuses[b] for a in range(K) for b in range(a + 1, K))
    shortest = min(triples)
    for k4 in range(K):
        for k5 in range(k4 + 1, K):
            if statuses[k4] == statuses[k5] and times[k5] - times[k4] < 0.5 * shortest - 1e-12:
                return False
    return True


# --------------------------------------------------------------------------
# builders


def static_manifestation(
    s: SwitchingStructure,
    offsets: Sequence[Sequence[float]],
    det_times: Sequence[Sequence[float]],
    base: Region | None = None,
    travel: float = 1.0,
    T: float | None = None,
    theta: Mapping[int, tuple] | None = None,
) -> Manifestation:
    """Switches that move to spatial ``offsets`` during ``[0, travel]`` and rest.

    Each switch gets a single collapse, numbered 1, at its first determination.
    """
    dim = len(offsets[0]) + 1
    x = np.zeros(dim)
    base = base if base is not None else Ball(x, 0.25)
    T = T if T is not None else max(max(ts) for ts in det_times) + 1.0
    sws = []
    for n in range(1, s.n + 1):
        path = travel_then_rest(offsets[n - 1], travel, T) if np.any(offsets[n - 1]) else rest_path(T, dim)
        idx = s.indices(n)
        ts = det_times[n - 1]
        if len(ts) != len(s.indices(n)):
            raise GeometryError(f"switch {n} needs {len(s.indices(n))} determination times")
        sws.append(SwitchGeometry(path, ts, (ts[0],), 1))
    if theta is None:
        theta = _default_theta(s)
    return Manifestation(x, base, sws, dict(theta))


def _default_theta(s: SwitchingStructure) -> dict:
    out = {}
    for n in range(1, s.n + 1):
        partner = n % s.n + 1 if s.n > 1 else n
        st = s.statuses(partner)
        k2 = next(k for k in range(1, len(st)) if st[k] == -st[0])
        out[n] = (partner, 1, k2 + 1)
    return out
