"""Minkowski regions, set-level causal relations and dockets.

Signature is (-, +, ..., +) with time as coordinate 0 and c = 1. A region is
in the past of another when *every* point of the first lies in the open
future light cone of *every* point of the second; spacelike likewise means
every point pair is spacelike. Anything else is ``MIXED``.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.linalg import expm
from scipy.optimize import minimize

from . import _kernels

DEFAULT_DIM = 4
EPS = 1e-12
_SQRT2 = np.sqrt(2.0)


class Relation(enum.Enum):
    PAST = "P"
    FUTURE = "F"
    SPACELIKE = "S"
    MIXED = "X"

    def reverse(self) -> "Relation":
        if self is Relation.PAST:
            return Relation.FUTURE
        if self is Relation.FUTURE:
            return Relation.PAST
        return self


_CODE_TO_REL = {
    _kernels.REL_SPACELIKE: Relation.SPACELIKE,
    _kernels.REL_PAST: Relation.PAST,
    _kernels.REL_FUTURE: Relation.FUTURE,
    _kernels.REL_MIXED: Relation.MIXED,
}
_REL_TO_CODE = {v: k for k, v in _CODE_TO_REL.items()}


class DimensionMismatch(ValueError):
    pass


class MixedRelationError(ValueError):
    """Two regions of a sequence are neither ordered nor spacelike."""

    def __init__(self, i: int, j: int):
        super().__init__(f"regions {i} and {j} have a mixed causal relation")
        self.i = i
        self.j = j


def minkowski_metric(dim: int = DEFAULT_DIM) -> np.ndarray:
    eta = np.eye(dim)
    eta[0, 0] = -1.0
    return eta


def interval(v) -> float:
    """Minkowski square ``v.v`` with signature (-, +, ..., +)."""
    v = np.asarray(v, dtype=float)
    return float(-v[0] ** 2 + v[1:] @ v[1:])


def boost_generator(direction, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Lie-algebra element generating boosts along the spatial ``direction``."""
    n = np.zeros(dim - 1)
    n[: len(direction)] = direction
    K = np.zeros((dim, dim))
    K[0, 1:] = n
    K[1:, 0] = n
    return K


def rotation_generator(i: int, j: int, dim: int = DEFAULT_DIM) -> np.ndarray:
    """Generator of rotations in the spatial plane of axes ``i, j`` (1-based)."""
    if not (0 < i < dim and 0 < j < dim and i != j):
        raise ValueError("rotation axes must be two distinct spatial indices")
    K = np.zeros((dim, dim))
    K[i, j] = -1.0
    K[j, i] = 1.0
    return K


def boost(rapidity, direction=(1.0,), dim: int = DEFAULT_DIM) -> np.ndarray:
    n = np.asarray(direction, dtype=float)
    n = n / np.linalg.norm(n)
    return expm(rapidity * boost_generator(n, dim))


def is_restricted_lorentz(L, tol: float = 1e-9) -> bool:
    L = np.asarray(L, dtype=float)
    eta = minkowski_metric(L.shape[0])
    return bool(
        np.allclose(L.T @ eta @ L, eta, atol=tol)
        and abs(np.linalg.det(L) - 1.0) < tol
        and L[0, 0] >= 1.0 - tol
    )


# --------------------------------------------------------------------------
# regions


@dataclass(frozen=True)
class Box:
    lo: tuple
    hi: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise DimensionMismatch("box corners differ in dimension")
        if any(a > b for a, b in zip(lo, hi)):
            raise ValueError("box corners must be ordered componentwise")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    radius = 0.0

    def core(self) -> np.ndarray:
        return np.array(list(itertools.product(*zip(self.lo, self.hi))))

    def contains(self, y, tol: float = 0.0) -> bool:
        y = np.asarray(y)
        return bool(np.all(y >= np.array(self.lo) - tol) and np.all(y <= np.array(self.hi) + tol))

    def poincare(self, shift, L, anchor) -> "Region":
        L = np.asarray(L, dtype=float)
        shift = np.asarray(shift, dtype=float)
        anchor = np.asarray(anchor, dtype=float)
        if np.allclose(L, np.eye(self.dim), atol=1e-14):
            d = shift - anchor
            return Box(np.add(self.lo, d), np.add(self.hi, d))
        return Hull(shift + (self.core() - anchor) @ L.T)

    def to_json(self) -> dict:
        return {"shape": "box", "lo": list(self.lo), "hi": list(self.hi)}


@dataclass(frozen=True)
class Ball:
    """Euclidean ball in spacetime coordinates."""

    center: tuple
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(v) for v in self.center))
        if not self.radius >= 0:
            raise ValueError("ball radius must be nonnegative")
        object.__setattr__(self, "radius", float(self.radius))

    @property
    def dim(self) -> int:
        return len(self.center)

    def core(self) -> np.ndarray:
        return np.array([self.center])

    def contains(self, y, tol: float = 0.0) -> bool:
        return bool(np.linalg.norm(np.subtract(y, self.center)) <= self.radius + tol)

    def poincare(self, shift, L, anchor) -> "Region":
        L = np.asarray(L, dtype=float)
        c = np.asarray(shift, dtype=float) + L @ (np.asarray(self.center) - np.asarray(anchor, dtype=float))
        if np.allclose(L.T @ L, np.eye(self.dim), atol=1e-12):
            return Ball(c, self.radius)
        # ellipsoid image: replace by its tight axis-aligned bounding box
        half = self.radius * np.linalg.norm(L, axis=1)
        return Box(c - half, c + half)

    def to_json(self) -> dict:
        return {"shape": "ball", "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Hull:
    """Convex hull of finitely many events (exact image of a box)."""

    vertices: tuple

    def __post_init__(self):
        v = tuple(tuple(float(c) for c in row) for row in np.atleast_2d(np.asarray(self.vertices, dtype=float)))
        if len({len(r) for r in v}) != 1:
            raise DimensionMismatch("hull vertices differ in dimension")
        object.__setattr__(self, "vertices", v)

    @property
    def dim(self) -> int:
        return len(self.vertices[0])

    radius = 0.0

    def core(self) -> np.ndarray:
        return np.array(self.vertices)

    def contains(self, y, tol: float = 1e-9) -> bool:
        return _hull_distance(self.core(), np.asarray(y, dtype=float)) <= tol

    def poincare(self, shift, L, anchor) -> "Region":
        return Hull(np.asarray(shift, dtype=float) + (self.core() - np.asarray(anchor, dtype=float)) @ np.asarray(L).T)

    def to_json(self) -> dict:
        return {"shape": "hull", "vertices": [list(v) for v in self.vertices]}


Region = Box | Ball | Hull


def region_from_json(obj: dict) -> Region:
    shape = obj["shape"]
    if shape == "box":
        return Box(obj["lo"], obj["hi"])
    if shape == "ball":
        return Ball(obj["center"], obj["radius"])
    if shape == "hull":
        return Hull(obj["vertices"])
    raise ValueError(f"unknown region shape {shape!r}")


def bounding_box(r: Region) -> tuple[np.ndarray, np.ndarray]:
    core = r.core()
    return core.min(axis=0) - r.radius, core.max(axis=0) + r.radius


def _hull_distance(V: np.ndarray, y: np.ndarray) -> float:
    """Euclidean distance from ``y`` to conv(V) by a simplex-constrained QP."""
    if len(V) == 1:
        return float(np.linalg.norm(V[0] - y))
    k = len(V)
    res = minimize(
        lambda w: np.sum((w @ V - y) ** 2),
        np.full(k, 1.0 / k),
        jac=lambda w: 2 * V @ (w @ V - y),
        bounds=[(0.0, 1.0)] * k,
        constraints=[{"type": "eq", "fun": lambda w: w.sum() - 1.0, "jac": lambda w: np.ones(k)}],
        method="SLSQP",
        options={"ftol": 1e-14, "maxiter": 500},
    )
    return float(np.sqrt(max(res.fun, 0.0)))


def regions_overlap(a: Region, b: Region, tol: float = 1e-12) -> bool:
    """Whether two regions share a point."""
    if a.dim != b.dim:
        raise DimensionMismatch("regions live in different dimensions")
    la, ha = bounding_box(a)
    lb, hb = bounding_box(b)
    if np.any(la > hb + tol) or np.any(lb > ha + tol):
        return False
    if isinstance(a, Box) and isinstance(b, Box):
        return True
    if isinstance(a, Ball) and isinstance(b, Ball):
        return np.linalg.norm(np.subtract(a.center, b.center)) <= a.radius + b.radius + tol
    if isinstance(b, Box) and not isinstance(a, Box):
        a, b = b, a
    if isinstance(a, Box) and isinstance(b, Ball):
        c = np.asarray(b.center)
        nearest = np.clip(c, a.lo, a.hi)
        return np.linalg.norm(c - nearest) <= b.radius + tol
    # general convex pair: distance between conv(core_a) and conv(core_b)
    Va, Vb = a.core(), b.core()
    D = (Vb[None, :, :] - Va[:, None, :]).reshape(-1, a.dim)
    return _hull_distance(D, np.zeros(a.dim)) <= a.radius + b.radius + 1e-9


# --------------------------------------------------------------------------
# relations


def _min_norm_minus_time(A: np.ndarray, B: np.ndarray, sign: float) -> float:
    """min of |x| - sign*t over conv(B) - conv(A), a convex program.

    Weights live on the two vertex sets separately, which keeps the program
    small compared with weighting every pairwise difference.
    """
    D = (B[None, :, :] - A[:, None, :]).reshape(-1, A.shape[1])
    vals = np.linalg.norm(D[:, 1:], axis=1) - sign * D[:, 0]
    if len(D) == 1 or D.shape[1] == 1:
        return float(vals.min())
    ka, kb = len(A), len(B)
    V = np.vstack([-A, B])
    t, X = V[:, 0], V[:, 1:]

    def f(w):
        x = w @ X
        return np.sqrt(x @ x + 1e-30) - sign * (w @ t)

    def g(w):
        x = w @ X
        return X @ x / np.sqrt(x @ x + 1e-30) - sign * t

    ia, ib = divmod(int(np.argmin(vals)), kb)
    w0 = np.zeros(ka + kb)
    w0[ia] = 1.0
    w0[ka + ib] = 1.0
    sa = np.r_[np.ones(ka), np.zeros(kb)]
    sb = 1.0 - sa
    res = minimize(
        f,
        w0,
        jac=g,
        bounds=[(0.0, 1.0)] * (ka + kb),
        constraints=[
            {"type": "eq", "fun": lambda w: w @ sa - 1.0, "jac": lambda w: sa},
            {"type": "eq", "fun": lambda w: w @ sb - 1.0, "jac": lambda w: sb},
        ],
        method="SLSQP",
        options={"ftol": 1e-15, "maxiter": 1000},
    )
    return float(min(res.fun, vals.min()))


def _core_box(r: Region):
    if isinstance(r, Box):
        return np.array(r.lo), np.array(r.hi)
    c = np.array(r.center)
    return c, c


def causal_relation(a: Region, b: Region, eps: float = EPS) -> Relation:
    """Set-level causal relation of ``a`` with respect to ``b``.

    ``PAST`` means every point of ``b`` lies in the open timelike future of
    every point of ``a``. Ball radii enter through the exact bound: over a
    Euclidean ball of radius r, ``t - |x|`` drops by at most ``sqrt(2) r``.
    """
    if a.dim != b.dim:
        raise DimensionMismatch(f"dimensions {a.dim} and {b.dim} differ")
    if not isinstance(a, Hull) and not isinstance(b, Hull):
        la, ha = _core_box(a)
        lb, hb = _core_box(b)
        code = _kernels.relation_matrix(np.stack([la, lb]), np.stack([ha, hb]), np.array([a.radius, b.radius]), eps)
        return _CODE_TO_REL[int(code[0, 1])]
    A, B = a.core(), b.core()
    D = (B[None, :, :] - A[:, None, :]).reshape(-1, a.dim)
    thresh = _SQRT2 * (a.radius + b.radius) + eps
    xnorm = np.linalg.norm(D[:, 1:], axis=1)
    # Δt - |Δx| is concave, so its minimum over the polytope sits at a vertex
    if np.min(D[:, 0] - xnorm) > thresh:
        return Relation.PAST
    if np.min(-D[:, 0] - xnorm) > thresh:
        return Relation.FUTURE
    if np.min(xnorm - np.abs(D[:, 0])) <= thresh:
        return Relation.MIXED
    if min(_min_norm_minus_time(A, B, 1.0), _min_norm_minus_time(A, B, -1.0)) > thresh:
        return Relation.SPACELIKE
    return Relation.MIXED


# --------------------------------------------------------------------------
# dockets


_VALID = set("PFS")
_FLIP = str.maketrans("PF", "FP")


@dataclass(frozen=True)
class Docket:
    """Causal arrangement of ``m`` regions as a relation grid.

    ``rel[i][j]`` is the relation of region ``i`` to region ``j``; the
    diagonal is ``S`` by convention.
    """

    rel: tuple

    def __post_init__(self):
        rel = tuple(row if isinstance(row, str) else "".join(r.value if isinstance(r, Relation) else r for r in row) for row in self.rel)
        m = len(rel)
        for i, row in enumerate(rel):
            if len(row) != m:
                raise ValueError("docket grid must be square")
            if not set(row) <= _VALID:
                raise ValueError(f"invalid relation symbol in row {i}: {row!r}")
            if row[i] != "S":
                raise ValueError("docket diagonal must be 'S'")
        # column j read with P and F swapped must equal row j
        for j, col in enumerate(zip(*rel)):
            if "".join(col).translate(_FLIP) != rel[j]:
                i = next(i for i in range(m) if Relation(rel[i][j]).reverse().value != rel[j][i])
                raise ValueError(f"relation grid not antisymmetric at ({min(i, j)}, {max(i, j)})")
        object.__setattr__(self, "rel", rel)

    @property
    def m(self) -> int:
        return len(self.rel)

    @property
    def ascending(self) -> bool:
        return not any(self.rel[i][j] == "F" for i in range(self.m) for j in range(i + 1, self.m))

    def relation(self, i: int, j: int) -> Relation:
        return Relation(self.rel[i][j])

    def matrix(self) -> np.ndarray:
        return np.array([[_REL_TO_CODE[Relation(c)] for c in row] for row in self.rel], dtype=np.int8)

    @classmethod
    def from_matrix(cls, codes) -> "Docket":
        codes = np.asarray(codes)
        rows = []
        for i, row in enumerate(codes):
            rows.append("".join("S" if i == j else _CODE_TO_REL[int(c)].value for j, c in enumerate(row)))
        return cls(tuple(rows))

    @classmethod
    def chain(cls, m: int) -> "Docket":
        """Totally time-ordered docket: region i before region j for i < j."""
        return cls(tuple("".join("S" if i == j else ("P" if i < j else "F") for j in range(m)) for i in range(m)))

    @classmethod
    def antichain(cls, m: int) -> "Docket":
        return cls(tuple("S" * m for _ in range(m)))

    def restrict(self, indices: Sequence[int]) -> "Docket":
        return Docket(tuple("".join(self.rel[i][j] for j in indices) for i in indices))

    def to_json(self) -> dict:
        return {"m": self.m, "rel": list(self.rel), "ascending": self.ascending}

    @classmethod
    def from_json(cls, obj: dict) -> "Docket":
        return cls(tuple(obj["rel"]))


def docket_of(regions: Sequence[Region], eps: float = EPS) -> Docket:
    """Relation grid of an ordered sequence of regions.

    Raises :class:`MixedRelationError` when some pair is mixed.
    """
    regions = list(regions)
    if not regions:
        raise ValueError("a docket needs at least one region")
    dims = {r.dim for r in regions}
    if len(dims) != 1:
        raise DimensionMismatch(f"regions of dimensions {sorted(dims)}")
    m = len(regions)
    if not any(isinstance(r, Hull) for r in regions):
        cores = [_core_box(r) for r in regions]
        codes = _kernels.relation_matrix(
            np.array([c[0] for c in cores]), np.array([c[1] for c in cores]), np.array([r.radius for r in regions]), eps
        )
    else:
        codes = np.zeros((m, m), dtype=np.int8)
        for i in range(m):
            for j in range(i + 1, m):
                rel = causal_relation(regions[i], regions[j], eps)
                codes[i, j] = _REL_TO_CODE[rel]
                codes[j, i] = _REL_TO_CODE[rel.reverse()]
    np.fill_diagonal(codes, _kernels.REL_SPACELIKE)
    bad = np.argwhere(codes == _kernels.REL_MIXED)
    if len(bad):
        i, j = sorted(bad[0])
        raise MixedRelationError(int(i), int(j))
    return Docket.from_matrix(codes)


def docket_permute(d: Docket, pi: Sequence[int]) -> Docket:
    """Docket of the relabelled sequence ``(A_pi(i))``: ``rel'[i][j] = rel[pi[i]][pi[j]]``."""
    pi = list(pi)
    if len(pi) != d.m:
        raise ValueError(f"permutation of length {len(pi)} for a docket of {d.m} regions")
    if sorted(pi) != list(range(d.m)):
        raise ValueError("pi is not a permutation")
    return d.restrict(pi)


def invert_permutation(pi: Sequence[int]) -> list[int]:
    inv = [0] * len(pi)
    for i, p in enumerate(pi):
        inv[p] = i
    return inv
