"""Brute-force reference implementations used only by the tests.

Nothing here calls the library's enumeration or canonicalisation code; each
oracle regenerates its answer from definitions by exhaustive search.
"""

from __future__ import annotations

import itertools
from functools import lru_cache

import mpmath
import numpy as np


# --------------------------------------------------------------------------
# causal relations by point sampling


def sampled_margins(lo_a, hi_a, lo_b, hi_b, k: int = 11):
    """Extremes of ``dt - |dx|`` and ``|dx| - |dt|`` over a grid of ``y - x``.

    For two boxes the differences ``y - x`` fill the box
    ``[lo_b - hi_a, hi_b - lo_a]``; the grid samples it with ``k`` points per
    axis, corners included. Returns ``(min_future_gap, min_past_gap,
    min_space_gap, spacing)``.
    """
    lo = np.asarray(lo_b, float) - np.asarray(hi_a, float)
    hi = np.asarray(hi_b, float) - np.asarray(lo_a, float)
    axes = [np.linspace(l, h, k) for l, h in zip(lo, hi)]
    D = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, len(lo))
    xn = np.linalg.norm(D[:, 1:], axis=1)
    spacing = float(np.linalg.norm((hi - lo)[1:]) / (k - 1))
    return float(np.min(D[:, 0] - xn)), float(np.min(-D[:, 0] - xn)), float(np.min(xn - np.abs(D[:, 0]))), spacing


def sampled_relation(lo_a, hi_a, lo_b, hi_b, k: int = 11):
    """Relation of box a to box b, or ``None`` when the grid cannot decide.

    ``dt - |dx|`` is concave, so its minimum over the difference box sits at a
    corner and the P/F answers are exact. The spacelike margin is only known
    up to the grid spacing.
    """
    fut, past, space, h = sampled_margins(lo_a, hi_a, lo_b, hi_b, k)
    if fut > 0:
        return "P"
    if past > 0:
        return "F"
    if space > h / 2 + 1e-12:
        return "S"
    if space < 0:
        return "X"
    return None


# --------------------------------------------------------------------------
# dockets and successors


def _pairs(m):
    return [(i, j) for i in range(m) for j in range(i + 1, m)]


@lru_cache(maxsize=None)
def ascending_grids(m: int) -> tuple:
    """Every ascending relation grid on ``m`` regions with transitive ``P``.

    Enumerates all ``2^(m(m-1)/2)`` upper-triangular P/S fillings and keeps
    those whose P relation is closed under composition.
    """
    pairs = _pairs(m)
    total = 1 << len(pairs)
    keep = []
    chunk = 1 << 15
    for start in range(0, total, chunk):
        codes = np.arange(start, min(total, start + chunk), dtype=np.int64)
        A = np.zeros((codes.size, m, m), dtype=np.int32)
        for b, (i, j) in enumerate(pairs):
            A[:, i, j] = (codes >> b) & 1
        ok = ~np.any((np.matmul(A, A) > 0) & (A == 0), axis=(1, 2))
        keep.extend(codes[ok].tolist())
    out = []
    for c in keep:
        g = [["S"] * m for _ in range(m)]
        for b, (i, j) in enumerate(pairs):
            if c >> b & 1:
                g[i][j], g[j][i] = "P", "F"
        out.append(tuple("".join(r) for r in g))
    return tuple(out)


def delete(rel, pos):
    keep = [i for i in range(len(rel)) if i != pos]
    return tuple("".join(rel[i][j] for j in keep) for i in keep)


@lru_cache(maxsize=None)
def extension_table(m: int) -> dict:
    """``parent grid -> {(pos, child grid)}`` for all ``m+1``-region children."""
    table: dict = {}
    for child in ascending_grids(m + 1):
        for pos in range(m + 1):
            table.setdefault(delete(child, pos), set()).add((pos, child))
    return table


def same_switch_successors(rel, phi, n: int, relations: str = "PS") -> set:
    """Ordered same-switch successors ``(rel', phi')`` by filtering the extension table."""
    out = set()
    for pos, child in extension_table(len(rel)).get(tuple(rel), ()):
        row = child[pos][:pos] + child[pos][pos + 1 :]
        if "S" not in relations and "S" in row:
            continue
        if "P" not in relations and set(row) != {"S"}:
            continue
        for sw in range(1, n + 1):
            for sign in (1, -1):
                out.add((child, tuple(phi[:pos]) + (sign * sw,) + tuple(phi[pos:])))
    return out


def _transitive(rel) -> bool:
    m = len(rel)
    return all(
        rel[i][k] == "P"
        for i in range(m)
        for j in range(m)
        for k in range(m)
        if rel[i][j] == "P" and rel[j][k] == "P"
    )


def new_switch_successors_chain(rel, phi, n: int) -> set:
    """Ordered new-switch successors when every new region is time-ordered against all others.

    Tries every placement of the four new determinations and both leading
    statuses, then keeps transitive grids.
    """
    m = len(rel)
    out = set()
    for new in itertools.combinations(range(m + 4), 4):
        old = [i for i in range(m + 4) if i not in new]
        g = [["S"] * (m + 4) for _ in range(m + 4)]
        for a, b in itertools.combinations(range(m + 4), 2):
            if a in new or b in new:
                g[a][b], g[b][a] = "P", "F"
        for x, ox in enumerate(old):
            for y, oy in enumerate(old):
                if x != y:
                    g[ox][oy] = rel[x][y]
        grid = tuple("".join(r) for r in g)
        if not _transitive(grid):
            continue
        for lead in (1, -1):
            p = [0] * (m + 4)
            for x, ox in enumerate(old):
                p[ox] = phi[x]
            for k, i in enumerate(new):
                p[i] = lead * (1 if k % 2 == 0 else -1) * (n + 1)
            out.add((grid, tuple(p)))
    return out


# --------------------------------------------------------------------------
# canonical forms by exhaustive relabelling


def has_alternation_brute(signs) -> bool:
    return any(
        signs[a] == -signs[b] == signs[c] == -signs[d] for a, b, c, d in itertools.combinations(range(len(signs)), 4)
    )


def admissible(rel, phi, pi) -> bool:
    m = len(rel)
    where = {p: i for i, p in enumerate(pi)}
    for i in range(m):
        for j in range(m):
            # no earlier position may lie in the future of a later one
            if where[i] < where[j] and rel[i][j] == "F":
                return False
            if i < j and abs(phi[i]) == abs(phi[j]) and where[i] > where[j]:
                return False
    return True


def relabelled(rel, phi, pi):
    labels: dict = {}
    out = []
    for i in pi:
        sw = abs(phi[i])
        labels.setdefault(sw, len(labels) + 1)
        out.append(labels[sw] if phi[i] > 0 else -labels[sw])
    return tuple("".join(rel[i][j] for j in pi) for i in pi), tuple(out)


def _position_keys(rel, phi):
    return tuple((abs(v), 0 if v > 0 else 1, "".join(rel[j][i] for j in range(i))) for i, v in enumerate(phi))


def canonical_brute(rel, phi):
    """Least relabelling over every admissible permutation."""
    best = None
    for pi in itertools.permutations(range(len(phi))):
        if not admissible(rel, phi, pi):
            continue
        r, p = relabelled(rel, phi, pi)
        k = _position_keys(r, p)
        if best is None or k < best[0]:
            best = (k, r, p)
    return best[1], best[2]


# --------------------------------------------------------------------------
# relative entropy in extended precision


def rel_entropy_mp(sigma, rho, dps: int = 40) -> float:
    """``tr(-s log s + s log r)`` with mpmath eigendecompositions."""
    with mpmath.workdps(dps):
        S = mpmath.matrix(np.asarray(sigma, complex).tolist())
        R = mpmath.matrix(np.asarray(rho, complex).tolist())

        def logm_h(A):
            E, Q = mpmath.eighe(A)
            d = A.rows
            L = mpmath.matrix(d, d)
            for k in range(d):
                L[k, k] = mpmath.log(E[k])
            return Q * L * Q.transpose_conj()

        X = S * (logm_h(R) - logm_h(S))
        return float(mpmath.re(sum(X[i, i] for i in range(X.rows))))
