"""Abstract switching structures, relabelling quotient and immediate successors.

A structure records ``M`` determinations of ``N`` two-status switches. The
determinations are ordered ``0..M-1``; ``phi[i]`` is ``+n`` or ``-n`` for the
status (open/closed) found for switch ``n`` at determination ``i``. The docket
fixes the causal arrangement of the determination regions.

Dockets arising from regions have a transitive ``P`` relation, so every
successor enumerated here keeps ``P`` a strict partial order compatible with
the index order (ascending).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

from .causal import Docket


class StructureError(ValueError):
    pass


@dataclass(frozen=True)
class SwitchingStructure:
    m: int
    n: int
    docket: Docket
    phi: tuple

    def __post_init__(self):
        object.__setattr__(self, "phi", tuple(int(v) for v in self.phi))
        if self.m < 1 or self.n < 1:
            raise StructureError("M and N must be positive")
        if self.docket.m != self.m or len(self.phi) != self.m:
            raise StructureError(f"docket size {self.docket.m} and phi length {len(self.phi)} must equal M={self.m}")

    @classmethod
    def make(cls, rel: Sequence[str], phi: Sequence[int]) -> "SwitchingStructure":
        phi = tuple(int(v) for v in phi)
        return cls(len(phi), max(abs(v) for v in phi), Docket(tuple(rel)), phi)

    @classmethod
    def minimal(cls, signs: Sequence[int] = (1, -1, 1, -1)) -> "SwitchingStructure":
        """One switch, time-ordered determinations with the given statuses."""
        return cls(len(signs), 1, Docket.chain(len(signs)), tuple(signs))

    @property
    def rel(self) -> tuple:
        return self.docket.rel

    def key(self) -> tuple:
        return (self.m, self.n, self.docket.rel, self.phi)

    def indices(self, switch: int) -> list[int]:
        """Determination indices ``j_n(1) < ... < j_n(K_n)`` of one switch."""
        return [i for i, v in enumerate(self.phi) if abs(v) == switch]

    def statuses(self, switch: int) -> list[int]:
        return [1 if self.phi[i] > 0 else -1 for i in self.indices(switch)]

    def remove(self, i: int) -> "SwitchingStructure":
        """Drop determination ``i`` and restrict the docket (labels unchanged)."""
        keep = [k for k in range(self.m) if k != i]
        phi = tuple(self.phi[k] for k in keep)
        return SwitchingStructure(len(keep), max(abs(v) for v in phi), self.docket.restrict(keep), phi)

    def to_json(self) -> dict:
        return {"M": self.m, "N": self.n, "rel": list(self.docket.rel), "phi": list(self.phi)}

    @classmethod
    def from_json(cls, obj: dict) -> "SwitchingStructure":
        s = cls(int(obj["M"]), int(obj["N"]), Docket(tuple(obj["rel"])), tuple(obj["phi"]))
        return s

    def dumps(self) -> str:
        return json.dumps(self.to_json(), sort_keys=True)


def sign_changes(signs: Sequence[int]) -> int:
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def has_alternation(signs: Sequence[int]) -> bool:
    """Some subsequence reads ``s, -s, s, -s``.

    A longest alternating subsequence takes one element per run, so this is
    the same as having at least three sign changes.
    """
    return sign_changes(signs) >= 3


@dataclass
class ValidationReport:
    ok: bool
    violations: list = field(default_factory=list)

    def to_json(self) -> dict:
        return {"ok": self.ok, "violations": self.violations}


def validate(s: SwitchingStructure) -> ValidationReport:
    bad = []
    for i, v in enumerate(s.phi):
        if v == 0 or abs(v) > s.n:
            bad.append({"clause": "phi-range", "determination": i, "value": v})
    missing = sorted(set(range(1, s.n + 1)) - {abs(v) for v in s.phi})
    for n in missing:
        bad.append({"clause": "phi-onto", "switch": n})
    if not s.docket.ascending:
        bad.append({"clause": "ascending"})
    for n in range(1, s.n + 1):
        if n in missing:
            continue
        k = len(s.indices(n))
        if k < 4:
            bad.append({"clause": "min-determinations", "switch": n, "count": k})
        if not has_alternation(s.statuses(n)):
            bad.append({"clause": "open-close-twice", "switch": n})
    return ValidationReport(not bad, bad)


# --------------------------------------------------------------------------
# insertion of one determination into a docket


@dataclass(frozen=True)
class DocketAlphabet:
    """Finite surrogate for the new regions a successor may add.

    ``relations`` limits the relation of a new region to each earlier-indexed
    one (``P``: strictly after it, ``S``: spacelike) and to each later-indexed
    one (``P``: strictly before it, ``S``). ``positions`` optionally restricts
    the insertion indices for same-switch successors (``None`` means all).
    """

    relations: frozenset = frozenset("PS")
    positions: tuple | None = None

    def __post_init__(self):
        rels = frozenset(self.relations)
        if not rels or not rels <= {"P", "S"}:
            raise ValueError("alphabet relations must be a nonempty subset of {'P', 'S'}")
        object.__setattr__(self, "relations", rels)

    @classmethod
    def chain(cls) -> "DocketAlphabet":
        return cls(frozenset("P"))


FULL = DocketAlphabet()


def _masks(rel: Sequence[str]) -> tuple[list[int], list[int]]:
    m = len(rel)
    pred = [0] * m
    succ = [0] * m
    for i in range(m):
        for j in range(m):
            if rel[i][j] == "P":
                succ[i] |= 1 << j
                pred[j] |= 1 << i
    return pred, succ


def _down_sets(pred: list[int], pos: int) -> Iterator[int]:
    def rec(i, cur):
        if i == pos:
            yield cur
            return
        yield from rec(i + 1, cur)
        if pred[i] & ~cur == 0:
            yield from rec(i + 1, cur | (1 << i))

    yield from rec(0, 0)


def _up_sets(succ: list[int], cand: int, m: int) -> Iterator[int]:
    items = [u for u in range(m - 1, -1, -1) if cand >> u & 1]

    def rec(k, cur):
        if k == len(items):
            yield cur
            return
        u = items[k]
        yield from rec(k + 1, cur)
        if succ[u] & ~cur == 0:
            yield from rec(k + 1, cur | (1 << u))

    yield from rec(0, 0)


def one_point_extensions(rel: Sequence[str], pos: int, relations=frozenset("PS")) -> Iterator[tuple]:
    """All ascending transitive dockets with a new region inserted at ``pos``.

    The new row is fixed by ``D`` (earlier regions in its past, a down-set)
    and ``U`` (later regions in its future, an up-set) with ``D x U`` inside
    the existing ``P`` relation.
    """
    m = len(rel)
    pred, succ = _masks(rel)
    full = (1 << m) - 1
    after = full & ~((1 << pos) - 1)
    for D in _down_sets(pred, pos):
        cand = after
        for d in range(pos):
            if D >> d & 1:
                cand &= succ[d]
        for U in _up_sets(succ, cand, m):
            if "S" not in relations and (D | U) != full:
                continue
            if "P" not in relations and (D or U):
                continue
            yield _insert_row(rel, pos, D, U)


def _insert_row(rel: Sequence[str], pos: int, D: int, U: int) -> tuple:
    m = len(rel)
    new_row = []
    for i in range(m):
        new_row.append("F" if D >> i & 1 else ("P" if U >> i & 1 else "S"))
    out = []
    for i in range(m):
        row = list(rel[i])
        c = "P" if D >> i & 1 else ("F" if U >> i & 1 else "S")
        row.insert(pos, c)
        out.append("".join(row))
    new_row.insert(pos, "S")
    out.insert(pos, "".join(new_row))
    return tuple(out)


# --------------------------------------------------------------------------
# successors


def same_switch_successors(s: SwitchingStructure, alphabet: DocketAlphabet = FULL) -> frozenset:
    """One new determination on an existing switch, anywhere in the order."""
    out = set()
    positions = range(s.m + 1) if alphabet.positions is None else [p for p in alphabet.positions if 0 <= p <= s.m]
    for pos in positions:
        for rel in one_point_extensions(s.rel, pos, alphabet.relations):
            d = Docket(rel)
            for sw in range(1, s.n + 1):
                for sign in (1, -1):
                    phi = s.phi[:pos] + (sign * sw,) + s.phi[pos:]
                    out.add(SwitchingStructure(s.m + 1, s.n, d, phi))
    return frozenset(out)


def new_switch_successors(s: SwitchingStructure, alphabet: DocketAlphabet = FULL) -> frozenset:
    """A new switch ``N+1`` with four determinations of alternating status."""
    new = s.n + 1
    out = set()

    def rec(rel, phi, k, first, lead):
        if k == 4:
            out.add(SwitchingStructure(len(phi), new, Docket(rel), phi))
            return
        for pos in range(first, len(phi) + 1):
            status = lead * (1 if k % 2 == 0 else -1) * new
            for r in one_point_extensions(rel, pos, alphabet.relations):
                rec(r, phi[:pos] + (status,) + phi[pos:], k + 1, pos + 1, lead)

    for lead in (1, -1):
        rec(s.rel, s.phi, 0, 0, lead)
    return frozenset(out)


# --------------------------------------------------------------------------
# relabelling quotient


@dataclass(frozen=True)
class CanonicalForm:
    """Lexicographically least member of a relabelling orbit."""

    structure: SwitchingStructure

    def to_json(self) -> dict:
        return self.structure.to_json()


def _relabel(s: SwitchingStructure, order: Sequence[int]) -> SwitchingStructure:
    """Structure seen with determinations in ``order``, switches by first appearance."""
    labels: dict[int, int] = {}
    phi = []
    for i in order:
        sw = abs(s.phi[i])
        if sw not in labels:
            labels[sw] = len(labels) + 1
        phi.append(labels[sw] if s.phi[i] > 0 else -labels[sw])
    return SwitchingStructure(s.m, s.n, s.docket.restrict(order), tuple(phi))


def apply_relabelling(s: SwitchingStructure, pi: Sequence[int], switch_map: dict[int, int]) -> SwitchingStructure:
    """Relabel with determination order ``pi`` and switch renaming ``switch_map``.

    Position ``i`` of the result is old determination ``pi[i]``.
    """
    phi = tuple((1 if s.phi[i] > 0 else -1) * switch_map[abs(s.phi[i])] for i in pi)
    return SwitchingStructure(s.m, s.n, s.docket.restrict(list(pi)), phi)


def is_admissible(s: SwitchingStructure, pi: Sequence[int]) -> bool:
    """Reordering keeps the docket ascending and each switch's own order."""
    pos = {p: i for i, p in enumerate(pi)}
    for n in range(1, s.n + 1):
        idx = s.indices(n)
        if any(pos[a] > pos[b] for a, b in zip(idx, idx[1:])):
            return False
    return s.docket.restrict(list(pi)).ascending


def canonicalize(s: SwitchingStructure) -> CanonicalForm:
    """Least relabelling under the order on per-position keys.

    Position keys are ``(switch label, status, relations to earlier
    positions)``; switches are labelled by first appearance, which is always
    the minimising choice. Admissible orders are the linear extensions of
    ``P`` together with each switch's own order, explored as a beam of
    prefixes that tie on the least key so far.
    """
    m = s.m
    rel = s.rel
    before = [0] * m  # elements that must be placed first
    for i in range(m):
        for j in range(m):
            if rel[j][i] == "P":
                before[i] |= 1 << j
    last_of_switch: dict[int, int] = {}
    for i, v in enumerate(s.phi):
        sw = abs(v)
        if sw in last_of_switch:
            before[i] |= 1 << last_of_switch[sw]
        last_of_switch[sw] = i

    beam = [((), 0, {})]
    for _ in range(m):
        best = None
        nxt = []
        for order, used, labels in beam:
            for i in range(m):
                if used >> i & 1 or before[i] & ~used:
                    continue
                sw = abs(s.phi[i])
                lab = labels.get(sw, len(labels) + 1)
                key = (lab, 0 if s.phi[i] > 0 else 1, "".join(rel[j][i] for j in order))
                if best is None or key < best:
                    best = key
                    nxt = []
                if key == best:
                    nl = labels if sw in labels else {**labels, sw: lab}
                    nxt.append((order + (i,), used | (1 << i), nl))
        beam = nxt
    return CanonicalForm(_relabel(s, beam[0][0]))


def is_equivalent(a: SwitchingStructure, b: SwitchingStructure) -> bool:
    return a.m == b.m and a.n == b.n and canonicalize(a) == canonicalize(b)


def immediate_successors(s: SwitchingStructure, alphabet: DocketAlphabet = FULL) -> frozenset:
    """Canonical forms of all same-switch and new-switch successors, deduplicated."""
    succ = same_switch_successors(s, alphabet) | new_switch_successors(s, alphabet)
    return frozenset(canonicalize(x) for x in succ)


def sorted_structures(items: Iterable) -> list:
    def k(x):
        st = x.structure if isinstance(x, CanonicalForm) else x
        return st.key()

    return sorted(items, key=k)


# --------------------------------------------------------------------------
# enumeration of small structures


def ascending_dockets(m: int, relations=frozenset("PS")) -> Iterator[tuple]:
    """All ascending dockets on ``m`` regions with transitive ``P``."""
    if m == 0:
        yield ()
        return
    for rel in ascending_dockets(m - 1, relations):
        yield from one_point_extensions(rel, m - 1, relations)


def valid_sign_patterns(m: int) -> Iterator[tuple]:
    """Status sequences of one switch on ``m`` determinations that open and close at least twice."""
    for bits in range(1 << m):
        signs = tuple(1 if bits >> (m - 1 - i) & 1 else -1 for i in range(m))
        if has_alternation(signs):
            yield signs


def single_switch_structures(m: int, relations=frozenset("PS")) -> Iterator[SwitchingStructure]:
    for rel in ascending_dockets(m, relations):
        d = Docket(rel)
        for signs in valid_sign_patterns(m):
            yield SwitchingStructure(m, 1, d, signs)
