"""A priori probabilities of state sequences, manifestations and structures.

The continuum suprema of the theory are replaced by maxima over finite
candidate menus. The jump rule turns successor a priori probabilities into
Markov transition probabilities with a possible extinction remainder.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Hashable, Mapping, Sequence

import numpy as np

from . import quantum as qm
from .structures import SwitchingStructure, is_equivalent

TAU = 1e-9


class AprioriError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class StateSequence:
    """States ``sigma_1 .. sigma_M`` on one algebra, measured from ``omega``."""

    omega: np.ndarray
    states: tuple
    algebra: Any
    label: str = ""

    def __post_init__(self):
        if len(self.states) == 0:
            raise AprioriError("a state sequence needs at least one state")
        d = self.algebra.dim
        rhos = []
        for r in (self.omega, *self.states):
            if isinstance(r, qm.AlgebraState):
                if r.algebra is not self.algebra and r.algebra != self.algebra:
                    raise AprioriError("state lives on a different algebra")
                r = r.rho
            r = np.asarray(r, dtype=complex)
            if r.shape != (d, d):
                raise AprioriError(f"state of shape {r.shape} on an algebra of dimension {d}")
            rhos.append(r)
        object.__setattr__(self, "omega", rhos[0])
        object.__setattr__(self, "states", tuple(rhos[1:]))

    def __len__(self):
        return len(self.states)

    def factors(self) -> list[float]:
        """``app(sigma_m | sigma_{m-1})`` for ``m = 1..M`` with ``sigma_0 = omega``."""
        out = []
        prev = self.omega
        for s in self.states:
            out.append(qm.app(s, prev, self.algebra))
            prev = s
        return out


def seq_app(seq: StateSequence) -> float:
    """Product of the step a priori probabilities; 0 if any step is 0."""
    total = 1.0
    for f in seq.factors():
        if f == 0.0:
            return 0.0
        total *= f
    return total


@dataclass(frozen=True, eq=False)
class ManifestationMenu:
    """Finite stand-in for the admissible state sequences of one manifestation."""

    candidates: tuple
    manifestation: Any = None
    label: str = ""

    def __post_init__(self):
        cands = tuple(self.candidates)
        if not cands:
            raise AprioriError("empty manifestation menu")
        if len({len(c) for c in cands}) != 1:
            raise AprioriError("menu candidates must have a common length")
        object.__setattr__(self, "candidates", cands)

    @property
    def length(self) -> int:
        return len(self.candidates[0])


def _stage_survivors(menu: ManifestationMenu, tau: float) -> tuple[list[int], list[float]]:
    facs = [c.factors() for c in menu.candidates]
    alive = list(range(len(facs)))
    prefix = [1.0] * len(facs)
    for k in range(menu.length):
        for i in alive:
            prefix[i] *= facs[i][k]
        best = max(prefix[i] for i in alive)
        alive = [i for i in alive if prefix[i] >= best * (1.0 - tau)]
    return alive, prefix


def inductive_app(menu: ManifestationMenu, tau: float = TAU) -> tuple[float, StateSequence]:
    """Prefix-first maximisation over the menu.

    At each prefix length only candidates within relative ``tau`` of the
    stage maximum survive. Returns the final value and the first surviving
    candidate in menu order.
    """
    alive, prefix = _stage_survivors(menu, tau)
    best = max(prefix[i] for i in alive)
    return best, menu.candidates[alive[0]]


def inductive_survivors(menu: ManifestationMenu, tau: float = TAU) -> list[StateSequence]:
    """All candidates that stay tied with the stage maxima to the end."""
    alive, _ = _stage_survivors(menu, tau)
    return [menu.candidates[i] for i in alive]


def structure_app(s, menus: Mapping[Hashable, Sequence[ManifestationMenu]], tau: float = TAU) -> float:
    """Maximum of :func:`inductive_app` over labellings and their menus.

    Keys of ``menus`` are relabellings of ``s``. For plain (non-structure)
    keys they must equal ``s``.
    """
    if not menus:
        raise AprioriError("no menus supplied")
    best = None
    for key, ms in menus.items():
        if isinstance(s, SwitchingStructure):
            if not (isinstance(key, SwitchingStructure) and is_equivalent(key, s)):
                raise AprioriError("menu key is not a relabelling of the structure")
        elif key != s:
            raise AprioriError(f"menu key {key!r} does not match {s!r}")
        for menu in ms:
            v, _ = inductive_app(menu, tau)
            best = v if best is None else max(best, v)
    if best is None:
        raise AprioriError("no menus supplied")
    return best


@dataclass(frozen=True)
class JumpTable:
    """Transition probabilities out of one structure."""

    jumps: dict
    extinction: float
    xi: float
    parent_app: float
    normalised: bool  # True when xi >= parent_app

    def total(self) -> float:
        return math.fsum(self.jumps.values()) + self.extinction

    def to_json(self, ident: Callable[[Any], str] = str) -> dict:
        return {
            "jumps": {ident(k): v for k, v in self.jumps.items()},
            "extinction": self.extinction,
            "xi": self.xi,
            "parent_app": self.parent_app,
            "branch": "xi>=parent" if self.normalised else "xi<parent",
        }


def jump_distribution(parent_app: float, successor_apps: Mapping[Hashable, float]) -> JumpTable:
    """Jump rule: divide by ``xi`` if it reaches the parent value, else by the parent.

    In the second case the deficit ``1 - xi/parent`` is the extinction
    probability. Rounding residue goes to extinction so the table sums to 1.
    """
    if not parent_app > 0:
        raise AprioriError("parent a priori probability must be positive")
    for k, v in successor_apps.items():
        if v < 0 or not math.isfinite(v):
            raise AprioriError(f"successor {k!r} has invalid a priori probability {v}")
    xi = math.fsum(successor_apps.values())
    if xi >= parent_app:
        jumps = {k: v / xi for k, v in successor_apps.items()}
        return JumpTable(jumps, 0.0, xi, parent_app, True)
    jumps = {k: v / parent_app for k, v in successor_apps.items()}
    ext = max(0.0, 1.0 - math.fsum(jumps.values()))
    return JumpTable(jumps, ext, xi, parent_app, False)


@dataclass(frozen=True, eq=False)
class TheoryPoint:
    """A dynamics label with its parameters and candidate universal states."""

    label: str
    params: dict = field(default_factory=dict)
    omegas: tuple = ()

    def __post_init__(self):
        oms = tuple(np.asarray(o.rho if isinstance(o, qm.AlgebraState) else o, dtype=complex) for o in self.omegas)
        for o in oms:
            qm.check_density(o)
        object.__setattr__(self, "omegas", oms)


def structure_app_variant(
    s,
    menu_factory: Callable[[TheoryPoint, np.ndarray], Mapping[Hashable, Sequence[ManifestationMenu]]],
    V: Sequence[TheoryPoint],
    tau: float = TAU,
) -> tuple[float, tuple]:
    """Maximum over theory points and their states of :func:`structure_app`.

    ``menu_factory(point, omega)`` supplies the menus for ``s``; an empty
    mapping means no manifestation exists there and contributes 0. Returns
    the value and the first maximising ``(point, omega index)``.
    """
    if not V:
        raise AprioriError("empty theory class")
    best = -1.0
    arg = None
    for point in V:
        for k, om in enumerate(point.omegas):
            menus = menu_factory(point, om)
            v = structure_app(s, menus, tau) if menus else 0.0
            if v > best:
                best, arg = v, (point, k)
    if arg is None:
        raise AprioriError("theory class has no candidate states")
    return best, arg
