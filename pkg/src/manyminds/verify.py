"""Invariant suite run by ``manyminds verify``.

Every invariant takes a seed and returns ``(residual, tol)``; it passes when
``residual <= tol``. Injecting a fault replaces the tolerance by ``-1`` so the
named invariant must fail.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import apriori, causal, geometry, process, scenarios
from . import quantum as qm
from . import structures as st

Invariant = Callable[[int], tuple[float, float]]
REGISTRY: dict[str, Invariant] = {}


def invariant(name: str):
    def deco(fn):
        REGISTRY[name] = fn
        return fn

    return deco


def _random_box(rng, dim=4, scale=3.0):
    lo = rng.uniform(-scale, scale, dim)
    return causal.Box(lo, lo + rng.uniform(0.0, 1.0, dim))


@invariant("causal.reverse_symmetry")
def _reverse(seed):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(300):
        a, b = _random_box(rng), _random_box(rng)
        bad += causal.causal_relation(a, b) != causal.causal_relation(b, a).reverse()
    return float(bad), 0.0


@invariant("causal.permute_roundtrip")
def _permute(seed):
    rng = np.random.default_rng(seed)
    bad = 0
    for _ in range(50):
        m = int(rng.integers(1, 7))
        dockets = list(st.ascending_dockets(m))
        d = causal.Docket(dockets[int(rng.integers(len(dockets)))])
        pi = list(rng.permutation(m))
        bad += causal.docket_permute(causal.docket_permute(d, pi), causal.invert_permutation(pi)) != d
    return float(bad), 0.0


@invariant("structures.alternation_oracle")
def _a5(seed):
    bad = 0
    for m in range(1, 8):
        for signs in itertools.product((1, -1), repeat=m):
            brute = any(
                signs[a] == -signs[b] == signs[c] == -signs[d]
                for a, b, c, d in itertools.combinations(range(m), 4)
            )
            bad += brute != st.has_alternation(signs)
    return float(bad), 0.0


@invariant("structures.canonical_orbit")
def _orbit(seed):
    rng = np.random.default_rng(seed)
    pool = sorted(st.new_switch_successors(st.SwitchingStructure.minimal(), st.DocketAlphabet.chain()), key=lambda s: s.key())
    bad = 0
    for _ in range(30):
        s = pool[int(rng.integers(len(pool)))]
        c = st.canonicalize(s)
        for _ in range(5):
            pi = list(rng.permutation(s.m))
            if not st.is_admissible(s, pi):
                continue
            perm = list(rng.permutation(s.n) + 1)
            t = st.apply_relabelling(s, pi, {n: perm[n - 1] for n in range(1, s.n + 1)})
            bad += st.canonicalize(t) != c
    return float(bad), 0.0


@invariant("structures.successors_valid")
def _succ_valid(seed):
    s = st.SwitchingStructure.minimal()
    bad = sum(not st.validate(x.structure).ok for x in st.immediate_successors(s, st.DocketAlphabet.chain()))
    return float(bad), 0.0


@invariant("quantum.decoherent_mixture")
def _mixture(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(50):
        d = int(rng.integers(2, 9))
        k = int(rng.integers(1, d))
        U = qm.random_unitary(d, rng)
        Q = U[:, :k] @ U[:, :k].conj().T
        s = U[:, :k] @ qm.random_density(k, rng) @ U[:, :k].conj().T
        sd = U[:, k:] @ qm.random_density(d - k, rng) @ U[:, k:].conj().T
        p = float(rng.uniform(0.05, 0.95))
        rho = p * s + (1 - p) * sd
        worst = max(worst, abs(qm.app(s, rho) - qm.expect(rho, Q)))
    return worst, 1e-9


@invariant("quantum.restriction_monotone")
def _monotone(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    dims = (2, 2)
    sub = qm.FullOnFactors(dims, (0,))
    for _ in range(100):
        a, b = qm.random_density(4, rng), qm.random_density(4, rng)
        worst = max(worst, qm.app(a, b) - qm.app(a, b, sub))
    return worst, 1e-10


@invariant("quantum.conditional_expectation")
def _cexp(seed):
    rng = np.random.default_rng(seed)
    P = qm.proj(qm.random_unitary(2, rng)[:, 0])
    alg = qm.generate_algebra([qm.kron(P, np.eye(2)), qm.kron(np.eye(2), np.diag([1.0, 0.0]))])
    X = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    E = alg.expectation
    A = alg.expectation(rng.normal(size=(4, 4)))
    r = max(
        float(np.abs(E(E(X)) - E(X)).max()),
        float(np.abs(E(np.eye(4)) - np.eye(4)).max()),
        abs(np.trace(E(X)) - np.trace(X)),
        float(np.abs(E(A @ X @ A) - A @ E(X) @ A).max()),
    )
    return r, 1e-10


@invariant("apriori.jump_contract")
def _jumps(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(200):
        apps = {i: float(v) for i, v in enumerate(rng.uniform(0, 1, int(rng.integers(1, 6))) ** 2)}
        parent = float(rng.uniform(0.01, 3))
        t = apriori.jump_distribution(parent, apps)
        worst = max(worst, abs(t.total() - 1.0))
        if t.xi >= parent:
            worst = max(worst, t.extinction)
    return worst, 1e-12


@invariant("process.replay")
def _replay(seed):
    table = apriori.jump_distribution(1.0, {"a": 0.3, "b": 0.5})
    ev = lambda s: table if s == "o" else None
    r1 = process.run_trajectories("o", ev, 500, seed=seed).report()
    r2 = process.run_trajectories("o", ev, 500, seed=seed).report()
    return float(r1 != r2) + r1["weights"]["replay_residual"], 0.0


@invariant("geometry.proper_time")
def _proper(seed):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        K = causal.boost_generator(rng.normal(size=3)) * 0.3 + causal.rotation_generator(1, 2) * 0.2
        path = geometry.SwitchPath(
            [geometry.Segment(0.0, geometry.velocity_for(rng.normal(size=3), 1.0), K),
             geometry.Segment(1.0, geometry.rest_velocity(), np.zeros((4, 4)))],
            3.0,
        )
        worst = max(worst, geometry.proper_time_residual(path))
    return worst, 1e-6


@invariant("geometry.redetermination_spacing")
def _spacing(seed):
    s = st.SwitchingStructure.minimal((1, -1, 1, 1, -1))
    good = geometry.redetermination_spacing_holds(s.statuses(1), [0, 1, 2, 3, 4])
    bad = geometry.redetermination_spacing_holds(s.statuses(1), [0, 1, 2, 2.1, 3])
    return float((not good) + bad), 0.0


def _scenario_invariant(name, params):
    def fn(seed):
        rep = scenarios.run(name, {**params, "seed": seed})
        return float(len(rep.failures())), 0.0

    return fn


for _name, _params in (
    ("everett", {"p": [0.1, 0.2, 0.3, 0.4]}),
    ("multistep", {}),
    ("consistency", {}),
    ("frequency", {"N": 8, "N_binomial": 10}),
    ("glance", {}),
    ("caricature", {"trajectories": 10**5}),
    ("cosmology", {}),
):
    REGISTRY[f"scenario.{_name}"] = _scenario_invariant(_name, _params)


@dataclass
class Outcome:
    name: str
    residual: float
    tol: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.tol

    def to_json(self) -> dict:
        return {"name": self.name, "residual": self.residual, "tol": self.tol, "pass": self.ok}


def run_all(seed: int = 0, inject: str | None = None) -> list[Outcome]:
    if inject is not None and inject not in REGISTRY:
        raise KeyError(inject)
    out = []
    for name in sorted(REGISTRY):
        residual, tol = REGISTRY[name](seed)
        if name == inject:
            tol = -1.0
        out.append(Outcome(name, float(residual), float(tol)))
    return out


def summary_table(outcomes: list[Outcome]) -> str:
    width = max(len(o.name) for o in outcomes)
    rows = [f"{'invariant'.ljust(width)}  {'residual':>12}  {'tol':>10}  status"]
    for o in outcomes:
        rows.append(f"{o.name.ljust(width)}  {o.residual:12.3e}  {o.tol:10.1e}  {'PASS' if o.ok else 'FAIL'}")
    return "\n".join(rows) + "\n"
