"""Worked models with their identity checks.

Each scenario returns a report whose ``checks`` map a descriptive name to
``{"computed", "expected", "tol", "pass"}``. Scenarios are registered by name
in :data:`REGISTRY` and take a parameter dict plus tolerance overrides.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import quantum as qm
from .apriori import (
    ManifestationMenu,
    StateSequence,
    TheoryPoint,
    jump_distribution,
    seq_app,
    structure_app_variant,
)
from .process import CaricatureSpec, caricature_closed_form, caricature_simulate

TOLERANCES = {
    "identity": 1e-10,  # algebraic identities
    "exact": 1e-12,  # values the model fixes exactly
    "glance": 1e-9,
    "sigmas": 3.0,  # Monte Carlo acceptance in standard errors
    "consistency": 1e-10,
}


class ScenarioError(ValueError):
    pass


@dataclass
class Report:
    scenario: str
    params: dict
    checks: dict = field(default_factory=dict)
    data: dict = field(default_factory=dict)

    def check(self, name: str, computed, expected, tol: float, mode: str = "abs") -> bool:
        """Record a check; ``mode`` is ``abs``, ``le`` (computed <= expected + tol) or ``ge``."""
        if isinstance(expected, bool):
            ok = bool(computed) == expected
        elif mode == "abs":
            ok = abs(computed - expected) <= tol
        elif mode == "le":
            ok = computed <= expected + tol
        elif mode == "ge":
            ok = computed >= expected - tol
        else:
            raise ScenarioError(f"unknown check mode {mode}")
        self.checks[name] = {
            "computed": _plain(computed),
            "expected": _plain(expected),
            "tol": float(tol),
            "pass": bool(ok),
        }
        if mode != "abs":
            self.checks[name]["mode"] = mode
        return ok

    @property
    def ok(self) -> bool:
        return all(c["pass"] for c in self.checks.values())

    def failures(self) -> list[str]:
        return [k for k, c in self.checks.items() if not c["pass"]]

    def to_json(self) -> dict:
        return {
            "scenario": self.scenario,
            "params": _plain(self.params),
            "checks": self.checks,
            "data": _plain(self.data),
            "ok": self.ok,
        }


def _plain(x):
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        return float(x)
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    return x


def _tols(overrides: dict | None) -> dict:
    t = dict(TOLERANCES)
    for k, v in (overrides or {}).items():
        if k not in t:
            raise ScenarioError(f"unknown tolerance {k!r}")
        if not v > 0:
            raise ScenarioError(f"tolerance {k} must be positive")
        t[k] = float(v)
    return t


def _orthonormal_family(d: int, rng) -> list[np.ndarray]:
    U = qm.random_unitary(d, rng)
    return [U[:, i] for i in range(d)]


# --------------------------------------------------------------------------
# branching pure state: observer, system and environment factors


@dataclass
class EverettModel:
    p: np.ndarray
    psi: list
    phi: list
    chi: list

    @classmethod
    def build(cls, p: Sequence[float], seed: int = 0, random_bases: bool = True) -> "EverettModel":
        p = np.asarray(p, dtype=float)
        if p.ndim != 1 or p.size == 0 or (p < 0).any() or abs(p.sum() - 1.0) > 1e-12:
            raise ScenarioError("branch weights must be a probability vector")
        R = p.size
        rng = np.random.default_rng(seed)
        if random_bases:
            fams = [_orthonormal_family(R, rng) for _ in range(3)]
        else:
            fams = [[qm.ket(R, i) for i in range(R)] for _ in range(3)]
        return cls(p, *fams)

    @property
    def dims(self) -> tuple:
        R = self.p.size
        return (R, R, R)

    def vector(self) -> np.ndarray:
        return sum(math.sqrt(pr) * qm.kron(a, b, c) for pr, a, b, c in zip(self.p, self.psi, self.phi, self.chi))

    def state(self) -> np.ndarray:
        return qm.proj(self.vector())


def everett(params: dict, tol: dict | None = None) -> Report:
    t = _tols(tol)
    p = params.get("p", (0.3, 0.7))
    model = EverettModel.build(p, params.get("seed", 0), params.get("random_bases", True))
    rep = Report("everett", {"p": list(model.p), "seed": params.get("seed", 0)})
    R = model.p.size
    omega = model.state()
    dims = model.dims
    obs = qm.ptrace(omega, dims, (0,))
    want = sum(pr * qm.proj(a) for pr, a in zip(model.p, model.psi))
    rep.check("observer_restriction_residual", float(np.abs(obs - want).max()), 0.0, t["identity"])
    os_ = qm.ptrace(omega, dims, (0, 1))
    want2 = sum(pr * qm.proj(qm.kron(a, b)) for pr, a, b in zip(model.p, model.psi, model.phi))
    rep.check("observer_system_restriction_residual", float(np.abs(os_ - want2).max()), 0.0, t["identity"])
    ev = np.sort(np.linalg.eigvalsh(obs))[::-1]
    rep.check("restriction_eigenvalue_residual", float(np.abs(ev - np.sort(model.p)[::-1]).max()), 0.0, t["identity"])

    alg = qm.full_algebra((R, R))
    apps = []
    Qs = []
    for r in range(R):
        Q = qm.proj(qm.kron(model.psi[r], model.phi[r]))
        Qs.append(Q)
        sigma = Q  # pure branch state on observer and system
        a = qm.app(sigma, os_, alg)
        apps.append(a)
        rep.check(f"branch_app[{r + 1}]", a, float(model.p[r]), t["identity"])
        if model.p[r] > 0:
            dec = qm.is_decoherent(os_, sigma, Q, alg, tol=t["identity"])
            rep.check(f"branch_decoherent[{r + 1}]", dec.decoherent, True, 0.0)
            rep.check(f"branch_decoherence_weight[{r + 1}]", dec.p, float(model.p[r]), t["identity"])
    overlap = max((float(np.abs(Qs[a] @ Qs[b]).max()) for a in range(R) for b in range(R) if a != b), default=0.0)
    rep.check("branch_projections_disjoint", overlap, 0.0, t["identity"])
    rep.check("branch_app_sum", math.fsum(apps), 1.0, t["identity"])
    rep.data["apps"] = apps
    return rep


# --------------------------------------------------------------------------
# nested records: a tree of conditional probabilities with an extinction leaf


@dataclass
class RecordTree:
    """Conditional probabilities ``p[path]`` of a depth ``M + 1`` tree.

    Levels ``1..M`` have ``R`` outcomes; the last level has ``R + 1`` with
    outcome ``0`` standing for no further determination.
    """

    R: int
    M: int
    cond: dict  # path prefix -> conditional probability of its last entry

    @classmethod
    def random(cls, R: int, M: int, seed: int = 0, uniform: bool = False, p_stop: float | None = None) -> "RecordTree":
        rng = np.random.default_rng(seed)
        cond = {}

        def fill(prefix):
            level = len(prefix)
            if level == M + 1:
                return
            k = R + 1 if level == M else R
            if uniform:
                w = np.full(k, 1.0 / k)
            else:
                w = rng.dirichlet(np.ones(k)) * 0.9 + 0.1 / k
            if level == M and p_stop is not None:
                w = np.concatenate([[p_stop], (1 - p_stop) * w[1:] / w[1:].sum()])
            for r in range(k):
                r_ = r if level == M else r + 1
                cond[prefix + (r_,)] = float(w[r])
                fill(prefix + (r_,))

        fill(())
        return cls(R, M, cond)

    @property
    def dims(self) -> tuple:
        return (self.R,) * self.M + (self.R + 1,)

    def index(self, r: int, level: int) -> int:
        return r if level == self.M else r - 1

    def leaves(self) -> list[tuple]:
        return sorted(k for k in self.cond if len(k) == self.M + 1)

    def prob(self, path: tuple) -> float:
        return math.prod(self.cond[path[: i + 1]] for i in range(len(path)))

    def projection(self, path: tuple) -> np.ndarray:
        ops = []
        for level, d in enumerate(self.dims):
            if level < len(path):
                ops.append(qm.proj(qm.ket(d, self.index(path[level], level))))
            else:
                ops.append(np.eye(d))
        return qm.kron(*ops)

    def projection_level(self, level: int, r: int) -> np.ndarray:
        ops = [np.eye(d) for d in self.dims]
        ops[level] = qm.proj(qm.ket(self.dims[level], self.index(r, level)))
        return qm.kron(*ops)

    def universal_state(self) -> np.ndarray:
        """Records entangled with an environment, restricted to the records."""
        leaves = self.leaves()
        env = len(leaves)
        dims = self.dims
        dr = int(np.prod(dims))
        psi = np.zeros(dr * env, dtype=complex)
        for e, leaf in enumerate(leaves):
            rec = qm.kron(*[qm.ket(d, self.index(r, lv)) for lv, (d, r) in enumerate(zip(dims, leaf))])
            psi += math.sqrt(self.prob(leaf)) * np.kron(rec, qm.ket(env, e))
        return qm.ptrace(qm.proj(psi), (dr, env), (0,))


def _condition(omega: np.ndarray, Q: np.ndarray) -> np.ndarray:
    w = qm.expect(omega, Q)
    if w <= qm.CUTOFF:
        raise ScenarioError("conditioning on a null projection")
    return Q @ omega @ Q / w


def _binary_divergence(a: float, b: float) -> float:
    out = 0.0
    for x, y in ((a, b), (1 - a, 1 - b)):
        if x > 0:
            out += x * math.log(x / y)
    return out


def _h(d: float) -> float:
    return -sum(x * math.log(x) for x in (d, 1 - d) if x > 0)


def multistep(params: dict, tol: dict | None = None) -> Report:
    t = _tols(tol)
    R = int(params.get("R", 2))
    M = int(params.get("M", 3))
    delta = float(params.get("delta", 1e-3))
    tree = RecordTree.random(R, M, params.get("seed", 0), params.get("uniform", False), params.get("p_stop"))
    rep = Report("multistep", {"R": R, "M": M, "delta": delta, "seed": params.get("seed", 0)})
    omega = tree.universal_state()
    alg = qm.full_algebra(tree.dims)
    worst_tel = worst_full = worst_jump = worst_ext = 0.0
    band_ok = True
    band_worst = -math.inf
    branches = set()
    for leaf in tree.leaves():
        path = leaf[:M]
        if path in branches:
            continue
        branches.add(path)
        sig = [_condition(omega, tree.projection(path[: k + 1])) for k in range(M)]
        seq = StateSequence(omega, tuple(sig), alg)
        expected = tree.prob(path)
        val = seq_app(seq)
        worst_tel = max(worst_tel, abs(val - expected))
        factor_err = max(abs(f - tree.cond[path[: k + 1]]) for k, f in enumerate(seq.factors()))
        worst_tel = max(worst_tel, factor_err)
        direct = qm.app(sig[-1], omega, alg)
        weight = qm.expect(omega, tree.projection(path))
        worst_full = max(worst_full, abs(direct - expected), abs(weight - expected))

        # successors: one more determination, outcome 0 means none follows
        succ = {}
        for r in range(1, R + 1):
            s_next = _condition(omega, tree.projection(path + (r,)))
            succ[r] = seq_app(StateSequence(omega, tuple(sig) + (s_next,), alg))
        table = jump_distribution(val, succ)
        for r in range(1, R + 1):
            worst_jump = max(worst_jump, abs(table.jumps[r] - tree.cond[path + (r,)]))
        worst_ext = max(worst_ext, abs(table.extinction - tree.cond[path + (0,)]))
        if table.normalised:
            worst_ext = max(worst_ext, 1.0)

        # leak delta of the last state into a sibling branch
        prev = sig[-2] if M > 1 else omega
        sib = next(
            (path[:-1] + (r,) for r in range(1, R + 1) if r != path[-1] and tree.cond[path[:-1] + (r,)] > 0), None
        )
        if sib is None:
            continue
        tau = _condition(omega, tree.projection(sib))
        pert = (1 - delta) * sig[-1] + delta * tau
        Q = tree.projection(path)
        p = qm.expect(prev, Q)
        got = qm.app(pert, prev, alg)
        upper = math.exp(-_binary_divergence(qm.expect(pert, Q), p))
        sd = (prev - p * sig[-1]) / (1 - p)
        lam = min(v for v in np.linalg.eigvalsh(qm._herm(sd)) if v > qm.CUTOFF)
        width = _h(delta) + delta * (abs(math.log((1 - p) / p)) + abs(math.log(lam)))
        dev = abs(math.log(got / p))
        band_worst = max(band_worst, dev - width)
        band_ok = band_ok and got <= upper + t["identity"] and dev <= width
    rep.check("telescoping_product_residual", worst_tel, 0.0, t["identity"])
    rep.check("full_decomposition_residual", worst_full, 0.0, t["identity"])
    rep.check("jump_probability_residual", worst_jump, 0.0, t["identity"])
    rep.check("extinction_residual", worst_ext, 0.0, t["identity"])
    rep.check("perturbed_within_band", band_ok, True, 0.0)
    if band_worst > -math.inf:
        rep.data["band_slack_min"] = -band_worst
    fams = [[tree.projection_level(lv, r) for r in _outcomes(tree, lv)] for lv in range(M + 1)]
    viol, _ = consistency_check(fams, omega, t["consistency"])
    rep.check("histories_consistent", not viol.any(), True, 0.0)
    return rep


def _outcomes(tree: RecordTree, level: int) -> list[int]:
    return list(range(tree.R + 1)) if level == tree.M else list(range(1, tree.R + 1))




# --------------------------------------------------------------------------
# consistency of history families


def consistency_check(families: Sequence[Sequence[np.ndarray]], omega: np.ndarray, tol: float = 1e-10):
    """Off-diagonal history overlaps ``omega(C_r C_s^*)``.

    ``C_r = P^1_{r1} ... P^M_{rM}``. Returns the boolean violation matrix
    (``|D| > tol`` off the diagonal) and the overlap matrix ``D``.
    """
    omega = np.asarray(omega, dtype=complex)
    d = omega.shape[0]
    for fam in families:
        S = sum(np.asarray(P, dtype=complex) for P in fam)
        if np.abs(S - np.eye(d)).max() > 1e-9 or not all(qm.is_projection(P) for P in fam):
            raise ScenarioError("family is not a resolution of the identity into projections")
    hist = list(itertools.product(*[range(len(f)) for f in families]))
    C = []
    for h in hist:
        X = np.eye(d, dtype=complex)
        for fam, r in zip(families, h):
            X = X @ fam[r]
        C.append(X)
    n = len(hist)
    D = np.zeros((n, n), dtype=complex)
    for a in range(n):
        left = omega @ C[a]
        for b in range(n):
            D[a, b] = np.trace(left @ C[b].conj().T)
    viol = np.abs(D) > tol
    np.fill_diagonal(viol, False)
    return viol, D


def consistency(params: dict, tol: dict | None = None) -> Report:
    t = _tols(tol)
    rep = Report("consistency", {"seed": params.get("seed", 0)})
    rng = np.random.default_rng(params.get("seed", 0))
    # commuting families diagonal with omega
    w = rng.dirichlet(np.ones(4))
    omega = np.diag(w).astype(complex)
    fams = [[qm.kron(qm.proj(qm.ket(2, i)), np.eye(2)) for i in range(2)], [qm.kron(np.eye(2), qm.proj(qm.ket(2, i))) for i in range(2)]]
    viol, D = consistency_check(fams, omega, t["consistency"])
    rep.check("diagonal_families_violations", int(viol.sum()), 0, 0.0)
    rep.check("diagonal_weights_sum", float(np.trace(D).real), 1.0, t["identity"])
    # rotated families on a qubit
    plus = (qm.ket(2, 0) + qm.ket(2, 1)) / math.sqrt(2)
    minus = (qm.ket(2, 0) - qm.ket(2, 1)) / math.sqrt(2)
    Z = [qm.proj(qm.ket(2, 0)), qm.proj(qm.ket(2, 1))]
    X = [qm.proj(plus), qm.proj(minus)]
    viol, D = consistency_check([Z, X], qm.proj(plus), t["consistency"])
    rep.check("rotated_family_flagged", bool(viol.any()), True, 0.0)
    rep.check("rotated_family_max_offdiagonal", float(np.abs(D - np.diag(np.diag(D))).max()), 0.25, t["identity"])
    # nested record model
    tree = RecordTree.random(2, 2, params.get("seed", 0))
    fams = [[tree.projection_level(lv, r) for r in _outcomes(tree, lv)] for lv in range(tree.M + 1)]
    viol, D = consistency_check(fams, tree.universal_state(), t["consistency"])
    rep.check("record_model_violations", int(viol.sum()), 0, 0.0)
    return rep


# --------------------------------------------------------------------------
# relative frequencies over N copies


def frequency_operators(N: int) -> tuple[np.ndarray, np.ndarray]:
    """Diagonals (in the eigenbasis of ``P``) of ``F^N`` and of the count."""
    counts = np.zeros(1, dtype=int)
    for _ in range(N):
        counts = np.concatenate([counts, counts + 1])  # factor basis |0>, |1>=P
    return counts / N, counts


def product_diagonal(rho: np.ndarray, N: int) -> np.ndarray:
    """Diagonal of ``rho`` tensored ``N`` times, in the factor basis."""
    d = np.real(np.diag(rho))
    out = np.ones(1)
    for _ in range(N):
        out = np.kron(out, d)
    return out


def _binomial_oracle(p: float, N: int, M: int) -> float:
    total = 0.0
    for s in itertools.product((0, 1), repeat=N):
        if sum(s) == M:
            total += math.prod(p if c else 1 - p for c in s)
    return total


def frequency(params: dict, tol: dict | None = None) -> Report:
    t = _tols(tol)
    ps = params.get("p_values", [round(0.1 * k, 10) for k in range(11)])
    Nmax = int(params.get("N", 10))
    Nbin = int(params.get("N_binomial", 14))
    delta = float(params.get("delta", 1.0))
    eta = float(params.get("eta", 0.75))
    rep = Report("frequency", {"p_values": ps, "N": Nmax, "N_binomial": Nbin, "delta": delta, "eta": eta})
    if Nmax > 14 or Nbin > 14:
        raise ScenarioError("dense products are limited to N <= 14")
    worst_mean = worst_var = worst_bin = 0.0
    cheb_ok = True
    mono = {}
    for p in ps:
        # a coherent single-copy state with rho(P) = p, P = |1><1|
        v = np.array([math.sqrt(1 - p), math.sqrt(p)], dtype=complex)
        rho = 0.5 * qm.proj(v) + 0.5 * np.diag([1 - p, p])
        prev = None
        series = []
        for N in range(1, Nmax + 1):
            f, counts = frequency_operators(N)
            if N <= 6:
                dense = rho
                for _ in range(N - 1):
                    dense = np.kron(dense, rho)
                diag = np.real(np.diag(dense))
            else:
                diag = product_diagonal(rho, N)
            mean = float(diag @ f)
            var = float(diag @ (f - p) ** 2)
            worst_mean = max(worst_mean, abs(mean - p))
            worst_var = max(worst_var, abs(var - p * (1 - p) / N))
            inside = np.abs(counts - p * N) <= delta * N**eta
            prob_x = float(diag[inside].sum())
            bound = 1 - p * (1 - p) * N ** (1 - 2 * eta) / delta**2
            cheb_ok = cheb_ok and prob_x >= bound - t["identity"]
            series.append(prob_x)
        mono[p] = series
        for N in range(1, Nbin + 1):
            diag = product_diagonal(np.diag([1 - p, p]).astype(complex), N)
            _, counts = frequency_operators(N)
            for M in range(N + 1):
                got = float(diag[counts == M].sum())
                worst_bin = max(worst_bin, abs(got - _binomial_oracle(p, N, M)))
    rep.check("mean_residual", worst_mean, 0.0, t["identity"])
    rep.check("variance_residual", worst_var, 0.0, t["identity"])
    rep.check("chebyshev_bound_holds", cheb_ok, True, 0.0)
    rep.check("binomial_residual", worst_bin, 0.0, t["identity"])
    # the window has integer edges, so the weight itself can dip between
    # consecutive N; the guaranteed lower bound rises monotonically
    rep.data["typical_set_weight"] = {str(p): v for p, v in mono.items()}
    rep.data["typical_set_weight_decreases"] = [
        [p, N + 2] for p, v in mono.items() for N in range(len(v) - 1) if v[N + 1] < v[N] - 1e-12
    ]
    bounds = [1 - N ** (1 - 2 * eta) / (4 * delta**2) for N in range(1, Nmax + 1)]
    rep.check("chebyshev_bound_nondecreasing", all(b2 >= b1 for b1, b2 in zip(bounds, bounds[1:])), True, 0.0)
    return rep


# --------------------------------------------------------------------------
# a glance: commuting relevant projections, path classes and the outcome split


@dataclass
class GlanceModel:
    """External outcome qubit and internal processing qubits.

    ``P^1`` reads the outcome (``P_a`` or ``P_b``); ``P^2..P^S`` are internal
    processing projections with weight ``q_int`` each. Path classes carry a
    multiplicity and an explicit w-factor for the irrelevant determinations.
    """

    pa: float
    S: int
    q_int: float
    classes: dict  # outcome -> list of (multiplicity, w3)

    @property
    def dims(self) -> tuple:
        return (2,) + (2,) * (self.S - 1)

    def rho(self) -> np.ndarray:
        ops = [np.diag([self.pa, 1 - self.pa])] + [np.diag([self.q_int, 1 - self.q_int])] * (self.S - 1)
        return qm.kron(*ops).astype(complex)

    def outcome_projection(self, o: str) -> np.ndarray:
        k = 0 if o == "a" else 1
        return qm.embed(qm.proj(qm.ket(2, k)), self.dims, (0,))

    def relevant(self, o: str) -> list[np.ndarray]:
        out = [self.outcome_projection(o)]
        for s in range(1, self.S):
            out.append(qm.embed(qm.proj(qm.ket(2, 0)), self.dims, (s,)))
        return out


def glance(params: dict, tol: dict | None = None) -> Report:
    t = _tols(tol)
    pa = float(params.get("pa", 0.3))
    S = int(params.get("S", 3))
    q_int = float(params.get("q_int", 0.9))
    mode = params.get("mode", "symmetric")
    base = [(1000, 0.01), (500, 0.004)]
    classes = {"a": params.get("classes_a", base), "b": params.get("classes_b", base)}
    if mode == "doubled":
        classes["a"] = [(2 * m, w) for m, w in classes["a"]]
    elif mode != "symmetric":
        raise ScenarioError(f"unknown glance mode {mode!r}")
    model = GlanceModel(pa, S, q_int, classes)
    rep = Report("glance", {"pa": pa, "S": S, "q_int": q_int, "mode": mode, "classes": classes})
    rho = model.rho()
    alg = qm.full_algebra(model.dims)
    R_S = {}
    for o in ("a", "b"):
        Ps = model.relevant(o)
        comm = max(float(np.abs(A @ B - B @ A).max()) for A in Ps for B in Ps)
        if comm > 1e-9:
            raise ScenarioError("relevant projections do not commute")
        R = np.eye(rho.shape[0], dtype=complex)
        rs = [rho]
        apps = []
        steps = []
        for P in Ps:
            R = R @ P
            nxt = R @ rho @ R / qm.expect(rho, R)
            step_p = qm.expect(rs[-1], P)
            apps.append(qm.app(nxt, rs[-1], alg))
            steps.append(step_p)
            rs.append(nxt)
        rep.check(f"R_S_projection[{o}]", qm.is_projection(R), True, 0.0)
        rep.check(f"step_app_equals_expectation[{o}]", max(abs(a - s) for a, s in zip(apps, steps)), 0.0, t["glance"])
        rep.check(f"telescoping[{o}]", qm.expect(rho, R), math.prod(steps), t["glance"])
        rep.check(f"app_product[{o}]", math.prod(apps), qm.expect(rho, R), t["glance"])
        Po = model.outcome_projection(o)
        basis = np.array(alg.basis())
        lhs = np.einsum("ij,kji->k", rho @ Po @ R, basis)
        rhs = np.einsum("ij,kji->k", rho @ R, basis)
        resid = float(np.abs(lhs - rhs).max())
        if resid > t["glance"]:
            raise ScenarioError(f"subprojection condition violated for outcome {o}: {resid}")
        rep.check(f"subprojection_residual[{o}]", resid, 0.0, t["glance"])
        R_S[o] = qm.expect(rho, R)
    rho_o = {o: qm.expect(rho, model.outcome_projection(o)) for o in ("a", "b")}
    w4 = {o: R_S[o] / rho_o[o] for o in ("a", "b")}
    rep.check("w4_independent_of_outcome_probability", w4["a"], q_int ** (S - 1), t["glance"])

    # one jump per path class, weighted by multiplicity
    apps = {}
    for o in ("a", "b"):
        for c, (m, w3) in enumerate(model.classes[o]):
            apps[(o, c)] = m * R_S[o] * w3
    table = jump_distribution(1.0, apps)
    rep.check("no_extinction_regime", table.normalised, True, 0.0)
    pr = {o: math.fsum(v for (oo, _), v in table.jumps.items() if oo == o) for o in ("a", "b")}
    w5 = {o: math.fsum(m * w3 for m, w3 in model.classes[o]) * w4[o] for o in ("a", "b")}
    rep.data["w5"] = w5
    rep.data["records"] = {
        o: [{"class": c, "multiplicity": m, "w3": w3, "w4": w4[o]} for c, (m, w3) in enumerate(model.classes[o])]
        for o in ("a", "b")
    }
    rep.check("outcome_total", pr["a"] + pr["b"], 1.0, t["exact"])
    bij = params.get("bijection")
    if bij is None and mode == "symmetric":
        bij = [(c, c) for c in range(len(model.classes["a"]))]
    indifferent = bij is not None and _bijection_holds(model, bij, w4)
    rep.data["indifference"] = indifferent
    if indifferent:
        rep.check("Pr(a)", pr["a"], rho_o["a"], t["glance"])
        rep.check("Pr(b)", pr["b"], rho_o["b"], t["glance"])
    else:
        ratio = w5["a"] / w5["b"]
        rep.check("Pr(a)/Pr(b)", pr["a"] / pr["b"], ratio * rho_o["a"] / rho_o["b"], t["glance"])
        if mode == "doubled":
            rep.check("doubled_ratio", pr["a"] / pr["b"], 2 * rho_o["a"] / rho_o["b"], t["glance"])
            cf = caricature_closed_form(CaricatureSpec(rho_o["a"], rho_o["b"], 0.0, "B"))
            rep.check("matches_two_sink_caricature", pr["a"], cf.F_a, t["glance"])
    return rep


def _bijection_holds(model: GlanceModel, bij, w4) -> bool:
    """Indifference: a class-level bijection with equal multiplicities and w-factors."""
    a, b = model.classes["a"], model.classes["b"]
    if sorted(i for i, _ in bij) != list(range(len(a))) or sorted(j for _, j in bij) != list(range(len(b))):
        return False
    return all(a[i][0] == b[j][0] and abs(a[i][1] * w4["a"] - b[j][1] * w4["b"]) <= 1e-15 for i, j in bij)


# --------------------------------------------------------------------------
# caricature chain


def caricature(params: dict, tol: dict | None = None) -> Report:
    t = _tols(tol)
    p = float(params.get("p", 0.2))
    q = float(params.get("q", 0.8))
    x = float(params.get("x", 100.0))
    variant = str(params.get("variant", "A")).upper()
    count = int(params.get("trajectories", 10**6))
    seed = int(params.get("seed", 0))
    spec = CaricatureSpec(p, q, x, variant, tuple(params.get("weights_a", (1.0, 2.0))), tuple(params.get("weights_b", (1.0,))))
    rep = Report("caricature", {"p": p, "q": q, "x": x, "variant": variant, "trajectories": count, "seed": seed,
                                "weights_a": list(spec.weights_a), "weights_b": list(spec.weights_b)})
    cf = caricature_closed_form(spec)
    if variant == "A":
        expected = p / (p + q)
    elif variant == "B":
        expected = 2 * p / (2 * p + q)
    else:
        Wa, Wb = sum(spec.weights_a), sum(spec.weights_b)
        expected = Wa * p / (Wa * p + Wb * q)
    rep.check("F(a)", cf.F_a, expected, t["exact"])
    rep.check("F(a)+F(b)", cf.F_a + cf.F_b, 1.0, t["exact"])
    tot = spec.W_a * p + spec.W_b * q + x
    if x / tot < 1:
        series = math.fsum(cf.F_n(n) for n in range(1, 200000) if (x / tot) ** (n - 1) > 1e-300)
        rep.check("sum_F_n", series, cf.F_a, 1e-9)
    if variant == "A":
        vals = [caricature_closed_form(CaricatureSpec(p, q, xx, "A")).F_a for xx in (0.0, 1.0, 100.0)]
        rep.check("independent_of_x", max(vals) - min(vals), 0.0, 0.0)
    if count > 0:
        est = caricature_simulate(spec, count, seed)
        sd = math.sqrt(cf.F_a * (1 - cf.F_a) / count)
        rep.check("simulated_F(a)", est.F_a, cf.F_a, t["sigmas"] * sd)
        rep.check("unfinished_trajectories", est.unfinished, 0, 0.0)
        if x == 0:
            rep.check("single_step_when_x_zero", est.max_steps_taken, 1, 0.0)
        rep.data["simulation"] = est.to_json()
    return rep


# --------------------------------------------------------------------------
# repeated two-outcome observations with a fixed or free universal state


def _history_projection(history: Sequence[int], n: int) -> np.ndarray:
    ops = [qm.proj(qm.ket(2, h)) for h in history] + [np.eye(2)] * (n - len(history))
    return qm.kron(*ops)


def cosmology_distribution(p: float, T: int, free_omega: bool, history: Sequence[int] | None = None):
    """Next-outcome distribution after ``history`` (0 = a, 1 = b).

    Returns ``(Pr(a), Pr(b), details)``.
    """
    if T < 1:
        raise ScenarioError("T must be at least 1")
    n = T + 1
    if history is None:
        k = round(p * T)
        history = [0] * k + [1] * (T - k)
    history = list(history)
    if len(history) != T:
        raise ScenarioError("history length must equal T")
    dims = (2,) * n
    alg = qm.full_algebra(dims)
    if free_omega:
        omegas = [qm.proj(qm.kron(*[qm.ket(2, b) for b in bits])) for bits in itertools.product((0, 1), repeat=n)]
        V = [TheoryPoint("free", {}, tuple(omegas))]
    else:
        one = np.diag([p, 1 - p]).astype(complex)
        V = [TheoryPoint("iid", {"p": p}, (qm.kron(*[one] * n),))]

    def menus(h):
        def factory(point, omega):
            states = []
            for k in range(1, len(h) + 1):
                Q = _history_projection(h[:k], n)
                w = qm.expect(omega, Q)
                if w <= qm.CUTOFF:
                    return {}
                states.append(Q @ omega @ Q / w)
            return {tuple(h): [ManifestationMenu((StateSequence(omega, tuple(states), alg),))]}

        return factory

    parent, _ = structure_app_variant(tuple(history), menus(history), V)
    succ = {}
    for o in (0, 1):
        h = history + [o]
        succ[o], _ = structure_app_variant(tuple(h), menus(h), V)
    table = jump_distribution(parent, succ)
    return table.jumps[0], table.jumps[1], {"parent_app": parent, "successor_apps": succ, "extinction": table.extinction}


def cosmology(params: dict, tol: dict | None = None) -> Report:
    t = _tols(tol)
    p = float(params.get("p", 0.2))
    T = int(params.get("T", 4))
    free = bool(params.get("free_omega", False))
    rep = Report("cosmology", {"p": p, "T": T, "free_omega": free})
    pa, pb, info = cosmology_distribution(p, T, free, params.get("history"))
    expected = (0.5, 0.5) if free else (p, 1 - p)
    rep.check("Pr(a)", pa, expected[0], t["exact"])
    rep.check("Pr(b)", pb, expected[1], t["exact"])
    rep.check("extinction", info["extinction"], 0.0, t["exact"])
    if free:
        rep.check("history_app_saturates", info["parent_app"], 1.0, t["exact"])
    rep.data.update(info)
    return rep


REGISTRY: dict[str, Callable[[dict, dict | None], Report]] = {
    "caricature": caricature,
    "consistency": consistency,
    "cosmology": cosmology,
    "everett": everett,
    "frequency": frequency,
    "glance": glance,
    "multistep": multistep,
}


def run(name: str, params: dict | None = None, tol: dict | None = None) -> Report:
    if name not in REGISTRY:
        raise KeyError(name)
    return REGISTRY[name](dict(params or {}), tol)
