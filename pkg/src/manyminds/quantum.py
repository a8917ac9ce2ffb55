"""Finite-dimensional states, algebras and relative entropy.

An algebra is represented through its block structure: a unitary ``U`` and
block sizes ``(n_k, m_k)`` such that ``U^* A U`` is the direct sum of
``M_{n_k} (x) 1_{m_k}``. States are density matrices on the whole space;
their restriction to an algebra is carried by the block densities
``tr_{m_k}`` of the compressed blocks.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from functools import cached_property, reduce
from typing import Sequence

import numpy as np

logger = logging.getLogger(__name__)

CUTOFF = 1e-12
STATE_TOL = 1e-12
PROJ_TOL = 1e-9


class QuantumError(ValueError):
    pass


class ContainmentError(QuantumError):
    pass


# --------------------------------------------------------------------------
# tensor helpers


def _prod(xs) -> int:
    out = 1
    for x in xs:
        out *= int(x)
    return out


def ket(dim: int, i: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    v[i] = 1.0
    return v


def proj(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    return np.outer(v, v.conj())


def kron(*ops) -> np.ndarray:
    """Tensor product of vectors or matrices (shapes preserved)."""
    return reduce(np.kron, [np.asarray(op, dtype=complex) for op in ops])


def ptrace(rho: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Partial trace keeping the factors ``keep`` (in increasing order)."""
    dims = list(dims)
    keep = sorted(keep)
    k = len(dims)
    t = np.asarray(rho).reshape(dims + dims)
    traced = [i for i in range(k) if i not in keep]
    # move traced axes pairwise to the end and contract
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * k > 26:
        raise QuantumError("too many tensor factors")
    rows = list(letters[:k])
    cols = list(letters[k : 2 * k])
    for i in traced:
        cols[i] = rows[i]
    out = "".join(rows[i] for i in keep) + "".join(cols[i] for i in keep)
    d = _prod(dims[i] for i in keep)
    return np.einsum("".join(rows) + "".join(cols) + "->" + out, t).reshape(d, d)


def permute_factors(X: np.ndarray, dims: Sequence[int], order: Sequence[int]) -> np.ndarray:
    """Reorder tensor factors of an operator: new factor ``i`` is old ``order[i]``."""
    k = len(dims)
    t = np.asarray(X).reshape(list(dims) * 2)
    t = t.transpose(list(order) + [k + o for o in order])
    d = _prod(dims)
    return t.reshape(d, d)


def embed(op: np.ndarray, dims: Sequence[int], factors: Sequence[int]) -> np.ndarray:
    """``op`` acting on ``factors`` (in increasing order), identity elsewhere."""
    factors = sorted(factors)
    rest = [i for i in range(len(dims)) if i not in factors]
    full = np.kron(op, np.eye(_prod(dims[i] for i in rest)))
    order = factors + rest
    inv = [order.index(i) for i in range(len(dims))]
    return permute_factors(full, [dims[i] for i in order], inv)


def is_projection(P, tol: float = PROJ_TOL) -> bool:
    P = np.asarray(P)
    return bool(np.allclose(P, P.conj().T, atol=tol) and np.allclose(P @ P, P, atol=tol))


def expect(rho: np.ndarray, X: np.ndarray) -> float:
    """``tr(rho X)`` for Hermitian ``X`` (real part)."""
    return float(np.real(np.einsum("ij,ji->", rho, X)))


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_density(d: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    rank = d if rank is None else rank
    g = rng.standard_normal((d, rank)) + 1j * rng.standard_normal((d, rank))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real


def _herm(X):
    return 0.5 * (X + X.conj().T)


# --------------------------------------------------------------------------
# algebras


@dataclass(frozen=True)
class BlockStructure:
    U: np.ndarray
    sizes: tuple  # ((n_k, m_k), ...)

    def offsets(self):
        off = 0
        for n, m in self.sizes:
            yield off, n, m
            off += n * m

    @property
    def dimension(self) -> int:
        return sum(n * n for n, _ in self.sizes)


class _Algebra:
    dims: tuple

    @property
    def dim(self) -> int:
        return _prod(self.dims)

    @cached_property
    def structure(self) -> BlockStructure:
        raise NotImplementedError

    def block_densities(self, rho: np.ndarray) -> list[np.ndarray]:
        """Blockwise partial traces ``tr_{m_k}`` of ``U^* rho U``."""
        bs = self.structure
        R = bs.U.conj().T @ rho @ bs.U
        out = []
        for off, n, m in bs.offsets():
            blk = R[off : off + n * m, off : off + n * m].reshape(n, m, n, m)
            out.append(np.einsum("iaja->ij", blk))
        return out

    def from_blocks(self, blocks: Sequence[np.ndarray]) -> np.ndarray:
        """Full-space operator ``U (+_k b_k (x) 1/m_k) U^*``."""
        bs = self.structure
        R = np.zeros((self.dim, self.dim), dtype=complex)
        for (off, n, m), b in zip(bs.offsets(), blocks):
            R[off : off + n * m, off : off + n * m] = np.kron(b, np.eye(m) / m)
        return bs.U @ R @ bs.U.conj().T

    def expectation(self, X: np.ndarray) -> np.ndarray:
        """Trace-preserving conditional expectation onto the algebra."""
        return self.from_blocks(self.block_densities(np.asarray(X, dtype=complex)))

    def contains(self, X, tol: float = 1e-9) -> bool:
        X = np.asarray(X, dtype=complex)
        return bool(np.linalg.norm(self.expectation(X) - X) <= tol * max(1.0, np.linalg.norm(X)))

    def basis(self) -> list[np.ndarray]:
        """Hilbert-Schmidt orthonormal basis from the matrix units."""
        cached = self.__dict__.get("_basis")
        if cached is not None:
            return cached
        bs = self.structure
        out = []
        for off, n, m in bs.offsets():
            for i in range(n):
                for j in range(n):
                    E = np.zeros((self.dim, self.dim), dtype=complex)
                    unit = np.zeros((n, n))
                    unit[i, j] = 1.0
                    E[off : off + n * m, off : off + n * m] = np.kron(unit, np.eye(m)) / np.sqrt(m)
                    out.append(bs.U @ E @ bs.U.conj().T)
        self.__dict__["_basis"] = out
        return out

    def is_subalgebra_of(self, other: "_Algebra", tol: float = 1e-9) -> bool:
        if tuple(self.dims) != tuple(other.dims):
            return False
        if isinstance(self, FullOnFactors) and isinstance(other, FullOnFactors):
            return set(self.factors) <= set(other.factors)
        return all(other.contains(b, tol) for b in self.basis())


class FullOnFactors(_Algebra):
    """All operators on the tensor factors ``factors``, identity elsewhere."""

    def __init__(self, dims: Sequence[int], factors: Sequence[int] | None = None):
        self.dims = tuple(int(d) for d in dims)
        fs = range(len(self.dims)) if factors is None else factors
        self.factors = tuple(sorted(set(int(f) for f in fs)))
        if any(f < 0 or f >= len(self.dims) for f in self.factors):
            raise QuantumError(f"factor index out of range for dims {self.dims}")
        self.rest = tuple(i for i in range(len(self.dims)) if i not in self.factors)

    def __repr__(self):
        return f"FullOnFactors(dims={self.dims}, factors={self.factors})"

    def __eq__(self, other):
        return isinstance(other, FullOnFactors) and (self.dims, self.factors) == (other.dims, other.factors)

    def __hash__(self):
        return hash((self.dims, self.factors))

    @cached_property
    def structure(self) -> BlockStructure:
        order = list(self.factors) + list(self.rest)
        d = self.dim
        idx = np.arange(d).reshape(self.dims).transpose(order).ravel()
        U = np.zeros((d, d), dtype=complex)
        U[idx, np.arange(d)] = 1.0
        n = _prod(self.dims[i] for i in self.factors)
        return BlockStructure(U, ((n, d // n),))

    def block_densities(self, rho):
        return [ptrace(rho, self.dims, self.factors)]

    def from_blocks(self, blocks):
        (b,) = blocks
        m = _prod(self.dims[i] for i in self.rest)
        return embed(b, self.dims, self.factors) @ embed(np.eye(m) / m, self.dims, self.rest) if self.rest else np.asarray(b, dtype=complex)

    def to_json(self) -> dict:
        return {"kind": "factors", "dims": list(self.dims), "factors": list(self.factors)}


def full_algebra(dims: Sequence[int]) -> FullOnFactors:
    return FullOnFactors(dims)


class Generated(_Algebra):
    """The *-algebra generated by a list of operators (and the identity)."""

    def __init__(self, dims: Sequence[int], generators: Sequence[np.ndarray], seed: int = 0):
        self.dims = tuple(int(d) for d in dims)
        self.generators = [np.asarray(g, dtype=complex) for g in generators]
        for g in self.generators:
            if g.shape != (self.dim, self.dim):
                raise QuantumError(f"generator shape {g.shape} does not match dims {self.dims}")
        self.seed = seed

    def __repr__(self):
        return f"Generated(dims={self.dims}, generators={len(self.generators)})"

    @cached_property
    def span(self) -> np.ndarray:
        """Orthonormal basis (rows of flattened matrices) of the closure."""
        return _closure(self.generators, self.dim)

    @property
    def dimension(self) -> int:
        return self.span.shape[0]

    @cached_property
    def structure(self) -> BlockStructure:
        return _decompose(self.span, self.generators, self.dim, np.random.default_rng(self.seed))

    def to_json(self) -> dict:
        return {
            "kind": "generated",
            "dims": list(self.dims),
            "generators": [matrix_to_json(g, self.dims) for g in self.generators],
        }


class OperatorSet:
    """A finite span that need not be closed under products.

    Entropy is not defined on such a set; it is evaluated on the enclosing
    generated algebra instead, with a warning.
    """

    def __init__(self, dims: Sequence[int], operators: Sequence[np.ndarray]):
        self.dims = tuple(int(d) for d in dims)
        self.operators = [np.asarray(o, dtype=complex) for o in operators]

    @cached_property
    def enclosing(self) -> Generated:
        return Generated(self.dims, self.operators)

    def is_closed(self) -> bool:
        ops = [np.eye(_prod(self.dims), dtype=complex)] + self.operators
        basis = _orthonormal_rows(np.array([o.ravel() for o in ops]))
        return basis.shape[0] == self.enclosing.dimension


Algebra = FullOnFactors | Generated


def _orthonormal_rows(A: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    if A.size == 0:
        return A
    u, s, vh = np.linalg.svd(A, full_matrices=False)
    r = int(np.sum(s > tol * max(1.0, s[0])))
    return vh[:r]


def _closure(gens: Sequence[np.ndarray], d: int) -> np.ndarray:
    G = [g for g in gens] + [g.conj().T for g in gens]
    Q = _orthonormal_rows(np.array([np.eye(d, dtype=complex).ravel()] + [g.ravel() for g in G]))
    while True:
        mats = Q.reshape(-1, d, d)
        cand = np.concatenate([(mats @ g).reshape(len(mats), -1) for g in G]) if G else np.zeros((0, d * d))
        if cand.size == 0:
            return Q
        resid = cand - (cand @ Q.conj().T) @ Q
        resid = resid - (resid @ Q.conj().T) @ Q
        norms = np.linalg.norm(resid, axis=1)
        keep = resid[norms > 1e-9 * np.maximum(1.0, np.linalg.norm(cand, axis=1))]
        if len(keep) == 0:
            return Q
        Q = _orthonormal_rows(np.concatenate([Q, _orthonormal_rows(keep)]))


def _clusters(w: np.ndarray, tol: float) -> list[np.ndarray]:
    groups = [[0]]
    for i in range(1, len(w)):
        if w[i] - w[i - 1] > tol:
            groups.append([i])
        else:
            groups[-1].append(i)
    return [np.array(g) for g in groups]


def _random_element(span: np.ndarray, d: int, rng) -> np.ndarray:
    c = rng.standard_normal(span.shape[0]) + 1j * rng.standard_normal(span.shape[0])
    return (c @ span).reshape(d, d)


def _decompose(span: np.ndarray, gens, d: int, rng) -> BlockStructure:
    mats = span.reshape(-1, d, d)
    k = len(mats)
    # center: elements of the span commuting with every generator
    if gens:
        rows = np.concatenate([np.stack([(B @ g - g @ B).ravel() for B in mats], axis=1) for g in gens])
        _, s, vh = np.linalg.svd(rows, full_matrices=True)
        rank = int(np.sum(s > 1e-9 * max(1.0, s[0] if len(s) else 1.0)))
        null = vh[rank:].conj()
    else:
        null = np.eye(k, dtype=complex)
    center = np.einsum("ck,kij->cij", null, mats)
    herm = [_herm(Z) for Z in center] + [_herm(1j * Z) for Z in center]
    Zr = sum(rng.standard_normal() * h for h in herm)
    w, v = np.linalg.eigh(Zr)
    spread = max(1.0, float(np.ptp(w)))
    cols = []
    sizes = []
    for grp in _clusters(w, 1e-7 * spread):
        Vk = v[:, grp]
        Hk = Vk.conj().T @ _herm(_random_element(span, d, rng)) @ Vk
        hw, hv = np.linalg.eigh(Hk)
        sub = _clusters(hw, 1e-7 * max(1.0, float(np.ptp(hw))))
        m = len(sub[0])
        if any(len(g) != m for g in sub):
            raise QuantumError("block decomposition failed: uneven multiplicities")
        Q1 = Vk @ hv[:, sub[0]]
        B = _random_element(span, d, rng)
        for g in sub:
            Qi = Vk @ hv[:, g]
            u_, _, vh_ = np.linalg.svd(Qi.conj().T @ B @ Q1)
            cols.append(Qi @ (u_ @ vh_))
        sizes.append((len(sub), m))
    U = np.concatenate(cols, axis=1)
    bs = BlockStructure(U, tuple(sizes))
    if bs.dimension != k:
        raise QuantumError(f"block decomposition has dimension {bs.dimension}, span has {k}")
    return bs


def generate_algebra(gens: Sequence[np.ndarray], dims: Sequence[int] | None = None) -> Generated:
    gens = [np.asarray(g, dtype=complex) for g in gens]
    if dims is None:
        if not gens:
            raise QuantumError("need dims when no generators are given")
        dims = (gens[0].shape[0],)
    shapes = {g.shape for g in gens}
    if len(shapes) > 1:
        raise QuantumError("generators act on different spaces")
    return Generated(dims, gens)


def hs_projection(span: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Orthogonal projection of ``X`` onto a span in the Hilbert-Schmidt product."""
    d = X.shape[0]
    return ((span.conj() @ X.ravel()) @ span).reshape(d, d)


# --------------------------------------------------------------------------
# states


def check_density(rho: np.ndarray, tol: float = STATE_TOL) -> None:
    rho = np.asarray(rho)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1]:
        raise QuantumError("density matrix must be square")
    if not np.allclose(rho, rho.conj().T, atol=tol * 10):
        raise QuantumError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > max(tol, 1e-10):
        raise QuantumError(f"density matrix trace {np.trace(rho).real} != 1")
    if np.linalg.eigvalsh(_herm(rho)).min() < -max(tol, 1e-10):
        raise QuantumError("density matrix is not positive semidefinite")


@dataclass(frozen=True, eq=False)
class AlgebraState:
    """A density matrix regarded as a state on ``algebra``.

    ``rho`` is kept as given; only its values on the algebra matter.
    """

    rho: np.ndarray
    algebra: _Algebra

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (self.algebra.dim, self.algebra.dim):
            raise QuantumError(f"state shape {rho.shape} does not match algebra dims {self.algebra.dims}")
        check_density(rho)
        object.__setattr__(self, "rho", rho)

    def __call__(self, X) -> float:
        return expect(self.rho, np.asarray(X))

    @cached_property
    def blocks(self) -> list[np.ndarray]:
        return [_herm(b) for b in self.algebra.block_densities(self.rho)]

    def representative(self) -> np.ndarray:
        """Canonical density: the conditional expectation of ``rho``."""
        return self.algebra.expectation(self.rho)

    def reduced(self) -> np.ndarray:
        """Density on the algebra's factors (single-block algebras only)."""
        if len(self.blocks) != 1:
            raise QuantumError("reduced density needs a single-block algebra")
        return self.blocks[0]


def restrict(state: AlgebraState, sub: _Algebra, check: bool = True) -> AlgebraState:
    if check and not sub.is_subalgebra_of(state.algebra):
        raise ContainmentError("target algebra is not contained in the state's algebra")
    return AlgebraState(sub.expectation(state.rho), sub)


def _as_pair(sigma, rho, algebra):
    if isinstance(sigma, AlgebraState):
        alg = sigma.algebra if algebra is None else algebra
        sigma = sigma.rho
    else:
        alg = algebra
    if isinstance(rho, AlgebraState):
        if algebra is None and alg is not None and rho.algebra is not alg and rho.algebra != alg:
            raise QuantumError("states live on different algebras")
        alg = rho.algebra if alg is None else alg
        rho = rho.rho
    sigma = np.asarray(sigma, dtype=complex)
    rho = np.asarray(rho, dtype=complex)
    if alg is None:
        alg = FullOnFactors((sigma.shape[0],))
    if isinstance(alg, OperatorSet):
        logger.warning("entropy on a non-algebra operator set; using the enclosing generated algebra")
        alg = alg.enclosing
    return sigma, rho, alg


def _block_ent(s: np.ndarray, r: np.ndarray, cutoff: float) -> float:
    ls, vs = np.linalg.eigh(_herm(s))
    lr, vr = np.linalg.eigh(_herm(r))
    pos = ls > cutoff
    if not pos.any():
        return 0.0
    entropy = -float(np.sum(ls[pos] * np.log(ls[pos])))
    # weights of sigma on rho's eigenvectors
    w = np.real(np.einsum("ia,ij,ja->a", vr.conj(), s, vr))
    supp = lr > cutoff
    if np.sum(w[~supp]) > cutoff:
        return -math.inf
    cross = float(np.sum(w[supp] * np.log(lr[supp])))
    return entropy + cross


def rel_entropy(sigma, rho, algebra: _Algebra | None = None, cutoff: float = CUTOFF) -> float:
    """``tr(-sigma log sigma + sigma log rho)`` on the algebra (``<= 0``).

    ``-inf`` when the support of ``sigma`` escapes that of ``rho``.
    """
    s, r, alg = _as_pair(sigma, rho, algebra)
    total = 0.0
    for sb, rb in zip(alg.block_densities(s), alg.block_densities(r)):
        e = _block_ent(sb, rb, cutoff)
        if e == -math.inf:
            return -math.inf
        total += e
    return min(total, 0.0)


def app(sigma, rho, algebra: _Algebra | None = None, cutoff: float = CUTOFF) -> float:
    """A priori probability ``exp(ent(sigma | rho))`` in ``[0, 1]``."""
    e = rel_entropy(sigma, rho, algebra, cutoff)
    return 0.0 if e == -math.inf else float(math.exp(e))


# --------------------------------------------------------------------------
# decoherence and switch-state predicates


@dataclass
class DecoherenceResult:
    decoherent: bool
    p: float
    residuals: dict

    def __bool__(self):
        return self.decoherent


def is_decoherent(rho, sigma, Q, algebra: _Algebra | None = None, delta: float = 1e-3, tol: float = 1e-9) -> DecoherenceResult:
    """Whether ``rho = p sigma + (1-p) sigma_d`` with ``Q`` separating the parts.

    ``p = rho(Q)``; requires ``sigma(Q) ~ 1`` and ``sigma_d(Q) ~ 0`` within
    ``delta``, ``sigma_d`` positive, and ``rho(QB) = rho(BQ) = p sigma(B)``
    on a basis of the algebra.
    """
    s, r, alg = _as_pair(sigma, rho, algebra)
    Q = np.asarray(Q, dtype=complex)
    if not is_projection(Q):
        raise QuantumError("Q is not a projection")
    if not alg.contains(Q):
        raise ContainmentError("Q is not in the algebra")
    rs = [_herm(b) for b in alg.block_densities(r)]
    ss = [_herm(b) for b in alg.block_densities(s)]
    p = expect(r, Q)
    sq = expect(s, Q)
    res = {"sigma(Q)": sq, "rho(Q)": p}
    ok = abs(sq - 1.0) <= delta
    if p < 1.0 - tol:
        sd = [(a - p * b) / (1.0 - p) for a, b in zip(rs, ss)]
        min_eig = min(float(np.linalg.eigvalsh(b).min()) for b in sd)
        sdq = p * (1.0 - sq) / (1.0 - p)
        res["sigma_d(Q)"] = sdq
        res["sigma_d min eigenvalue"] = min_eig
        ok = ok and abs(sdq) <= delta and min_eig >= -delta
    # tr(X B) for every basis element B at once
    basis = np.array(alg.basis())
    a1 = np.einsum("ij,kji->k", r @ Q, basis)
    a2 = np.einsum("ij,kji->k", Q @ r, basis)
    target = p * np.einsum("ij,kji->k", s, basis)
    worst = float(max(np.abs(a1 - target).max(), np.abs(a2 - target).max()))
    res["identity residual"] = worst
    ok = ok and worst <= max(delta, tol)
    return DecoherenceResult(bool(ok), p, res)


def purity_property_check(rho, sigma, P, algebra: _Algebra | None = None, tol: float = 1e-9) -> bool:
    """The implication ``rho(P) = 0 and app > 0  =>  sigma(P) = 0``."""
    s, r, alg = _as_pair(sigma, rho, algebra)
    P = np.asarray(P, dtype=complex)
    if expect(r, P) > tol:
        return True
    if app(s, r, alg) <= tol:
        return True
    return expect(s, P) <= tol


def max_projection_gap(sigma, sigma2, algebra: _Algebra | None = None) -> float:
    """``max |sigma(P) - sigma2(P)|`` over projections of the algebra.

    The optimum is the sum of the positive eigenvalues of the blockwise
    difference, i.e. half its trace norm.
    """
    s, s2, alg = _as_pair(sigma, sigma2, algebra)
    total = 0.0
    for a, b in zip(alg.block_densities(s), alg.block_densities(s2)):
        ev = np.linalg.eigvalsh(_herm(a - b))
        total += float(ev[ev > 0].sum())
    return total


def trace_distance(a, b) -> float:
    ev = np.linalg.eigvalsh(_herm(np.asarray(a) - np.asarray(b)))
    return 0.5 * float(np.abs(ev).sum())


@dataclass(frozen=True, eq=False)
class ProjectionPair:
    P: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        P = np.asarray(self.P, dtype=complex)
        Q = np.asarray(self.Q, dtype=complex)
        if not (is_projection(P) and is_projection(Q)):
            raise QuantumError("P and Q must be projections")
        if np.linalg.norm(P @ Q) > PROJ_TOL:
            raise QuantumError("P and Q must be orthogonal")
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)


def check_switch_states(
    states: Sequence[tuple],
    pair: ProjectionPair,
    algebra: _Algebra | None = None,
    theta_partner: tuple | None = None,
) -> dict:
    """Switch-state conditions for one switch.

    ``states`` lists ``(status, density)`` per determination in order.
    ``theta_partner`` is ``(rho_k1, rho_k2)``: the partner switch's states at
    the two opposite-status determinations chosen for it; they are compared
    with this switch's first and second states.
    """
    if not isinstance(pair, ProjectionPair):
        raise QuantumError("pair must be a ProjectionPair")
    P, Q = pair.P, pair.Q
    if algebra is not None and not (algebra.contains(P) and algebra.contains(Q)):
        raise ContainmentError("projection pair not in the algebra")
    stats = [int(np.sign(st)) for st, _ in states]
    rhos = [np.asarray(r, dtype=complex) for _, r in states]
    eP = [expect(r, P) for r in rhos]
    eQ = [expect(r, Q) for r in rhos]
    report = {}
    report["open_states_read_open"] = all(e > 0.5 for e, st in zip(eP, stats) if st > 0)
    report["closed_states_read_closed"] = all(e > 0.5 for e, st in zip(eQ, stats) if st < 0)
    f3 = True
    f4 = True
    worst_same = 0.0
    for a in range(len(rhos)):
        for b in range(a + 1, len(rhos)):
            if stats[a] * stats[b] < 0:
                f3 = f3 and abs(eP[a] - eP[b]) > 0.5 and abs(eQ[a] - eQ[b]) > 0.5
            else:
                g = max(max_projection_gap(rhos[a], rhos[b], algebra), max_projection_gap(rhos[b], rhos[a], algebra))
                worst_same = max(worst_same, g)
                f4 = f4 and g < 0.5
    report["statuses_distinguishable"] = f3
    report["same_status_indistinguishable"] = f4
    report["same_status_max_gap"] = worst_same
    if theta_partner is not None:
        if len(rhos) < 2:
            raise QuantumError("partner comparison needs two states")
        g1 = max_projection_gap(rhos[0], theta_partner[0], algebra)
        g1 = max(g1, max_projection_gap(theta_partner[0], rhos[0], algebra))
        g2 = max_projection_gap(rhos[1], theta_partner[1], algebra)
        g2 = max(g2, max_projection_gap(theta_partner[1], rhos[1], algebra))
        report["partner_indistinguishable"] = g1 < 0.5 and g2 < 0.5
        report["partner_max_gap"] = max(g1, g2)
    report["ok"] = all(v for k, v in report.items() if k in ("open_states_read_open", "closed_states_read_closed", "statuses_distinguishable", "same_status_indistinguishable", "partner_indistinguishable"))
    return report


# --------------------------------------------------------------------------
# serialization


def matrix_to_json(A: np.ndarray, dims: Sequence[int]) -> dict:
    A = np.asarray(A, dtype=complex)
    if _prod(dims) != A.shape[0]:
        raise QuantumError("dims do not match the matrix size")
    return {"dims": [int(d) for d in dims], "data": [[[float(z.real), float(z.imag)] for z in row] for row in A]}


def matrix_from_json(obj: dict) -> tuple[np.ndarray, tuple]:
    if "dims" not in obj:
        raise QuantumError("matrix JSON needs a 'dims' header")
    data = np.array(obj["data"], dtype=float)
    A = data[..., 0] + 1j * data[..., 1]
    dims = tuple(int(d) for d in obj["dims"])
    if A.shape != (_prod(dims), _prod(dims)):
        raise QuantumError("matrix size disagrees with dims header")
    return A, dims


def algebra_from_json(obj: dict) -> _Algebra:
    if obj["kind"] == "factors":
        return FullOnFactors(obj["dims"], obj["factors"])
    if obj["kind"] == "generated":
        return Generated(obj["dims"], [matrix_from_json(g)[0] for g in obj["generators"]])
    raise QuantumError(f"unknown algebra kind {obj['kind']!r}")
