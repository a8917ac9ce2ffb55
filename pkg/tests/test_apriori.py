import itertools
import math

import numpy as np
import pytest

from manyminds import apriori as ap
from manyminds import quantum as qm
from manyminds import scenarios
from manyminds import structures as st


def _cond(rho, idx):
    P = np.zeros_like(rho)
    for i in idx:
        P[i, i] = 1.0
    out = P @ rho @ P
    return out / np.trace(out).real


def _seq(omega, subsets, label=""):
    states, cur = [], omega
    for idx in subsets:
        cur = _cond(cur, idx)
        states.append(cur)
    return ap.StateSequence(omega, tuple(states), qm.full_algebra((omega.shape[0],)), label)


def test_constant_sequence_has_app_one():
    rng = np.random.default_rng(0)
    om = qm.random_density(3, rng)
    seq = ap.StateSequence(om, (om, om, om), qm.full_algebra((3,)))
    assert abs(ap.seq_app(seq) - 1.0) < 1e-12


def test_nested_records_give_product_of_conditionals():
    tree = scenarios.RecordTree.random(2, 3, seed=1)
    omega = tree.universal_state()
    alg = qm.full_algebra((omega.shape[0],))
    for leaf in tree.leaves():
        states, cur = [], omega
        for k in range(1, len(leaf) + 1):
            Q = tree.projection(leaf[:k])
            cur = Q @ cur @ Q
            cur = cur / np.trace(cur).real
            states.append(cur)
        seq = ap.StateSequence(omega, tuple(states), alg)
        assert abs(ap.seq_app(seq) - tree.prob(leaf)) < 1e-10


def test_random_qubit_sequence_factors():
    rng = np.random.default_rng(2)
    om = qm.random_density(2, rng)
    states = tuple(qm.random_density(2, rng) for _ in range(3))
    seq = ap.StateSequence(om, states, qm.full_algebra((2,)))
    want = math.prod(qm.app(b, a) for a, b in zip((om,) + states, states))
    assert abs(ap.seq_app(seq) - want) < 1e-12


def test_singleton_menu():
    om = np.diag([0.4, 0.5, 0.05, 0.05]).astype(complex)
    seq = _seq(om, [(0, 1, 2), (2,)])
    val, best = ap.inductive_app(ap.ManifestationMenu((seq,)))
    assert best is seq and abs(val - ap.seq_app(seq)) < 1e-15


def test_prefix_choice_beats_global_maximum():
    om = np.diag([0.4, 0.5, 0.05, 0.05]).astype(complex)
    greedy = _seq(om, [(0, 1, 2), (2,)], "greedy")  # 0.95 then 0.05/0.95
    late = _seq(om, [(1, 3), (1,)], "late")  # 0.55 then 0.5/0.55
    menu = ap.ManifestationMenu((late, greedy))
    val, best = ap.inductive_app(menu)
    # exhaustive prefix-by-prefix evaluation
    alive = list(menu.candidates)
    for k in range(menu.length):
        pref = {c.label: math.prod(c.factors()[: k + 1]) for c in alive}
        top = max(pref.values())
        alive = [c for c in alive if pref[c.label] == top]
    assert [c.label for c in alive] == ["greedy"]
    assert best.label == "greedy"
    assert abs(val - 0.05) < 1e-12
    assert max(ap.seq_app(c) for c in menu.candidates) == pytest.approx(0.5)
    assert val <= max(ap.seq_app(c) for c in menu.candidates)


def test_ties_survive_to_the_end():
    om = np.diag([0.25, 0.25, 0.25, 0.25]).astype(complex)
    a = _seq(om, [(0, 1), (0,)], "a")
    b = _seq(om, [(2, 3), (3,)], "b")
    assert [c.label for c in ap.inductive_survivors(ap.ManifestationMenu((a, b)))] == ["a", "b"]


def test_value_never_exceeds_best_sequence():
    rng = np.random.default_rng(3)
    for _ in range(30):
        om = np.diag(rng.dirichlet(np.ones(5))).astype(complex)
        cands = []
        for _ in range(4):
            first = tuple(sorted(rng.choice(5, 3, replace=False)))
            second = tuple(sorted(rng.choice(first, 2, replace=False)))
            cands.append(_seq(om, [first, second]))
        menu = ap.ManifestationMenu(tuple(cands))
        assert ap.inductive_app(menu)[0] <= max(ap.seq_app(c) for c in cands) + 1e-15


def _menu_with_value(v):
    om = np.diag([v, 1 - v]).astype(complex)
    return ap.ManifestationMenu((_seq(om, [(0,)]),))


def test_structure_app_takes_max_over_labellings():
    s = st.SwitchingStructure.make(tuple("S" * 8 for _ in range(8)), (1, 2, -1, -2, 1, 2, -1, -2))
    t = st.SwitchingStructure.make(tuple("S" * 8 for _ in range(8)), (2, 1, -2, -1, 2, 1, -2, -1))
    assert abs(ap.structure_app(s, {s: [_menu_with_value(0.2)]}) - 0.2) < 1e-12
    assert abs(ap.structure_app(s, {s: [_menu_with_value(0.2)], t: [_menu_with_value(0.5)]}) - 0.5) < 1e-12


def test_structure_app_invariant_under_relabelling_keys():
    rng = np.random.default_rng(4)
    s = st.SwitchingStructure.minimal()
    menus = [_menu_with_value(float(v)) for v in rng.uniform(0.1, 0.9, 3)]
    base = ap.structure_app(s, {s: menus})
    for pi in itertools.permutations(range(4)):
        if not st.is_admissible(s, pi):
            continue
        t = st.apply_relabelling(s, pi, {1: 1})
        assert ap.structure_app(t, {t: menus}) == base


def test_structure_app_rejects_foreign_keys():
    s = st.SwitchingStructure.minimal()
    other = st.SwitchingStructure.minimal((1, -1, 1, -1, 1))
    with pytest.raises(ap.AprioriError):
        ap.structure_app(s, {other: [_menu_with_value(0.3)]})
    with pytest.raises(ap.AprioriError):
        ap.structure_app(s, {})


def test_single_successor_equal_to_parent():
    t = ap.jump_distribution(0.4, {"a": 0.4})
    assert t.jumps == {"a": 1.0} and t.extinction == 0.0 and t.normalised


def test_deficit_becomes_extinction():
    t = ap.jump_distribution(0.8, {"a": 0.2, "b": 0.4})
    assert not t.normalised
    assert t.extinction == pytest.approx(1 - 0.6 / 0.8, abs=1e-15)
    assert abs(t.total() - 1) < 1e-15


def test_record_model_jumps_and_extinction():
    tree = scenarios.RecordTree.random(3, 2, seed=5, p_stop=0.15)
    for prefix in {leaf[:2] for leaf in tree.leaves()}:
        parent = tree.prob(prefix)
        succ = {r: tree.prob(prefix + (r,)) for r in range(1, 4)}
        t = ap.jump_distribution(parent, succ)
        for r in succ:
            assert abs(t.jumps[r] - tree.cond[prefix + (r,)]) < 1e-10
        assert abs(t.extinction - tree.cond[prefix + (0,)]) < 1e-10


@pytest.mark.parametrize("parent", [0.01, 0.5, 1.0, 2.0])
def test_jump_table_always_sums_to_one(parent):
    rng = np.random.default_rng(int(parent * 100))
    for _ in range(100):
        apps = dict(enumerate(rng.uniform(0, 1, int(rng.integers(1, 7))) ** 3))
        t = ap.jump_distribution(parent, apps)
        assert abs(t.total() - 1.0) <= 1e-12
        if t.xi >= parent:
            assert t.extinction == 0.0


def test_invalid_jump_inputs():
    with pytest.raises(ap.AprioriError):
        ap.jump_distribution(0.0, {"a": 0.1})
    with pytest.raises(ap.AprioriError):
        ap.jump_distribution(1.0, {"a": -0.1})


def test_singleton_theory_class_reduces_to_structure_app():
    s = st.SwitchingStructure.minimal()
    om = np.diag([0.3, 0.7]).astype(complex)
    point = ap.TheoryPoint("fixed", {}, (om,))
    factory = lambda pt, omega: {s: [ap.ManifestationMenu((_seq(omega, [(0,)]),))]}
    val, (pt, k) = ap.structure_app_variant(s, factory, [point])
    assert pt is point and k == 0
    assert abs(val - ap.structure_app(s, factory(point, om))) < 1e-15


def test_free_state_class_flattens_the_outcome():
    fa, fb, info = scenarios.cosmology_distribution(0.2, 4, True)
    assert abs(fa - 0.5) < 1e-12 and abs(fb - 0.5) < 1e-12 and info["extinction"] == 0.0
    fa, fb, _ = scenarios.cosmology_distribution(0.2, 4, False)
    assert abs(fa - 0.2) < 1e-12 and abs(fb - 0.8) < 1e-12


def test_menu_validation():
    om = np.eye(2, dtype=complex) / 2
    with pytest.raises(ap.AprioriError):
        ap.ManifestationMenu(())
    with pytest.raises(ap.AprioriError):
        ap.ManifestationMenu((_seq(om, [(0,)]), _seq(om, [(0, 1), (0,)])))
    with pytest.raises(ap.AprioriError):
        ap.StateSequence(om, (np.eye(3) / 3,), qm.full_algebra((2,)))
