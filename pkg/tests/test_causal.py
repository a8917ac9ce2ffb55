import numpy as np
import pytest

from manyminds import causal
from manyminds.causal import Ball, Box, Docket, Relation

import oracles


def _box(rng, scale=3.0):
    lo = rng.uniform(-scale, scale, 4)
    return Box(lo, lo + rng.uniform(0.0, 1.0, 4))


def test_separated_unit_boxes_are_past():
    a = Box((0, 0, 0, 0), (1, 1, 1, 1))
    b = Box((5, 1.5, 0, 0), (6, 2.5, 1, 1))
    assert causal.causal_relation(a, b) is Relation.PAST
    assert causal.causal_relation(b, a) is Relation.FUTURE


def test_identical_regions_are_mixed():
    a = Box((0, 0, 0, 0), (1, 1, 1, 1))
    assert causal.causal_relation(a, a) is Relation.MIXED
    ball = Ball((0, 0, 0, 0), 0.5)
    assert causal.causal_relation(ball, ball) is Relation.MIXED


def test_random_boxes_match_point_sampling():
    rng = np.random.default_rng(11)
    decided = 0
    seen = set()
    for _ in range(1000):
        a, b = _box(rng), _box(rng)
        want = oracles.sampled_relation(a.lo, a.hi, b.lo, b.hi)
        if want is None:
            continue
        decided += 1
        got = causal.causal_relation(a, b).value
        seen.add(got)
        assert got == want, (a, b)
    assert decided >= 900
    assert seen == {"P", "F", "S", "X"}


def test_relation_is_boost_invariant():
    rng = np.random.default_rng(5)
    checked = 0
    for _ in range(200):
        a, b = _box(rng), _box(rng)
        want = oracles.sampled_relation(a.lo, a.hi, b.lo, b.hi)
        if want is None:
            continue
        L = causal.boost(float(rng.uniform(-1, 1)), rng.normal(size=3))
        assert causal.is_restricted_lorentz(L)
        ba = a.poincare(np.zeros(4), L, np.zeros(4))
        bb = b.poincare(np.zeros(4), L, np.zeros(4))
        assert causal.causal_relation(ba, bb).value == want
        checked += 1
    assert checked > 150


def test_single_region_docket():
    d = causal.docket_of([Box((0, 0, 0, 0), (1, 1, 1, 1))])
    assert d.rel == ("S",) and d.ascending


def test_spacelike_pair_docket():
    a = Box((0, 0, 0, 0), (0.1, 0.1, 0.1, 0.1))
    b = Box((0, 5, 0, 0), (0.1, 5.1, 0.1, 0.1))
    d = causal.docket_of([a, b])
    assert d.rel == ("SS", "SS") and d.ascending


def test_out_of_order_chain_is_not_ascending():
    boxes = [Box((t, 0, 0, 0), (t + 0.1, 0.1, 0.1, 0.1)) for t in (0, 2, 1, 3)]
    d = causal.docket_of(boxes)
    assert not d.ascending
    assert d.relation(1, 2) is Relation.FUTURE


def test_mixed_pair_raises():
    a = Box((0, 0, 0, 0), (1, 1, 1, 1))
    with pytest.raises(causal.MixedRelationError):
        causal.docket_of([a, a])


def test_permutation_identity_and_swap():
    d = Docket.chain(3)
    assert causal.docket_permute(d, [0, 1, 2]) == d
    assert causal.docket_permute(Docket.chain(2), [1, 0]).rel == ("SF", "PS")


def test_permutation_matches_regenerated_docket():
    rng = np.random.default_rng(2)
    for _ in range(40):
        m = int(rng.integers(2, 6))
        regions = [Ball((float(t), *rng.uniform(-4, 4, 3)), 0.05) for t in rng.uniform(0, 10, m)]
        try:
            d = causal.docket_of(regions)
        except causal.MixedRelationError:
            continue
        pi = list(rng.permutation(m))
        assert causal.docket_permute(d, pi) == causal.docket_of([regions[i] for i in pi])


def test_ball_radius_bound():
    # time gap must beat the spatial gap plus sqrt(2) times the summed radii
    a = Ball((0, 0, 0, 0), 0.1)
    near = Ball((1.2, 1.0, 0, 0), 0.1)
    far = Ball((1.4, 1.0, 0, 0), 0.1)
    assert causal.causal_relation(a, near) is Relation.MIXED
    assert causal.causal_relation(a, far) is Relation.PAST


def test_dimension_mismatch():
    with pytest.raises(causal.DimensionMismatch):
        causal.causal_relation(Box((0, 0), (1, 1)), Box((0, 0, 0), (1, 1, 1)))


def test_docket_json_roundtrip():
    d = Docket.chain(4)
    assert Docket.from_json(d.to_json()) == d
