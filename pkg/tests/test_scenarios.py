import itertools
import json
import math

import numpy as np
import pytest

from manyminds import scenarios


@pytest.mark.parametrize("name", sorted(scenarios.REGISTRY))
def test_default_runs_pass(name):
    params = {"trajectories": 10**5} if name == "caricature" else {}
    rep = scenarios.run(name, params)
    assert rep.ok, rep.failures()
    json.dumps(rep.to_json(), allow_nan=False)


def test_everett_two_branches():
    rep = scenarios.everett({"p": [0.3, 0.7]})
    assert rep.data["apps"] == pytest.approx([0.3, 0.7], abs=1e-10)


def test_everett_single_branch():
    rep = scenarios.everett({"p": [1.0]})
    assert rep.ok and rep.data["apps"] == pytest.approx([1.0], abs=1e-12)


def test_everett_random_amplitudes():
    rng = np.random.default_rng(3)
    p = list(rng.dirichlet(np.ones(4)))
    rep = scenarios.everett({"p": p, "seed": 3})
    assert rep.ok
    assert rep.checks["restriction_eigenvalue_residual"]["computed"] < 1e-10


def test_uniform_multistep_passes():
    rep = scenarios.multistep({"R": 2, "M": 2, "uniform": True})
    assert rep.ok, rep.failures()


def test_uniform_binary_leaves_have_weight_quarter():
    tree = scenarios.RecordTree.random(2, 2, uniform=True)
    for leaf in tree.leaves():
        assert tree.prob(leaf[:2]) == pytest.approx(0.25, abs=1e-15)


def test_multistep_perturbation_band():
    rep = scenarios.multistep({"R": 2, "M": 3, "delta": 1e-3, "seed": 4})
    assert rep.checks["perturbed_within_band"]["pass"]
    assert rep.data["band_slack_min"] >= 0


def test_consistency_flags_rotated_family():
    rep = scenarios.consistency({})
    assert rep.ok
    assert rep.checks["rotated_family_flagged"]["computed"] is True


def test_frequency_variance_against_string_sum():
    p, N = 0.5, 4
    brute = sum(
        math.prod(p if c else 1 - p for c in s) * (sum(s) / N - p) ** 2 for s in itertools.product((0, 1), repeat=N)
    )
    assert brute == pytest.approx(0.0625, abs=1e-15)
    f, _ = scenarios.frequency_operators(N)
    diag = scenarios.product_diagonal(np.diag([1 - p, p]).astype(complex), N)
    assert float(diag @ (f - p) ** 2) == pytest.approx(brute, abs=1e-15)


def test_frequency_certain_outcome():
    rep = scenarios.frequency({"p_values": [1.0], "N": 6, "N_binomial": 6})
    assert rep.ok
    assert rep.data["typical_set_weight"]["1.0"] == pytest.approx([1.0] * 6)


def test_frequency_reports_window_dips():
    rep = scenarios.frequency({"p_values": [0.1], "N": 4, "N_binomial": 4})
    assert [0.1, 2] in rep.data["typical_set_weight_decreases"]


def test_glance_single_projection_is_plain_app():
    rep = scenarios.glance({"S": 1, "pa": 0.3})
    assert rep.ok
    assert rep.checks["Pr(a)"]["computed"] == pytest.approx(0.3, abs=1e-9)


def test_glance_doubled_matches_weighted_caricature():
    rep = scenarios.glance({"mode": "doubled", "pa": 0.3})
    assert rep.ok
    assert rep.checks["Pr(a)/Pr(b)"]["computed"] == pytest.approx(2 * 0.3 / 0.7, abs=1e-9)


def test_caricature_variant_b():
    rep = scenarios.caricature({"variant": "B", "p": 0.2, "q": 0.8, "trajectories": 10**5})
    assert rep.ok and rep.checks["F(a)"]["computed"] == pytest.approx(1 / 3, abs=1e-15)


@pytest.mark.parametrize("p,free,want", [(0.2, False, (0.2, 0.8)), (0.2, True, (0.5, 0.5)), (0.0, False, (0.0, 1.0))])
def test_cosmology(p, free, want):
    rep = scenarios.cosmology({"p": p, "free_omega": free})
    assert rep.ok
    assert (rep.checks["Pr(a)"]["computed"], rep.checks["Pr(b)"]["computed"]) == pytest.approx(want, abs=1e-12)


def test_unknown_scenario_and_bad_tolerance():
    with pytest.raises(KeyError):
        scenarios.run("nope")
    with pytest.raises(scenarios.ScenarioError):
        scenarios.run("everett", {}, {"identity": -1.0})
    with pytest.raises(scenarios.ScenarioError):
        scenarios.run("everett", {}, {"bogus": 1.0})


def test_report_check_modes():
    rep = scenarios.Report("x", {})
    rep.check("a", 1.0, 1.0, 0.0)
    rep.check("b", 0.5, 1.0, 0.0, mode="le")
    rep.check("c", 0.5, 1.0, 0.0, mode="ge")
    assert rep.failures() == ["c"]
