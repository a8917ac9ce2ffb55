import math

import numpy as np
import pytest

from manyminds import _kernels, apriori, process
from manyminds._kernels_py import sample_chain as sample_chain_py


def _two_outcome(p):
    table = apriori.jump_distribution(1.0, {"a": p, "b": 1 - p})
    return lambda s: table if s == "o" else None


def test_deterministic_chain():
    tables = {k: apriori.jump_distribution(1.0, {k + 1: 1.0}) for k in range(5)}
    ens = process.run_trajectories(0, tables.get, 20, seed=3)
    paths = {tuple(t.steps) for t in ens.trajectories}
    assert len(paths) == 1
    assert all(t.terminal == process.ALIVE and t.final == "5" for t in ens.trajectories)


def test_two_outcome_frequency_within_three_sigma():
    n = 10**5
    rep = process.run_trajectories("o", _two_outcome(0.3), n, seed=7).report()
    f = rep["hitting_frequencies"]["a"]
    assert abs(f - 0.3) <= 3 * math.sqrt(0.3 * 0.7 / n)


def test_same_seed_same_report():
    a = process.run_trajectories("o", _two_outcome(0.4), 2000, seed=11)
    b = process.run_trajectories("o", _two_outcome(0.4), 2000, seed=11)
    assert a.report() == b.report() and a.to_csv() == b.to_csv()
    c = process.run_trajectories("o", _two_outcome(0.4), 2000, seed=12)
    assert c.to_csv() != a.to_csv()


def test_trajectories_replay_individually():
    ens = process.run_trajectories("o", _two_outcome(0.5), 50, seed=2)
    for t in ens.trajectories[::7]:
        u = _kernels.uniform(2, t.index, 0)
        assert (t.final == "a") == (u < 0.5)


def test_extinction_rate():
    table = apriori.jump_distribution(1.0, {"a": 0.25, "b": 0.25})
    rep = process.run_trajectories("o", lambda s: table if s == "o" else None, 40000, seed=1).report()
    assert abs(rep["extinction_rate"] - 0.5) < 4 * math.sqrt(0.25 / 40000)
    assert rep["terminals"]["extinct"] + rep["terminals"]["alive"] == 40000


def test_step_limit():
    loop = apriori.jump_distribution(1.0, {"o": 1.0})
    ens = process.run_trajectories("o", lambda s: loop, 3, max_steps=10)
    assert all(t.terminal == process.STEP_LIMIT and len(t.steps) == 10 for t in ens.trajectories)


def test_zero_trajectories_still_reports_jump_table():
    rep = process.run_trajectories("o", _two_outcome(0.3), 0).report()
    assert rep["trajectories"] == 0 and rep["jump_tables"]["o"]["jumps"] == {"a": 0.3, "b": 0.7}


def test_evaluator_failure_names_the_structure():
    def bad(s):
        raise ValueError("no menus")

    with pytest.raises(process.ProcessError, match="structure o"):
        process.run_trajectories("o", bad, 1)


def test_path_weights_and_replay():
    rep = process.run_trajectories("o", _two_outcome(0.3), 500, seed=4).report()
    w = rep["weights"]
    assert w["distinct_paths"] == 2 and abs(w["distinct_path_weight_sum"] - 1) < 1e-12
    assert w["replay_residual"] == 0.0


@pytest.mark.parametrize(
    "variant,p,q,want",
    [("A", 0.2, 0.8, 0.2), ("B", 0.2, 0.8, 1 / 3)],
)
def test_caricature_closed_forms(variant, p, q, want):
    cf = process.caricature_closed_form(process.CaricatureSpec(p, q, 0.7, variant))
    assert cf.F_a == pytest.approx(want, abs=1e-15)
    assert cf.F_a + cf.F_b == pytest.approx(1.0, abs=1e-15)


def test_weighted_variant_with_unit_weights_reduces():
    for wa, other in (((1.0,), "A"), ((1.0, 1.0), "B")):
        c = process.caricature_closed_form(process.CaricatureSpec(0.3, 0.6, 1.0, "C", wa, (1.0,)))
        ref = process.caricature_closed_form(process.CaricatureSpec(0.3, 0.6, 1.0, other))
        assert c.F_a == ref.F_a


def test_per_step_terms_sum_to_closed_form():
    spec = process.CaricatureSpec(0.2, 0.8, 0.5, "B")
    cf = process.caricature_closed_form(spec)
    assert math.fsum(cf.F_n(n) for n in range(1, 200)) == pytest.approx(cf.F_a, abs=1e-14)


def test_no_loop_means_one_step():
    est = process.caricature_simulate(process.CaricatureSpec(0.2, 0.8, 0.0, "A"), 5000, seed=0)
    assert est.max_steps_taken == 1 and est.unfinished == 0


@pytest.mark.parametrize("variant,want", [("A", 0.2), ("B", 1 / 3)])
def test_caricature_simulation_within_three_sigma(variant, want):
    n = 10**6
    est = process.caricature_simulate(process.CaricatureSpec(0.2, 0.8, 100.0, variant), n, seed=5)
    assert abs(est.F_a - want) <= 3 * math.sqrt(want * (1 - want) / n)


def test_compiled_and_fallback_chains_agree():
    spec = process.CaricatureSpec(0.3, 0.5, 0.9, "C", (1, 2), (1,))
    cdf, absorbing = process.caricature_chain(spec)
    for name, k in _kernels.backends().items():
        final, steps = k.sample_chain(cdf, absorbing, 0, 3000, 50, 9)
        ref_final, ref_steps = sample_chain_py(cdf, absorbing, 0, 3000, 50, 9)
        assert np.array_equal(final, ref_final) and np.array_equal(steps, ref_steps), name


def test_kernel_backends_identical_uniforms():
    idx = np.arange(1000, dtype=np.uint64)
    outs = [k.uniform_array(123, idx, 4) for k in _kernels.backends().values()]
    for o in outs:
        assert np.array_equal(o, outs[0])
    assert all(0.0 <= v < 1.0 for v in outs[0])
    assert outs[0][17] == _kernels.uniform(123, 17, 4)


def test_invalid_specs():
    with pytest.raises(ValueError):
        process.CaricatureSpec(0.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        process.CaricatureSpec(0.2, 0.8, 1.0, "D")
    with pytest.raises(process.ProcessError):
        process.run_trajectories("o", _two_outcome(0.5), -1)
