import numpy as np
import pytest

from cohesive1d.cohesive_law import g, g0, m_of_s, s_of_m
from cohesive1d.evolution import CrackState, StepProblem, minimize_step
from cohesive1d.oracle import (
    OracleReport,
    evolution_step_exhaustive,
    g0_direct,
    g_direct,
    pull_transition,
    random_step_problem,
    well_depth_direct,
)


def test_g0_direct_examples(model_a):
    assert g0_direct(model_a, 0.0, 256) == 0.0
    for s in (0.5, 1.0, 2.0):
        d = g0_direct(model_a, s, 256, n_random=4)
        assert d <= min(1.0, model_a.ell * s) + 1e-6
        assert d == pytest.approx(g0(model_a, s).value, abs=1e-3)


def test_well_depth_direct(model_a):
    assert well_depth_direct(model_a, 0.0) == 1.0
    assert well_depth_direct(model_a, 1.0, 512) == pytest.approx(m_of_s(model_a, 1.0), abs=5e-3)


def test_g_direct_examples(model_b):
    sp = s_of_m(model_b, 0.5)
    # inactive constraint: the clamp sits below the free peak
    assert g_direct(model_b, 2 * sp, sp, 256, n_random=2, m_prime=0.5) == pytest.approx(
        g0_direct(model_b, 2 * sp, 256, n_random=2), abs=1e-6
    )
    assert g_direct(model_b, 0.0, sp, 512, n_random=2, m_prime=0.5) == pytest.approx(0.25, abs=2e-3)
    val = g_direct(model_b, 0.3, sp, 1024, n_random=4, m_prime=0.5)
    assert val == pytest.approx(g(model_b, 0.3, sp).value, abs=1e-3)


def test_exhaustive_zero_data(law_a):
    prob = StepProblem(8, (0.0, 0.0), np.zeros(9), 0.0, np.zeros(9), 0.0)
    E, J = evolution_step_exhaustive(prob, law_a)
    assert E == 0.0 and np.all(J == 0)


def test_exhaustive_pull_below_transition(law_a):
    prob = StepProblem(8, (0.0, 0.4), np.zeros(9), 0.0, np.zeros(9), 0.8)
    E, J = evolution_step_exhaustive(prob, law_a)
    assert np.all(J == 0)
    assert E == pytest.approx(0.16, abs=1e-12)


def test_exhaustive_rejects_large_bars(law_a):
    prob = StepProblem(16, (0.0, 1.0), np.zeros(17), 0.0, np.zeros(17), 2.0)
    with pytest.raises(ValueError):
        evolution_step_exhaustive(prob, law_a)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_exhaustive_agrees_with_step_solver(law_a, seed):
    rng = np.random.default_rng(seed)
    prob = random_step_problem(rng)
    E_ref, _ = evolution_step_exhaustive(prob, law_a)
    u = minimize_step(CrackState(prob.n_cells, prob.memory), prob.b, prob.w, law_a, penalty_weight=prob.penalty, reach=prob.reach)
    assert u.energy == pytest.approx(E_ref, abs=1e-4)


def test_random_step_problem_is_seeded():
    a = random_step_problem(np.random.default_rng(7))
    b = random_step_problem(np.random.default_rng(7))
    assert a.b == b.b and np.array_equal(a.w, b.w) and np.array_equal(a.memory, b.memory)
    assert a.reach >= 2 * max(abs(a.b[0]), abs(a.b[1]))


def test_pull_transition(law_a):
    d = pull_transition(law_a, 1e-4)
    assert 0 < d < np.inf
    # the step solver switches branch at the same place
    below = minimize_step(CrackState.empty(8), (0, d - 2e-3), None, law_a)
    above = minimize_step(CrackState.empty(8), (0, d + 2e-3), None, law_a)
    assert np.all(below.jumps == 0) and np.any(above.jumps != 0)


def test_oracle_report():
    r = OracleReport("g0(s=1)", 0.5, 0.5004, {"n_nodes": 1024})
    assert r.gap == pytest.approx(4e-4) and r.passed
    row = r.row()
    assert row["passed"] and row["tolerance"] == 1e-3
    assert not OracleReport("x", 0.0, 0.01).passed
