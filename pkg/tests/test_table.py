import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cohesive1d.cohesive_law import g, g0, m_of_s, s_of_m
from cohesive1d.errors import DomainError
from cohesive1d.table import default_s_grid, tabulate_law


def test_midpoints_match_direct_solver(model_b):
    grid = np.linspace(0.0, 4.0, 64)
    law = tabulate_law(model_b, grid)
    mids = 0.5 * (grid[1:] + grid[:-1])
    direct = np.array([g0(model_b, s).value for s in mids])
    assert np.max(np.abs(law.g0_interp(mids) - direct)) <= 1e-4


def test_table_invariants(law_a, law_b, model_a):
    for law in (law_a, law_b):
        s = law.s_grid
        assert law.g0_table[0] == 0.0 and law.m_table[0] == 1.0
        assert np.all(np.diff(law.g0_table) >= 0)
        assert np.all(np.diff(law.m_table) <= 0)
        assert np.all(law.g0_table <= np.minimum(1.0, law.model.ell * s) + 1e-12)
        assert np.all(np.diff(law.g0_table) <= law.model.ell * np.diff(s) + 1e-12)
    sf = law_a.s_frac_estimate
    assert np.all(law_a.m_table[law_a.s_grid >= sf] == 0.0)
    assert math.isinf(law_b.s_frac_estimate)


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 4.0), st.floats(0.0, 4.0))
def test_interpolant_monotone_lipschitz(a, b):
    from cohesive1d import FamilyB

    law = _LAW_B
    lo, hi = sorted((a, b))
    glo, ghi = law.g0_interp(lo), law.g0_interp(hi)
    assert 0.0 <= glo <= ghi + 1e-15
    assert ghi - glo <= law.model.ell * (hi - lo) + 1e-12
    assert law.m_interp(lo) >= law.m_interp(hi) - 1e-15


def test_s_of_m_round_trip(law_b):
    for m in (0.3, 0.5, 0.7):
        s = law_b.s_of_m(m)
        assert law_b.m_interp(s) == pytest.approx(m, abs=1e-10)
        assert s == pytest.approx(s_of_m(law_b.model, m), abs=1e-3)


def test_memory_column_agrees_with_g0_above_memory(law_b):
    sp = 1.3
    s = np.linspace(sp, 4.0, 30)
    assert np.allclose(law_b.g(s, sp), law_b.g0_interp(s), atol=1e-15)
    below = np.linspace(0.0, sp, 9)[:-1]
    direct = np.array([g(law_b.model, x, sp).value for x in below])
    assert np.max(np.abs(law_b.g(below, sp) - direct)) <= 1e-6


def test_fig1_memory_curves_ordered(law_b, model_b):
    # at fixed s below all memories, a larger well depth m gives a lower curve
    sps = [s_of_m(model_b, m) for m in (0.3, 0.5, 0.7)]
    s = np.linspace(0.0, min(sps) * 0.999, 12)
    curves = [np.array([g(model_b, x, sp).value for x in s]) for sp in sps]
    assert np.all(curves[0] > curves[1]) and np.all(curves[1] > curves[2])
    for sp, c in zip(sps, curves):
        assert np.all(c >= np.array([g0(model_b, x).value for x in s]) - 1e-12)
        # the curve reaches g0 at s = s' (where the memory cap stops binding)
        assert g(model_b, sp, sp).value == g0(model_b, sp).value


def test_tabulated_memory_grid(model_b):
    law = tabulate_law(model_b, default_s_grid(3.0, 33), sprime_grid=(0.5, 1.0))
    assert law.g_table.shape == (33, 2)
    for j, sp in enumerate((0.5, 1.0)):
        for i, s in enumerate(law.s_grid):
            assert law.g_table[i, j] == pytest.approx(g(model_b, s, sp).value, abs=1e-14)


def test_range_checks(law_b, law_a):
    with pytest.raises(DomainError):
        law_b.g0_interp(5.0)
    with pytest.raises(DomainError):
        law_b.g0_interp(-0.1)
    assert law_a.g0_interp(10.0) == 1.0
    assert law_a.m_interp(10.0) == 0.0


def test_grid_validation(model_a):
    with pytest.raises(ValueError):
        tabulate_law(model_a, [0.1, 0.2, 0.3])
    with pytest.raises(ValueError):
        tabulate_law(model_a, [0.0, 0.2, 0.2])


def test_threads_give_identical_tables(model_b):
    grid = default_s_grid(2.0, 17)
    a = tabulate_law(model_b, grid)
    b = tabulate_law(model_b, grid, threads=4)
    assert np.array_equal(a.g0_table, b.g0_table)
    assert np.array_equal(a.m_table, b.m_table)


from cohesive1d import FamilyB as _FB  # noqa: E402

_LAW_B = tabulate_law(_FB(1.5, 2.8), default_s_grid(4.0))
