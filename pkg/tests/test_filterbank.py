import math

import numpy as np
import pytest

from gammachar.characteristics import closed_form
from gammachar.filterbank import (B_U1, G1, CfGrid, build_table, q_forw, q_forw_in_window, q_sim,
                                  recipe_bu)
from gammachar.numerics import gamma_ratio

RECIPES = ("historical", "g1_qsim", "g1_qforw")


def _coef(b_u):
    return gamma_ratio(b_u, b_u - 0.5) / math.sqrt(math.pi)


def test_q_sim():
    assert q_sim(1.0) == pytest.approx(1000 / 24.7 / 5.37, rel=1e-14)
    assert q_sim(1.0) == pytest.approx(7.539, abs=5e-4)
    assert q_sim(1e6) == pytest.approx(1000 / (24.7 * 4.37), rel=1e-5)
    cf = np.geomspace(0.02, 20, 200)
    assert np.all(np.diff([q_sim(f) for f in cf]) > 0)
    with pytest.raises(ValueError):
        q_sim(0.0)


def test_q_forw():
    assert q_forw(1.0) == 11.0
    assert q_forw(8.0) == pytest.approx(19.29, abs=5e-3)
    assert not q_forw_in_window(0.5) and q_forw_in_window(1.0) and q_forw_in_window(8.0)
    with pytest.raises(ValueError):
        q_forw(-1.0)


def test_published_coefficients_recomputed():
    assert _coef(4.0) == pytest.approx(1.0186, abs=1e-3)
    assert _coef(7.2) == pytest.approx(1.4334, abs=1e-3)
    assert _coef(4.0) * 24.7 / 1000 == pytest.approx(0.0252, abs=2e-4)
    assert _coef(7.2) / 11 == pytest.approx(0.1303, abs=2e-4)


def test_g1_exponent():
    assert G1 == 1.25 and B_U1 == 7.2
    assert recipe_bu("historical") == 4.0
    with pytest.raises(ValueError):
        recipe_bu("other")


def _row_at_1khz(recipe):
    return build_table(recipe, CfGrid((1.0,))).rows[0]


def test_recipe_values_at_1khz():
    assert _row_at_1khz("historical").constants.a_p == pytest.approx(0.0252 * 5.37, abs=1e-3)
    assert _row_at_1khz("g1_qforw").constants.a_p == pytest.approx(0.1303, abs=1e-3)
    assert _row_at_1khz("g1-qsim").constants.a_p == pytest.approx(0.0354 * 5.37, abs=1e-3)


@pytest.mark.parametrize("recipe", RECIPES)
def test_table_shape_and_formula(recipe):
    t = build_table(recipe)
    assert len(t.rows) == 40 and t.cf_unit == "kHz"
    assert t.rows[0].cf_khz == pytest.approx(0.125) and t.rows[-1].cf_khz == pytest.approx(16.0)
    b_u = recipe_bu(recipe)
    for r in t.rows:
        assert r.constants.b_p == 1.0 and r.constants.b_u == b_u
        assert r.constants.a_p == pytest.approx(_coef(b_u) / r.q_erb, rel=1e-13)
        q = q_forw(r.cf_khz) if recipe == "g1_qforw" else q_sim(r.cf_khz)
        assert r.q_erb == q


@pytest.mark.parametrize("recipe", RECIPES)
def test_q_erb_non_decreasing_in_cf(recipe):
    t = build_table(recipe, CfGrid.make(0.125, 16, 200))
    q = [closed_form(r.constants).q_erb for r in t.rows]
    assert all(y >= x for x, y in zip(q, q[1:]))


@pytest.mark.parametrize("recipe", RECIPES)
def test_regime_flags(recipe):
    t = build_table(recipe, CfGrid.make(0.02, 20, 60))
    assert len(t.rows) == 60
    for r in t.rows:
        degraded = "sharp_regime_degraded" in r.flags
        assert degraded == (r.constants.a_p > 0.25)
        if r.cf_khz >= 0.5:
            assert not degraded
    assert any("sharp_regime_degraded" in r.flags for r in t.rows)


def test_forward_masking_rows_flag_extrapolation():
    t = build_table("g1_qforw", CfGrid((0.5, 1.0, 4.0, 8.0, 10.0)))
    assert [("extrapolated" in r.flags) for r in t.rows] == [True, False, False, False, True]
    assert all(r.q_erb_source == "q_forw" for r in t.rows)


def test_qsim_pairing_note():
    assert build_table("g1_qsim").notes
    assert not build_table("historical").notes


def test_cf_grid():
    g = CfGrid.make(1, 8, 4, "log")
    assert g.spacing == "logarithmic"
    assert g.cf_khz == pytest.approx((1, 2, 4, 8))
    assert CfGrid.make(1, 4, 4, "linear").cf_khz == pytest.approx((1, 2, 3, 4))
    assert CfGrid.make(2, 2, 1).cf_khz == (2.0,)
    for bad in ((), (2.0, 1.0), (0.01,), (25.0,)):
        with pytest.raises(ValueError):
            CfGrid(bad)
    with pytest.raises(ValueError):
        CfGrid((1.0,), "cubic")


def test_unknown_recipe():
    with pytest.raises(ValueError):
        build_table("chinchilla")
