import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gammachar.characteristics import RatioKind, closed_form, ratio_value
from gammachar.design import (BU_BRACKET, DesignError, DesignSpec, UnattainableError,
                              bu_constraints, estimate_bp, run_design, solve_ap,
                              solve_ap_from_ratio, solve_bu)
from gammachar.filterbank import q_forw, q_sim
from gammachar.response import FilterConstants


def test_estimate_bp():
    assert estimate_bp() == 1.0
    assert estimate_bp(0.98) == 0.98
    assert estimate_bp(0.7) == 0.7
    with pytest.raises(ValueError):
        estimate_bp(0.0)


def test_solve_bu_g_examples():
    assert solve_bu("g", 1.25).value == pytest.approx(7.2, abs=0.05)
    assert solve_bu("g", 1.6).value == pytest.approx(4.0, abs=1e-9)
    assert solve_bu("g", 2.0).value == pytest.approx(2.0, abs=1e-9)
    est = solve_bu(RatioKind.G, 1.25)
    assert est.kind == "point" and not est.is_bound
    assert est.sensitivity == pytest.approx(-13.0, abs=0.1)


def test_solve_bu_alpha_gives_branch_value_with_warning():
    est = solve_bu("alpha", 1.8)
    assert 3.86 <= est.value <= 4.0
    assert any(w.startswith("sensitivity") for w in est.warnings)


def test_solve_bu_alpha_below_asymptote_is_lower_bound():
    est = solve_bu("alpha", 1.70)
    assert est.is_bound and est.value == BU_BRACKET[1]


def test_solve_bu_unattainable():
    with pytest.raises(UnattainableError):
        solve_bu("g", 3.0)
    with pytest.raises(UnattainableError):
        solve_bu("g", 0.1)


def test_solve_bu_rejects_ap_only_ratio():
    with pytest.raises(ValueError):
        solve_bu("s_over_n", 100.0)


def test_solve_bu_branch_envelope_and_sensitivity_warnings():
    est = solve_bu("g", 2.05)
    assert est.other_roots and any(w.startswith("branch") for w in est.warnings)
    low = solve_bu("g", 2.1)
    assert low.value < 1.5 and any(w.startswith("envelope") for w in low.warnings)
    flat = solve_bu("g", 0.6)
    assert abs(flat.sensitivity) > 50
    assert any(w.startswith("sensitivity") for w in flat.warnings)


@given(st.floats(1.5, 50.0))
@settings(max_examples=100, deadline=None)
def test_solve_bu_inverts_g(B):
    g = ratio_value("g", FilterConstants(0.1, 1.0, B))
    assert solve_bu("g", g).value == pytest.approx(B, rel=1e-10)


@pytest.mark.parametrize("ratio", ["qerb_over_q3", "erb_times_n", "erbsq_times_s",
                                   "bw3_times_n", "bw10sq_times_s"])
@pytest.mark.parametrize("B", [1.7, 4.0, 12.0])
def test_solve_bu_inverts_other_ratios(ratio, B):
    v = ratio_value(ratio, FilterConstants(0.1, 1.0, B))
    assert solve_bu(ratio, v).value == pytest.approx(B, rel=1e-9)


def test_g_scales_with_bp():
    v = ratio_value("g", FilterConstants(0.1, 0.8, 5.0))
    assert solve_bu("g", v, b_p=0.8).value == pytest.approx(5.0, rel=1e-10)


def test_solve_ap_examples():
    assert solve_ap("q_erb", q_sim(1.0), 1.0, 4.0) == pytest.approx(1.0186 / q_sim(1.0), rel=1e-4)
    assert solve_ap("q_erb", q_forw(1.0), 1.0, 7.2) == pytest.approx(0.1303, abs=1e-4)
    with pytest.raises(ValueError):
        solve_ap("q_erb", -1.0, 1.0, 4.0)
    with pytest.raises(ValueError):
        solve_ap("q_erb", 5.0, 1.0, 0.5)
    with pytest.raises(ValueError):
        solve_ap("phi_accum", 2.0, 1.0, 4.0)


@given(st.floats(0.01, 0.3), st.floats(0.5, 2.0), st.floats(0.6, 20))
@settings(max_examples=100, deadline=None)
def test_solve_ap_round_trip(a, b, B):
    ch = closed_form(FilterConstants(a, b, B), (3, 10))
    for name in ("q_erb", "n_beta", "s_beta", "q_3", "q_10"):
        assert solve_ap(name, ch.get(name), b, B) == pytest.approx(a, rel=1e-12)


def test_solve_ap_from_ratio():
    assert solve_ap_from_ratio("phi_over_n", math.pi * 0.05) == pytest.approx(0.05, rel=1e-15)
    v = ratio_value("s_over_n", FilterConstants(0.1, 1, 4))
    assert solve_ap_from_ratio("s_over_n", v) == pytest.approx(0.1, rel=1e-14)
    with pytest.raises(ValueError):
        solve_ap_from_ratio("g", 1.6)
    with pytest.raises(ValueError):
        solve_ap_from_ratio("phi_over_n", 0.0)


def test_ap_only_ratios_are_strongly_identifying():
    # dA/d(S/N) = -A/(S/N) and dA/d(phi/N) = 1/pi, both finite across the regime
    for a in np.linspace(0.01, 0.3, 30):
        c = FilterConstants(a, 1, 4)
        s = ratio_value("s_over_n", c)
        h = 1e-6 * s
        ds = (solve_ap_from_ratio("s_over_n", s + h) - solve_ap_from_ratio("s_over_n", s - h)) / (2 * h)
        assert ds == pytest.approx(-a / s, rel=1e-6)
        assert abs(ds) < 2e-3
        p = ratio_value("phi_over_n", c)
        dp = (solve_ap_from_ratio("phi_over_n", p * 1.001)
              - solve_ap_from_ratio("phi_over_n", p * 0.999)) / (0.002 * p)
        assert dp == pytest.approx(1 / math.pi, rel=1e-9)


def test_run_design_g1_with_forward_masking():
    res = run_design(DesignSpec(ap_source=("q_erb", q_forw(1.0)), bu_source=("g", 1.25)))
    c = res.constants
    assert c.b_p == 1.0
    assert c.b_u == pytest.approx(7.2, abs=0.05)
    assert c.a_p == pytest.approx(0.1303, abs=5e-4)
    assert res.bu_estimate is not None


def test_run_design_fixed_exponent():
    res = run_design(DesignSpec(ap_source=("q_erb", 7.539), b_u=4.0))
    assert res.constants.a_p == pytest.approx(0.1351, abs=1e-4)
    assert res.diagnostics == ()


def test_run_design_alpha_gated():
    with pytest.raises(DesignError):
        DesignSpec(ap_source=("q_erb", 11.0), bu_source=("alpha", 1.75))
    res = run_design(DesignSpec(ap_source=("q_erb", 11.0), bu_source=("alpha", 1.75),
                                allow_alpha=True))
    assert any(d.startswith("advisory") for d in res.diagnostics)
    with pytest.raises(UnattainableError):
        run_design(DesignSpec(ap_source=("q_erb", 11.0), bu_source=("alpha", 1.70),
                              allow_alpha=True))


def test_design_spec_validation():
    with pytest.raises(DesignError):
        DesignSpec(ap_source=("q_erb", 11.0))
    with pytest.raises(DesignError):
        DesignSpec(ap_source=("q_erb", 11.0), bu_source=("g", 1.25), b_u=4.0)
    with pytest.raises(DesignError):
        DesignSpec(ap_source=("q_erb", 11.0), bu_source=("phi_over_n", 0.3))
    with pytest.raises(DesignError):
        DesignSpec(ap_source=("q_erb", -1.0), b_u=4.0)
    with pytest.raises(DesignError):
        DesignSpec(ap_source=("q_erb", 1.0), b_u=0.0)


def test_run_design_warnings():
    res = run_design(DesignSpec(ap_source=("q_erb", 2.0), b_u=4.0))
    assert any(d.startswith("regime") for d in res.diagnostics)
    res = run_design(DesignSpec(ap_source=("q_erb", 10.0), b_u=1.2))
    assert any(d.startswith("envelope") for d in res.diagnostics)


def test_run_design_uses_beta_peak():
    c0 = FilterConstants(0.08, 0.9, 5.0)
    ch = closed_form(c0)
    res = run_design(DesignSpec(ap_source=("n_beta", ch.n_beta),
                                bu_source=("g", ratio_value("g", c0)), beta_peak=0.9))
    assert res.constants.b_p == 0.9
    assert res.constants.a_p == pytest.approx(0.08, rel=1e-10)
    assert res.constants.b_u == pytest.approx(5.0, rel=1e-10)


def test_order_independence():
    c0 = FilterConstants(0.07, 1.0, 6.3)
    ch = closed_form(c0)
    # default: b_u from g, then a_p from a characteristic
    fwd = run_design(DesignSpec(ap_source=("q_erb", ch.q_erb), bu_source=("g", ch.q_erb / ch.n_beta)))
    # reverse: a_p from an a_p-only ratio first, then b_u
    a = solve_ap_from_ratio("s_over_n", ch.s_beta / ch.n_beta)
    rev = run_design(DesignSpec(ap_source=("s_over_n", ch.s_beta / ch.n_beta),
                                bu_source=("g", ch.q_erb / ch.n_beta)))
    assert a == pytest.approx(fwd.constants.a_p, rel=1e-10)
    assert rev.constants.a_p == pytest.approx(fwd.constants.a_p, rel=1e-10)
    assert rev.constants.b_u == fwd.constants.b_u


def test_round_trip_random_constants():
    rng = np.random.default_rng(7)
    for _ in range(100):
        c0 = FilterConstants(rng.uniform(0.01, 0.25), 1.0, rng.uniform(1.5, 12.0))
        ch = closed_form(c0)
        res = run_design(DesignSpec(ap_source=("q_erb", ch.q_erb),
                                    bu_source=("g", ratio_value("g", c0))))
        assert res.constants.b_u == pytest.approx(c0.b_u, rel=1e-9)
        assert res.constants.a_p == pytest.approx(c0.a_p, rel=1e-9)


# -- constraints ---------------------------------------------------------------

def _by_label(cons):
    return {c.label: c for c in cons}


def test_constraints_always_include_envelope_and_reference():
    cons = _by_label(bu_constraints())
    assert cons["envelope"].kind == "lower-bound" and cons["envelope"].values == (1.5,)
    assert cons["B_u0"].values == (4.0,)


def test_constraint_examples():
    cons = _by_label(bu_constraints(alpha_range=(1.7, 1.8), g1=1.25, r_range=(0.8, 1.0),
                                    eta_range=(1.0, 2.0)))
    assert cons["alpha"].kind == "lower-bound"
    assert cons["alpha"].values[0] == pytest.approx(3.86, abs=0.01)
    assert cons["B_u1"].kind == "point"
    assert cons["B_u1"].values[0] == pytest.approx(7.2, abs=0.05)
    assert cons["B_u2"].kind == "lower-bound"
    assert cons["B_u2"].values[0] == pytest.approx(2.0, abs=1e-9)


def test_constraint_g2_upper_behind_flag():
    cons = _by_label(bu_constraints(r_range=(0.8, 1.0), eta_range=(1.0, 2.0),
                                    include_g2_upper=True))
    lo, hi = cons["B_u2"].values
    assert cons["B_u2"].kind == "interval" and lo < hi
    assert hi == pytest.approx(solve_bu("g", 0.8).value)


def test_constraint_validation():
    with pytest.raises(ValueError):
        bu_constraints(alpha_range=(1.8, 1.7))
    with pytest.raises(ValueError):
        bu_constraints(r_range=(0.8, 1.0))


def test_raising_g1_lowers_point_estimate():
    pts = [_by_label(bu_constraints(g1=g))["B_u1"].values[0] for g in (1.0, 1.25, 1.5, 1.8)]
    assert all(x > y for x, y in zip(pts, pts[1:]))
