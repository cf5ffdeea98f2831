import csv
import io
import math

import mpmath
import numpy as np
import pytest

from gammachar.characteristics import closed_form, numeric_characteristics, relative_error
from gammachar.errmap import default_axes, sweep, to_long_rows, write_csv
from gammachar.response import FilterConstants, default_beta_grid

SMALL_AP = np.array([0.02, 0.1, 0.25])
SMALL_BU = np.array([1.5, 4.0, 12.0])


@pytest.fixture(scope="module")
def small_gef():
    return sweep("gef", SMALL_AP, SMALL_BU)


def test_grid_shape_and_status(small_gef):
    g = small_gef
    assert g.b_p == 1.0 and g.filter_class.value == "gef"
    for name in g.characteristics:
        assert g.cells[name].shape == (3, 3)
        for i in range(3):
            for j in range(3):
                v, st = g.cells[name][i, j], g.status[name][i][j]
                assert (st == "ok") == math.isfinite(v)
                assert st == "ok" or st.startswith("failed")


def test_cells_match_direct_evaluation(small_gef):
    c = FilterConstants(0.1, 1.0, 4.0)
    eps = relative_error(closed_form(c), numeric_characteristics("gef", c), "q_erb")
    assert small_gef.cells["q_erb"][1, 1] == eps


def test_default_axes():
    ap, bu = default_axes()
    assert len(ap) == len(bu) == 24
    assert ap[0] == 0.02 and ap[-1] == 0.25 and bu[0] == 1.5 and bu[-1] == 12.0


def test_sweep_preconditions():
    with pytest.raises(ValueError):
        sweep("sharp", SMALL_AP, SMALL_BU)
    with pytest.raises(ValueError):
        sweep("gef", [0.005, 0.1], SMALL_BU)
    with pytest.raises(ValueError):
        sweep("gef", SMALL_AP, [1.0, 4.0])


def test_failures_recorded_in_place():
    g = sweep("gef", [0.25], [1.5], ("q_erb", "q_40"))
    assert math.isfinite(g.cells["q_erb"][0, 0])
    assert math.isnan(g.cells["q_40"][0, 0])
    assert g.status["q_40"][0][0].startswith("failed")
    assert g.failure_fraction() == 0.5


def test_determinism_and_parallel_assembly(small_gef):
    again = sweep("gef", SMALL_AP, SMALL_BU)
    par = sweep("gef", SMALL_AP, SMALL_BU, workers=2)
    for name in small_gef.characteristics:
        for other in (again, par):
            assert np.array_equal(small_gef.cells[name], other.cells[name], equal_nan=True)
            assert small_gef.status[name] == other.status[name]


def test_csv_long_format(small_gef):
    text = write_csv(small_gef)
    assert "\r" not in text
    rows = list(csv.reader(io.StringIO(text)))
    assert rows[0] == ["class", "characteristic", "A_p", "B_u", "epsilon", "status"]
    assert len(rows) == 1 + 9 * len(small_gef.characteristics)
    long = list(to_long_rows(small_gef))
    for r, l in zip(rows[1:], long):
        assert float(r[4]) == l[4] or (math.isnan(l[4]) and r[4] == "nan")
        assert float(r[2]) == l[2] and float(r[3]) == l[3]
    buf = io.StringIO()
    assert write_csv(small_gef, buf) is None and buf.getvalue() == text


def test_pgtf_cells():
    g = sweep("pgtf", [0.05], [2.0, 4.0], ("q_erb", "n_beta"))
    assert np.all(np.isfinite(g.cells["q_erb"]))
    assert abs(g.cells["q_erb"][0, 1]) < 1e-4


# -- sharp self-test -----------------------------------------------------------

@pytest.fixture(scope="module")
def sharp_grid():
    return sweep("sharp", *default_axes(), allow_sharp=True)


def test_sharp_self_test_where_negative_frequency_mass_is_negligible(sharp_grid):
    bu = sharp_grid.bu_axis
    for name in sharp_grid.characteristics:
        m = np.abs(sharp_grid.cells[name])
        assert not np.any(np.isnan(m))
        cols = bu >= 2.4 if name == "q_erb" else bu >= 0
        assert np.max(m[:, cols]) <= 1e-3, name


@pytest.mark.xfail(strict=True, reason="closed-form Q_erb counts |H|^2 at beta < 0; "
                   "broad low-exponent cells exceed 1e-3")
def test_sharp_self_test_every_cell(sharp_grid):
    assert np.max(np.abs(sharp_grid.cells["q_erb"])) <= 1e-3


@pytest.mark.parametrize("a,B", [(0.25, 1.5), (0.1, 1.5), (0.25, 1.96)])
def test_sharp_erb_excess_is_out_of_grid_mass(a, B):
    c = FilterConstants(a, 1.0, B)
    grid = default_beta_grid(c, hi=8.0)
    nu = numeric_characteristics("sharp", c, beta_grid=grid, widen=False)
    eps = relative_error(closed_form(c), nu, "q_erb")

    def p(x):
        return (a * a + (x - 1) ** 2) ** -B

    inside = mpmath.quad(p, [grid[0], 1, grid[-1]])
    whole = mpmath.quad(p, [-mpmath.inf, 1, mpmath.inf])
    expected = float(1 - whole / inside)
    assert expected < -1e-3
    assert eps == pytest.approx(expected, abs=1e-5)


# -- ratio univariateness --------------------------------------------------------

def _numeric_g_spread(B):
    gs = []
    for a in np.linspace(0.01, 0.1, 10):
        nu = numeric_characteristics("gef", FilterConstants(a, 1.0, B))
        gs.append(nu.q_erb / nu.n_beta)
    gs = np.array(gs)
    return np.ptp(gs) / gs.mean()


@pytest.mark.parametrize("B", [2.5, 4.0, 7.2, 12.0])
def test_numeric_g_nearly_independent_of_ap(B):
    assert _numeric_g_spread(B) < 0.02


@pytest.mark.xfail(strict=True, reason="numeric g varies ~3% with a_p at b_u = 1.5")
def test_numeric_g_nearly_independent_of_ap_low_exponent():
    assert _numeric_g_spread(1.5) < 0.02
