"""Human auditory filterbank constants across characteristic frequency.

Three recipes, all with ``b_p = 1``:

``historical``
    ``b_u = 4`` with the simultaneous-masking ERB (``Q_sim``).
``g1_qsim``
    ``b_u`` from the chinchilla ratio ``g1 = 1.25`` with ``Q_sim``.
``g1_qforw``
    ``b_u`` from ``g1`` with the forward-masking ERB (``Q_forw``).

CF is always in kHz.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import HISTORICAL_BU, solve_ap
from .response import SHARP_REGIME_MAX_AP, FilterConstants

__all__ = ["G1", "B_U1", "RECIPES", "CfGrid", "FilterbankRow", "FilterbankTable",
           "q_sim", "q_forw", "q_forw_in_window", "build_table", "recipe_bu"]

G1 = 1.25
#: Exponent from g1 as published (one decimal); solve_bu(G, G1) gives 7.2114.
B_U1 = 7.2
QFORW_WINDOW_KHZ = (1.0, 8.0)
CF_RANGE_KHZ = (0.02, 20.0)
RECIPES = ("historical", "g1_qsim", "g1_qforw")


def q_sim(cf_khz: float) -> float:
    """ERB quality factor from simultaneous notched-noise masking."""
    cf = float(cf_khz)
    if not cf > 0:
        raise ValueError("CF must be positive")
    return 1e3 / 24.7 * cf / (4.37 * cf + 1.0)


def q_forw(cf_khz: float) -> float:
    """ERB quality factor from forward masking, ``11 CF**0.27``."""
    cf = float(cf_khz)
    if not cf > 0:
        raise ValueError("CF must be positive")
    return 11.0 * cf ** 0.27


def q_forw_in_window(cf_khz: float) -> bool:
    """False when ``q_forw`` is extrapolated beyond the measured 1-8 kHz range."""
    return QFORW_WINDOW_KHZ[0] <= cf_khz <= QFORW_WINDOW_KHZ[1]


@dataclass(frozen=True)
class CfGrid:
    cf_khz: tuple
    spacing: str = "logarithmic"

    def __post_init__(self):
        cf = tuple(float(v) for v in self.cf_khz)
        if not cf:
            raise ValueError("CF grid needs at least one point")
        if any(b <= a for a, b in zip(cf, cf[1:])):
            raise ValueError("CF grid must be strictly increasing")
        if cf[0] < CF_RANGE_KHZ[0] or cf[-1] > CF_RANGE_KHZ[1]:
            raise ValueError(f"CF grid must lie within {CF_RANGE_KHZ} kHz")
        if self.spacing not in ("linear", "logarithmic"):
            raise ValueError("spacing must be 'linear' or 'logarithmic'")
        object.__setattr__(self, "cf_khz", cf)

    @classmethod
    def make(cls, cf_min: float = 0.125, cf_max: float = 16.0, n: int = 40,
             spacing: str = "logarithmic") -> "CfGrid":
        spacing = {"log": "logarithmic", "lin": "linear"}.get(spacing, spacing)
        if n == 1:
            return cls((cf_min,), spacing)
        pts = np.geomspace(cf_min, cf_max, n) if spacing == "logarithmic" \
            else np.linspace(cf_min, cf_max, n)
        return cls(tuple(pts), spacing)


@dataclass(frozen=True)
class FilterbankRow:
    cf_khz: float
    q_erb_source: str
    q_erb: float
    constants: FilterConstants
    flags: tuple = ()


@dataclass(frozen=True)
class FilterbankTable:
    recipe: str
    rows: tuple
    notes: tuple = ()
    cf_unit: str = "kHz"

    @property
    def b_u(self) -> float:
        return self.rows[0].constants.b_u


def recipe_bu(recipe: str) -> float:
    """Exponent used by ``recipe`` (constant across CF)."""
    if recipe == "historical":
        return HISTORICAL_BU
    if recipe in ("g1_qsim", "g1_qforw"):
        return B_U1
    raise ValueError(f"unknown recipe {recipe!r}; expected one of {RECIPES}")


def _normalize_recipe(recipe: str) -> str:
    return str(recipe).strip().lower().replace("-", "_")


def build_table(recipe: str, grid: CfGrid | None = None) -> FilterbankTable:
    """Per-CF constants for ``recipe`` over ``grid`` (default 40 log points, 0.125-16 kHz)."""
    recipe = _normalize_recipe(recipe)
    b_u = recipe_bu(recipe)
    grid = grid or CfGrid.make()
    source, qfun = ("q_forw", q_forw) if recipe == "g1_qforw" else ("q_sim", q_sim)
    notes = []
    if recipe == "g1_qsim":
        notes.append("b_u from g1 paired with simultaneous-masking Q_erb; the two come "
                     "from different paradigms and the pairing is reproduced as published")
    rows = []
    for cf in grid.cf_khz:
        q = qfun(cf)
        a_p = solve_ap("q_erb", q, 1.0, b_u)
        flags = []
        if source == "q_forw" and not q_forw_in_window(cf):
            flags.append("extrapolated")
        if a_p > SHARP_REGIME_MAX_AP:
            flags.append("sharp_regime_degraded")
        rows.append(FilterbankRow(cf, source, q, FilterConstants(a_p, 1.0, b_u), tuple(flags)))
    return FilterbankTable(recipe, tuple(rows), tuple(notes))
