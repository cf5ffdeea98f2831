"""Characteristics-based estimation of filter constants.

The pipeline is sequential: ``b_p`` from the peak frequency (or 1), then
``b_u`` by solving a ratio that depends on the exponent alone, then ``a_p``
from a single characteristic, which is linear in ``1/a_p``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .characteristics import (DB_PER_NEPER2, Ratio, RatioKind, field_key,
                              ratio_value)
from .numerics import RootBracket, brent_root, derivative, gamma_ratio
from .response import SHARP_REGIME_MAX_AP, FilterConstants

__all__ = [
    "BU_BRACKET",
    "ENVELOPE_MIN_BU",
    "SENSITIVITY_LIMIT",
    "UnattainableError",
    "DesignError",
    "BuEstimate",
    "BuConstraint",
    "DesignSpec",
    "DesignResult",
    "estimate_bp",
    "solve_bu",
    "solve_ap",
    "solve_ap_from_ratio",
    "run_design",
    "bu_constraints",
]

BU_BRACKET = (1.001, 50.0)
ENVELOPE_MIN_BU = 1.5
SENSITIVITY_LIMIT = 50.0
HISTORICAL_BU = 4.0

_SCAN_POINTS = 401


class UnattainableError(ValueError):
    """The requested characteristic value cannot be reached on the admissible branch."""


class DesignError(ValueError):
    """The design specification is rejected."""


@dataclass(frozen=True)
class BuEstimate:
    """Solution of a ratio equation for the exponent.

    ``kind`` is ``"point"`` or ``"lower-bound"``; for a lower bound ``value``
    is the smallest admissible exponent.
    """

    value: float
    kind: str = "point"
    sensitivity: float = math.nan      # dB_u / d(ratio) at the root
    warnings: tuple = ()
    other_roots: tuple = ()

    @property
    def is_bound(self) -> bool:
        return self.kind == "lower-bound"


def estimate_bp(beta_peak: float | None = None) -> float:
    """``b_p`` equals the normalised peak frequency, or 1 when none is given."""
    if beta_peak is None:
        return 1.0
    beta_peak = float(beta_peak)
    if not beta_peak > 0:
        raise ValueError("beta_peak must be positive")
    return beta_peak


def _ratio_of_bu(ratio: Ratio, b_p: float):
    def f(b_u: float) -> float:
        return ratio_value(ratio, FilterConstants(1.0, b_p, b_u))
    return f


def solve_bu(ratio, observed: float, b_p: float = 1.0,
             bracket: tuple = BU_BRACKET, tol: float = 1e-13) -> BuEstimate:
    """Exponent ``b_u`` at which ``ratio`` takes the ``observed`` value.

    The ratio is scanned over ``bracket`` and every sign change refined
    with Brent's method; the largest root is returned (the branch that
    continues to large exponents). Alpha values at or below its value at
    the top of the bracket give a lower bound instead of a point, since
    alpha decreases towards an asymptote and never reaches such values.
    """
    r = Ratio.parse(ratio)
    if r.depends_on_ap_only:
        raise ValueError(f"{r.name} does not depend on b_u")
    observed = float(observed)
    f = _ratio_of_bu(r, b_p)
    lo, hi = bracket
    grid = np.geomspace(lo, hi, _SCAN_POINTS)
    vals = np.array([f(b) - observed for b in grid])
    warnings: list[str] = []
    if r.kind is RatioKind.ALPHA:
        warnings.append("sensitivity: alpha varies slowly with b_u; treat the result as a bound")

    roots = []
    for k in range(len(grid) - 1):
        if vals[k] == 0.0:
            roots.append(float(grid[k]))
        elif vals[k] * vals[k + 1] < 0.0:
            roots.append(brent_root(lambda b: f(b) - observed,
                                    RootBracket(grid[k], grid[k + 1], tol)))
    if vals[-1] == 0.0:
        roots.append(float(grid[-1]))

    if not roots:
        if r.kind is RatioKind.ALPHA and observed <= f(hi):
            return BuEstimate(hi, "lower-bound", warnings=tuple(warnings + [
                f"alpha = {observed:g} is not attained for b_u <= {hi:g}; "
                "only a lower bound follows"]))
        span = (float(np.min(vals) + observed), float(np.max(vals) + observed))
        raise UnattainableError(
            f"{r.name} = {observed:g} is outside the attainable range "
            f"[{span[0]:.6g}, {span[1]:.6g}] for b_u in [{lo:g}, {hi:g}]")

    root = max(roots)
    others = tuple(x for x in roots if x != root)
    if others:
        warnings.append("branch: other roots at b_u = "
                        + ", ".join(f"{x:.6g}" for x in others) + " rejected")
    h = min(1e-4 * root, 0.25 * (root - 1.0)) if root > 1.0 else 1e-6
    slope = derivative(f, root, 1, h)
    sens = 1.0 / slope if slope != 0 else math.inf
    if abs(sens) > SENSITIVITY_LIMIT:
        warnings.append(f"sensitivity: |d b_u / d {r.name}| = {abs(sens):.3g} "
                        f"exceeds {SENSITIVITY_LIMIT:g}")
    if root < ENVELOPE_MIN_BU:
        warnings.append(f"envelope: b_u = {root:.6g} < 3/2 gives an impulse response "
                        "without a growth phase")
    return BuEstimate(root, "point", sens, tuple(warnings), others)


def solve_ap(char_name: str, observed: float, b_p: float, b_u: float) -> float:
    """Invert one closed-form characteristic for ``a_p``."""
    observed = float(observed)
    if not observed > 0:
        raise ValueError("observed characteristic must be positive")
    key = field_key(char_name)
    if key == "q_erb":
        if b_u <= 0.5:
            raise ValueError("Q_erb requires b_u > 1/2")
        return b_p * gamma_ratio(b_u, b_u - 0.5) / (math.sqrt(math.pi) * observed)
    if key == "n_beta":
        return b_u / (2.0 * math.pi * observed)
    if key == "s_beta":
        return math.sqrt(DB_PER_NEPER2 * b_u / observed)
    if key.startswith("q_"):
        n = float(key[2:])
        return b_p / (2.0 * observed * math.sqrt(10.0 ** (n / (10.0 * b_u)) - 1.0))
    raise ValueError(f"a_p cannot be estimated from {char_name!r}")


def solve_ap_from_ratio(ratio, observed: float) -> float:
    """``a_p`` from a ratio that depends on the pole alone (S/N or phi/N)."""
    r = Ratio.parse(ratio)
    observed = float(observed)
    if not observed > 0:
        raise ValueError("observed ratio must be positive")
    if r.kind is RatioKind.S_OVER_N:
        return 2.0 * math.pi * DB_PER_NEPER2 / observed
    if r.kind is RatioKind.PHI_OVER_N:
        return observed / math.pi
    raise ValueError(f"{r.name} is not a function of a_p alone")


@dataclass
class DesignSpec:
    """Inputs of :func:`run_design`.

    ``ap_source`` is ``(name, value)`` where name is a characteristic
    (``q_erb``, ``q_<n>``, ``s_beta``, ``n_beta``) or an a_p-only ratio.
    Exactly one of ``bu_source`` (``(ratio, value)``) and ``b_u`` is given.
    """

    ap_source: tuple
    bu_source: tuple | None = None
    b_u: float | None = None
    beta_peak: float | None = None
    allow_alpha: bool = False

    def __post_init__(self):
        if (self.bu_source is None) == (self.b_u is None):
            raise DesignError("give exactly one of bu_source and a fixed b_u")
        if self.bu_source is not None:
            ratio = Ratio.parse(self.bu_source[0])
            if ratio.depends_on_ap_only:
                raise DesignError(f"{ratio.name} does not determine b_u")
            if ratio.kind is RatioKind.ALPHA and not self.allow_alpha:
                raise DesignError(
                    "alpha = Q_erb/Q_10 is too insensitive to b_u for a reliable estimate; "
                    "pass allow_alpha=True to use it anyway")
            self.bu_source = (ratio, float(self.bu_source[1]))
        elif not float(self.b_u) > 0:
            raise DesignError("fixed b_u must be positive")
        name, value = self.ap_source
        if not float(value) > 0:
            raise DesignError("ap_source value must be positive")


@dataclass(frozen=True)
class DesignResult:
    constants: FilterConstants
    diagnostics: tuple = ()
    bu_estimate: BuEstimate | None = None


def _ap_ratio(name):
    try:
        r = Ratio.parse(name)
    except ValueError:
        return None
    return r if r.depends_on_ap_only else None


def run_design(spec: DesignSpec) -> DesignResult:
    """Estimate ``(a_p, b_p, b_u)`` in the order b_p, b_u, a_p."""
    diags: list[str] = []
    b_p = estimate_bp(spec.beta_peak)

    est = None
    if spec.bu_source is not None:
        ratio, value = spec.bu_source
        est = solve_bu(ratio, value, b_p)
        if est.is_bound:
            raise UnattainableError(
                f"{ratio.name} = {value:g} only bounds b_u from below (b_u >= {est.value:g})")
        b_u = est.value
        diags.extend(est.warnings)
    else:
        b_u = float(spec.b_u)
        if b_u < ENVELOPE_MIN_BU:
            diags.append(f"envelope: b_u = {b_u:g} < 3/2 gives an impulse response "
                         "without a growth phase")

    name, value = spec.ap_source
    ap_ratio = _ap_ratio(name)
    if ap_ratio is not None:
        a_p = solve_ap_from_ratio(ap_ratio, value)
    else:
        a_p = solve_ap(name, value, b_p, b_u)
        key = field_key(name)
        alpha_pair = est is not None and spec.bu_source[0].kind is RatioKind.ALPHA
        if alpha_pair and key in ("q_erb", "q_10"):
            diags.append("advisory: Q_erb with Q_10 (or either with alpha) is a weakly "
                         "identifying set; avoid it for estimating constants")
    if a_p > SHARP_REGIME_MAX_AP:
        diags.append(f"regime: a_p = {a_p:.6g} > {SHARP_REGIME_MAX_AP:g}; the sharp-filter "
                     "approximation is degraded")
    return DesignResult(FilterConstants(a_p, b_p, b_u), tuple(diags), est)


@dataclass(frozen=True)
class BuConstraint:
    """A condition on the exponent: ``lower-bound``, ``point`` or ``interval``."""

    label: str
    kind: str
    values: tuple
    provenance: str

    def __post_init__(self):
        if self.kind not in ("lower-bound", "point", "interval"):
            raise ValueError(f"bad constraint kind {self.kind!r}")
        if self.kind == "interval" and not self.values[0] < self.values[1]:
            raise ValueError("interval constraint requires lo < hi")


def _interval(name, iv):
    if iv is None:
        return None
    lo, hi = (float(v) for v in iv)
    if not lo <= hi:
        raise ValueError(f"{name} interval must be ordered, got [{lo}, {hi}]")
    return lo, hi


def bu_constraints(alpha_range=None, g1=None, r_range=None, eta_range=None,
                   b_p: float = 1.0, include_g2_upper: bool = False) -> list:
    """Constraints on ``b_u`` from the impulse-response envelope and reported ratios."""
    alpha_range = _interval("alpha", alpha_range)
    r_range = _interval("r", r_range)
    eta_range = _interval("eta", eta_range)
    if (r_range is None) != (eta_range is None):
        raise ValueError("r and eta ranges must be given together")

    out = [BuConstraint("envelope", "lower-bound", (ENVELOPE_MIN_BU,),
                        "impulse-response envelope must grow before decaying")]
    if alpha_range is not None:
        est = solve_bu(RatioKind.ALPHA, alpha_range[1], b_p)
        out.append(BuConstraint(
            "alpha", "lower-bound", (est.value,),
            f"alpha in [{alpha_range[0]:g}, {alpha_range[1]:g}]; upper alpha gives the bound, "
            "lower alpha is not informative"))
    if g1 is not None:
        est = solve_bu(RatioKind.G, g1, b_p)
        out.append(BuConstraint("B_u1", "point", (est.value,), f"g = g1 = {float(g1):g}"))
    if r_range is not None:
        g_lo, g_hi = r_range[0] * eta_range[0], r_range[1] * eta_range[1]
        upper = solve_bu(RatioKind.G, g_lo, b_p)
        lower = solve_bu(RatioKind.G, g_hi, b_p)
        prov = f"g2 = r*eta in [{g_lo:g}, {g_hi:g}]"
        if include_g2_upper:
            out.append(BuConstraint("B_u2", "interval", (lower.value, upper.value),
                                    prov + "; upper end is highly sensitive to g"))
        else:
            out.append(BuConstraint("B_u2", "lower-bound", (lower.value,), prov))
    out.append(BuConstraint("B_u0", "point", (HISTORICAL_BU,),
                            "historical value from simultaneous-masking fits (reference)"))
    return out
