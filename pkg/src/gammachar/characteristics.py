"""Peak-centric filter characteristics.

Closed forms follow from the sharp-filter transfer function
``(s - p)**(-b_u)``; the numeric extractor measures the same quantities on
any sampled :class:`~gammachar.response.FrequencyResponse`, so the two can
be compared cell by cell.
"""

from __future__ import annotations

import enum
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .numerics import gamma_ratio
from .response import (FilterClass, FilterConstants, FrequencyResponse,
                       default_beta_grid, sample_response)

__all__ = [
    "DEFAULT_N_LEVELS",
    "DB_PER_NEPER2",
    "Characteristics",
    "ExtractionError",
    "BandwidthNotBracketedError",
    "ConvexityError",
    "RatioKind",
    "Ratio",
    "closed_form",
    "ratio_value",
    "extract_numeric",
    "numeric_characteristics",
    "relative_error",
    "field_key",
]

DEFAULT_N_LEVELS = (3.0, 10.0, 15.0)
#: 20 / ln(10), converts curvature of ln|H| into dB.
DB_PER_NEPER2 = 20.0 / math.log(10.0)

ERB_TAIL_TOL = 1e-8
PHI_TAIL_FRACTION = 1e-3


class ExtractionError(ArithmeticError):
    """A characteristic cannot be measured on the sampled response."""


class BandwidthNotBracketedError(ExtractionError):
    pass


class ConvexityError(ExtractionError):
    pass


def _fmt_level(n: float) -> str:
    return f"{float(n):g}"


def field_key(name: str) -> str:
    """Canonical field name: ``"Q_10"``, ``"q10"`` -> ``"q_10"``; ``"N_beta"`` -> ``"n_beta"``."""
    key = str(name).strip().lower().replace("-", "_")
    aliases = {"qerb": "q_erb", "q_erb": "q_erb", "sbeta": "s_beta", "s_beta": "s_beta",
               "nbeta": "n_beta", "n_beta": "n_beta", "beta_peak": "beta_peak",
               "betapeak": "beta_peak", "beta_maxn": "beta_max_n", "beta_max_n": "beta_max_n",
               "n_beta_max": "n_beta_max", "phi_accum": "phi_accum", "phiaccum": "phi_accum"}
    if key in aliases:
        return aliases[key]
    m = re.fullmatch(r"q_?(\d+(?:\.\d+)?)", key)
    if m:
        return f"q_{_fmt_level(float(m.group(1)))}"
    raise KeyError(f"unknown characteristic {name!r}")


@dataclass(frozen=True)
class Characteristics:
    """Peak-centric characteristics of one filter.

    ``q_n`` maps the level ``n`` (dB) to the n-dB quality factor. ``n_beta``
    is the group delay (cycles) at ``beta_peak`` and ``n_beta_max`` the
    group delay at ``beta_max_n``. ``failures`` names fields that could not
    be measured; ``flags`` carries caveats such as a truncated phase tail.
    """

    beta_peak: float
    q_n: dict
    q_erb: float
    s_beta: float
    beta_max_n: float
    n_beta: float
    n_beta_max: float
    phi_accum: float
    source: str = "closed-form"
    flags: tuple = ()
    failures: dict = field(default_factory=dict)

    def get(self, name: str) -> float:
        key = field_key(name)
        if key.startswith("q_") and key != "q_erb":
            n = float(key[2:])
            for level, q in self.q_n.items():
                if float(level) == n:
                    return q
            raise KeyError(f"level {n:g} dB not computed")
        return getattr(self, key)

    def as_dict(self) -> dict:
        out = {"beta_peak": self.beta_peak}
        for n, q in sorted(self.q_n.items()):
            out[f"q_{_fmt_level(n)}"] = q
        out.update(q_erb=self.q_erb, s_beta=self.s_beta, beta_max_n=self.beta_max_n,
                   n_beta=self.n_beta, n_beta_max=self.n_beta_max, phi_accum=self.phi_accum)
        return out


# -- closed forms ----------------------------------------------------------

def _q_n(c: FilterConstants, n: float) -> float:
    return c.b_p / (2.0 * c.a_p) / math.sqrt(10.0 ** (n / (10.0 * c.b_u)) - 1.0)


def _erb_gamma_factor(b_u: float) -> float:
    # Gamma(B_u) / Gamma(B_u - 1/2)
    if b_u <= 0.5:
        raise ValueError("Q_erb requires b_u > 1/2")
    return gamma_ratio(b_u, b_u - 0.5)


def closed_form(c: FilterConstants, n_levels=DEFAULT_N_LEVELS) -> Characteristics:
    """Sharp-filter characteristics of the constants ``c``."""
    levels = sorted(float(n) for n in n_levels)
    if any(not 0 < n <= 60 for n in levels):
        raise ValueError("n-dB levels must lie in (0, 60]")
    failures = {}
    try:
        q_erb = c.b_p / (math.sqrt(math.pi) * c.a_p) * _erb_gamma_factor(c.b_u)
    except ValueError as exc:
        q_erb = math.nan
        failures["q_erb"] = str(exc)
    n_beta = c.b_u / (2.0 * math.pi * c.a_p)
    return Characteristics(
        beta_peak=c.b_p,
        q_n={n: _q_n(c, n) for n in levels},
        q_erb=q_erb,
        s_beta=DB_PER_NEPER2 * c.b_u / c.a_p ** 2,
        beta_max_n=c.b_p,
        n_beta=n_beta,
        n_beta_max=n_beta,
        phi_accum=c.b_u / 2.0,
        source="closed-form",
        flags=("q_erb_undefined",) if failures else (),
        failures=failures,
    )


# -- ratios ------------------------------------------------------------------

class RatioKind(enum.Enum):
    ALPHA = "alpha"                  # Q_erb / Q_10
    G = "g"                          # Q_erb / N_beta
    QERB_OVER_QN = "qerb_over_qn"    # Q_erb / Q_n
    ERB_TIMES_N = "erb_times_n"      # ERB_beta * N_beta, cycles
    ERB2_TIMES_S = "erb2_times_s"    # ERB_beta^2 * S_beta, dB
    BWN_TIMES_N = "bwn_times_n"      # BW_n * N_beta, cycles
    BWN2_TIMES_S = "bwn2_times_s"    # BW_n^2 * S_beta, dB
    S_OVER_N = "s_over_n"            # S_beta / N_beta, dB per cycle
    PHI_OVER_N = "phi_over_n"        # phi_accum / N_beta


_NEEDS_LEVEL = {RatioKind.QERB_OVER_QN, RatioKind.BWN_TIMES_N, RatioKind.BWN2_TIMES_S}
_AP_ONLY = {RatioKind.S_OVER_N, RatioKind.PHI_OVER_N}


@dataclass(frozen=True)
class Ratio:
    """A characteristic ratio; ``n`` is the dB level for the BW_n / Q_n families."""

    kind: RatioKind
    n: float | None = None

    def __post_init__(self):
        kind = RatioKind(self.kind) if not isinstance(self.kind, RatioKind) else self.kind
        object.__setattr__(self, "kind", kind)
        if kind in _NEEDS_LEVEL:
            if self.n is None or not self.n > 0:
                raise ValueError(f"{kind.value} needs a positive dB level n")
            object.__setattr__(self, "n", float(self.n))
        elif self.n is not None:
            raise ValueError(f"{kind.value} takes no level")

    @property
    def depends_on_ap_only(self) -> bool:
        return self.kind in _AP_ONLY

    @property
    def name(self) -> str:
        lvl = _fmt_level(self.n) if self.n is not None else ""
        return {
            RatioKind.QERB_OVER_QN: f"qerb_over_q{lvl}",
            RatioKind.BWN_TIMES_N: f"bw{lvl}_times_n",
            RatioKind.BWN2_TIMES_S: f"bw{lvl}sq_times_s",
            RatioKind.ERB2_TIMES_S: "erbsq_times_s",
        }.get(self.kind, self.kind.value)

    @classmethod
    def parse(cls, text) -> "Ratio":
        """Parse names such as ``g``, ``alpha``, ``qerb_over_q3``, ``bw10_times_n``."""
        if isinstance(text, Ratio):
            return text
        if isinstance(text, RatioKind):
            return cls(text)
        key = str(text).strip().lower()
        simple = {"alpha": RatioKind.ALPHA, "g": RatioKind.G,
                  "erb_times_n": RatioKind.ERB_TIMES_N,
                  "erbsq_times_s": RatioKind.ERB2_TIMES_S,
                  "erb2_times_s": RatioKind.ERB2_TIMES_S,
                  "s_over_n": RatioKind.S_OVER_N, "phi_over_n": RatioKind.PHI_OVER_N}
        if key in simple:
            return cls(simple[key])
        for pattern, kind in ((r"qerb_over_q(\d+(?:\.\d+)?)", RatioKind.QERB_OVER_QN),
                              (r"bw(\d+(?:\.\d+)?)_times_n", RatioKind.BWN_TIMES_N),
                              (r"bw(\d+(?:\.\d+)?)(?:sq|2)_times_s", RatioKind.BWN2_TIMES_S)):
            m = re.fullmatch(pattern, key)
            if m:
                return cls(kind, float(m.group(1)))
        raise ValueError(f"unknown ratio {text!r}")


def ratio_value(ratio, c: FilterConstants) -> float:
    """Sharp-filter value of ``ratio`` at constants ``c``."""
    r = Ratio.parse(ratio)
    B = c.b_u
    k = r.kind
    if k is RatioKind.S_OVER_N:
        return 2.0 * math.pi * DB_PER_NEPER2 / c.a_p
    if k is RatioKind.PHI_OVER_N:
        return math.pi * c.a_p
    if k in (RatioKind.BWN_TIMES_N, RatioKind.BWN2_TIMES_S):
        x = 10.0 ** (r.n / (10.0 * B)) - 1.0
        if k is RatioKind.BWN_TIMES_N:
            return B * math.sqrt(x) / math.pi
        return 4.0 * DB_PER_NEPER2 * B * x
    gr = _erb_gamma_factor(B)
    if k is RatioKind.ALPHA:
        return 2.0 / math.sqrt(math.pi) * gr * math.sqrt(10.0 ** (1.0 / B) - 1.0)
    if k is RatioKind.QERB_OVER_QN:
        return 2.0 / math.sqrt(math.pi) * gr * math.sqrt(10.0 ** (r.n / (10.0 * B)) - 1.0)
    if k is RatioKind.G:
        return 2.0 * math.sqrt(math.pi) * c.b_p * gr / B
    if k is RatioKind.ERB_TIMES_N:
        return B / (2.0 * math.sqrt(math.pi) * gr)
    if k is RatioKind.ERB2_TIMES_S:
        return math.pi * DB_PER_NEPER2 * B / gr ** 2
    raise ValueError(f"unhandled ratio {r}")  # pragma: no cover


# -- numeric extraction --------------------------------------------------------

def _fd_weights(x: np.ndarray, x0: float, order: int) -> np.ndarray:
    # weights w with sum w_j f(x_j) ~ f^(order)(x0) on arbitrary nodes
    d = x - x0
    m = len(x)
    V = np.vander(d, m, increasing=True).T
    rhs = np.zeros(m)
    rhs[order] = math.factorial(order)
    return np.linalg.solve(V, rhs)


def _stencil_derivative(x, y, i, order):
    # five-point derivative at node i (shifted inward near the edges)
    j = min(max(i - 2, 0), len(x) - 5)
    xs = x[j:j + 5]
    scale = xs[-1] - xs[0]
    w = _fd_weights((xs - x[i]) / scale, 0.0, order)
    return float(w @ y[j:j + 5]) / scale ** order


def _derivative_at(x, y, x0, order):
    # derivative at three nodes around x0, then quadratic interpolation to x0
    i = int(np.clip(np.searchsorted(x, x0), 1, len(x) - 2))
    if abs(x[i - 1] - x0) < abs(x[i] - x0):
        i -= 1
    i = int(np.clip(i, 1, len(x) - 2))
    nodes = x[i - 1:i + 2]
    vals = np.array([_stencil_derivative(x, y, k, order) for k in (i - 1, i, i + 1)])
    return _lagrange3(nodes, vals, x0)


def _lagrange3(xs, ys, x0):
    (x1, x2, x3), (y1, y2, y3) = xs, ys
    return (y1 * (x0 - x2) * (x0 - x3) / ((x1 - x2) * (x1 - x3))
            + y2 * (x0 - x1) * (x0 - x3) / ((x2 - x1) * (x2 - x3))
            + y3 * (x0 - x1) * (x0 - x2) / ((x3 - x1) * (x3 - x2)))


def _parabolic_peak(x, y, k):
    # vertex of the parabola through (x[k-1..k+1], y[k-1..k+1])
    x1, x2, x3 = x[k - 1:k + 2]
    y1, y2, y3 = y[k - 1:k + 2]
    d1, d2 = x1 - x2, x3 - x2
    denom = d1 * d2 * (d1 - d2)
    a = ((y1 - y2) * d2 - (y3 - y2) * d1) / denom
    b = ((y3 - y2) * d1 * d1 - (y1 - y2) * d2 * d2) / denom
    if a >= 0:
        return float(x2), float(y2)
    dx = -b / (2.0 * a)
    return float(x2 + dx), float(y2 + b * dx + a * dx * dx)


def _crossing(beta, mag, k, level, step):
    i = k
    while 0 <= i + step < len(beta):
        j = i + step
        if mag[j] <= level:
            t = (level - mag[i]) / (mag[j] - mag[i])
            return beta[i] + t * (beta[j] - beta[i])
        i = j
    return None


def _trapezoid(y, x):
    return float(np.sum(0.5 * (y[1:] + y[:-1]) * np.diff(x)))


def extract_numeric(fr: FrequencyResponse, n_levels=DEFAULT_N_LEVELS,
                    strict: bool = False) -> Characteristics:
    """Measure the characteristics of a sampled response.

    Unmeasurable fields are set to NaN and listed in ``failures`` (or, with
    ``strict=True``, raised). A negative convexity is kept as measured and
    reported in ``failures``.
    """
    beta = np.asarray(fr.beta, dtype=float)
    mag = np.asarray(fr.mag_db, dtype=float)
    phase = np.asarray(fr.phase_cycles, dtype=float)
    k = int(np.argmax(mag))
    if k < 3 or k > len(beta) - 4:
        raise ExtractionError("magnitude peak lies at the grid boundary")
    failures: dict[str, str] = {}
    flags: list[str] = []

    def fail(key, exc):
        if strict:
            raise exc
        failures[key] = str(exc)

    beta_peak, peak_db = _parabolic_peak(beta, mag, k)

    q_n = {}
    for n in sorted(float(v) for v in n_levels):
        level = peak_db - n
        lo = _crossing(beta, mag, k, level, -1)
        hi = _crossing(beta, mag, k, level, +1)
        if lo is None or hi is None:
            q_n[n] = math.nan
            side = "low" if lo is None else "high"
            fail(f"q_{_fmt_level(n)}", BandwidthNotBracketedError(
                f"response does not fall {n:g} dB on the {side} side within the grid"))
        else:
            q_n[n] = beta_peak / (hi - lo)

    power = 10.0 ** (mag / 10.0)
    q_erb = beta_peak * 10.0 ** (peak_db / 10.0) / _trapezoid(power, beta)
    if power[0] > ERB_TAIL_TOL:
        flags.append("erb_tail_low")
    if power[-1] > ERB_TAIL_TOL:
        flags.append("erb_tail_high")

    s_beta = -_derivative_at(beta, mag, beta_peak, 2)
    if not s_beta >= 0:
        fail("s_beta", ConvexityError(f"peak is not concave (S_beta = {s_beta:g})"))

    n_beta = -_derivative_at(beta, phase, beta_peak, 1)
    gd = -np.gradient(phase, beta)
    lo_i, hi_i = 3, len(beta) - 4
    j = lo_i + int(np.argmax(gd[lo_i:hi_i + 1]))
    j = int(np.clip(j, lo_i + 1, hi_i - 1))
    local = np.array([-_stencil_derivative(beta, phase, m, 1) for m in (j - 1, j, j + 1)])
    beta_max_n, n_beta_max = _parabolic_peak(beta[j - 1:j + 2], local, 1)

    phi_accum = float(phase[0] - phase[-1])
    if max(gd[0], gd[-1]) > PHI_TAIL_FRACTION * n_beta_max:
        flags.append("phi_accum_lower_bound")

    cls = fr.filter_class.value if fr.filter_class is not None else "unknown"
    return Characteristics(
        beta_peak=beta_peak, q_n=q_n, q_erb=q_erb, s_beta=s_beta,
        beta_max_n=beta_max_n, n_beta=n_beta, n_beta_max=n_beta_max,
        phi_accum=phi_accum, source=f"numeric:{cls}", flags=tuple(flags),
        failures=failures)


def _widened_grid(c: FilterConstants, grid: np.ndarray, new_hi: float) -> np.ndarray:
    ext = np.geomspace(grid[-1], new_hi, 257)[1:]
    return np.concatenate([grid, ext])


def numeric_characteristics(filter_class, c: FilterConstants, n_levels=DEFAULT_N_LEVELS,
                            beta_grid=None, widen: bool = True, max_hi: float = 64.0,
                            strict: bool = False) -> Characteristics:
    """Sample ``filter_class`` and extract its characteristics.

    When the normalised power at the upper grid end is above 1e-8 the grid
    is extended (doubling, up to ``max_hi * b_p``) so the ERB integral is not
    truncated. P-GTF grids are never widened past ``4 b_p``.
    """
    cls = FilterClass.parse(filter_class)
    grid = default_beta_grid(c) if beta_grid is None else np.asarray(beta_grid, dtype=float)
    fr = sample_response(cls, c, grid)
    if widen and cls is not FilterClass.PGTF:
        hi = grid[-1]
        while 10.0 ** (fr.mag_db[-1] / 10.0) > ERB_TAIL_TOL and 2.0 * hi <= max_hi * c.b_p:
            hi *= 2.0
            grid = _widened_grid(c, grid, hi)
            fr = sample_response(cls, c, grid)
    return extract_numeric(fr, n_levels, strict=strict)


def relative_error(analytic: Characteristics, numeric: Characteristics, name: str) -> float:
    """Signed relative error ``1 - numeric / analytic`` of one characteristic."""
    try:
        a = analytic.get(name)
        b = numeric.get(name)
    except (KeyError, AttributeError) as exc:
        raise ValueError(f"undefined characteristic {name!r}") from exc
    if not (math.isfinite(a) and math.isfinite(b)) or a == 0:
        raise ValueError(f"relative error of {name!r} undefined for {b!r} / {a!r}")
    return 1.0 - b / a
