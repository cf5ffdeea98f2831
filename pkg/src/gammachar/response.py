"""Transfer functions, impulse responses and sampled frequency responses.

Frequencies are normalised, ``beta = f / CF``, and the complex frequency is
``s = i*beta``. Time is scaled, ``t~ = 2*pi*CF*t``. All transfer functions
are defined up to a gain; :func:`sample_response` peak-normalises the
magnitude and references the unwrapped phase to zero at the first sample.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import complex_pow, complex_pow_array

__all__ = [
    "SHARP_REGIME_MAX_AP",
    "FilterConstants",
    "FilterClass",
    "FrequencyResponse",
    "ImpulseResponse",
    "WindowTooShortError",
    "eval_sharp",
    "eval_gef_p",
    "eval_v",
    "impulse_pgtf",
    "pgtf_time_grid",
    "pgtf_frequency_response",
    "default_beta_grid",
    "normalize_response",
    "sample_response",
    "peak_beta_v",
]

#: Above this pole real part the sharp-filter approximation is flagged as degraded.
SHARP_REGIME_MAX_AP = 0.25


class WindowTooShortError(ArithmeticError):
    """The P-GTF envelope cannot be truncated within the sample cap."""


@dataclass(frozen=True)
class FilterConstants:
    """Pole real-part magnitude ``a_p``, pole imaginary part ``b_p`` and exponent ``b_u``.

    The repeated pole is ``p = -a_p + i*b_p``.
    """

    a_p: float
    b_p: float
    b_u: float

    def __post_init__(self):
        for name in ("a_p", "b_p", "b_u"):
            v = getattr(self, name)
            try:
                v = float(v)
            except (TypeError, ValueError):
                raise ValueError(f"{name} must be a number, got {v!r}") from None
            if not (math.isfinite(v) and v > 0):
                raise ValueError(f"{name} must be a finite positive number, got {v!r}")
            object.__setattr__(self, name, v)

    @property
    def pole(self) -> complex:
        return complex(-self.a_p, self.b_p)

    @property
    def in_sharp_regime(self) -> bool:
        return self.a_p <= SHARP_REGIME_MAX_AP


class FilterClass(enum.Enum):
    SHARP = "sharp"
    GEF_P = "gef"
    V = "v"
    PGTF = "pgtf"

    @classmethod
    def parse(cls, name) -> "FilterClass":
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "").replace("_", "")
        aliases = {"sharp": cls.SHARP, "gef": cls.GEF_P, "gefp": cls.GEF_P,
                   "p": cls.GEF_P, "v": cls.V, "pgtf": cls.PGTF, "gtf": cls.PGTF}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown filter class {name!r}") from None


def _freeze(a) -> np.ndarray:
    a = np.array(a, copy=True)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class FrequencyResponse:
    """Sampled, normalised frequency response.

    ``value`` is the complex response divided by its magnitude at the grid
    maximum, ``mag_db`` peaks at exactly 0, and ``phase_cycles`` is the
    unwrapped phase in cycles with ``phase_cycles[0] == 0``.
    """

    beta: np.ndarray
    value: np.ndarray
    mag_db: np.ndarray
    phase_cycles: np.ndarray
    filter_class: FilterClass | None = None
    constants: FilterConstants | None = None

    def __post_init__(self):
        n = len(self.beta)
        if n < 3 or not (len(self.value) == len(self.mag_db) == len(self.phase_cycles) == n):
            raise ValueError("response arrays must have equal length >= 3")
        for name in ("beta", "value", "mag_db", "phase_cycles"):
            object.__setattr__(self, name, _freeze(getattr(self, name)))

    @property
    def peak_index(self) -> int:
        return int(np.argmax(self.mag_db))


@dataclass(frozen=True)
class ImpulseResponse:
    t_tilde: np.ndarray
    value: np.ndarray

    def __post_init__(self):
        if len(self.t_tilde) != len(self.value):
            raise ValueError("t_tilde and value must have equal length")
        if len(self.t_tilde) and self.t_tilde[0] != 0:
            raise ValueError("t_tilde must start at 0")
        object.__setattr__(self, "t_tilde", _freeze(self.t_tilde))
        object.__setattr__(self, "value", _freeze(self.value))


# -- transfer functions ------------------------------------------------------

def _s(beta):
    return 1j * np.asarray(beta, dtype=float)


def eval_sharp(c: FilterConstants, beta):
    """``(i*beta - p)**(-b_u)``; scalar in, scalar out."""
    if np.ndim(beta) == 0:
        return complex_pow(1j * float(beta) - c.pole, -c.b_u)
    return complex_pow_array(_s(beta) - c.pole, -c.b_u)


def eval_gef_p(c: FilterConstants, beta):
    """Pole-pair (GEF / P) response ``((s - p)(s - conj(p)))**(-b_u)``."""
    p = c.pole
    if np.ndim(beta) == 0:
        s = 1j * float(beta)
        return complex_pow((s - p) * (s - p.conjugate()), -c.b_u)
    s = _s(beta)
    return complex_pow_array((s - p) * (s - p.conjugate()), -c.b_u)


def eval_v(c: FilterConstants, beta):
    """V response: the GEF/P response times a real zero at ``-a_p``."""
    if np.ndim(beta) == 0:
        return (1j * float(beta) + c.a_p) * eval_gef_p(c, beta)
    return (_s(beta) + c.a_p) * eval_gef_p(c, beta)


# -- P-GTF -------------------------------------------------------------------

def impulse_pgtf(c: FilterConstants, t_grid) -> ImpulseResponse:
    """Cosine-form impulse response ``exp(-a t) t**(b_u-1) cos(b_p t - b_u pi/2)``.

    Identical to a classical gammatone with ``f_c = b_p CF``, ``n = b_u``,
    ``b = a_p CF`` and phase ``-b_u pi/2``.
    """
    t = np.asarray(t_grid, dtype=float)
    if t.ndim != 1 or len(t) == 0 or t[0] != 0 or np.any(np.diff(t) <= 0):
        raise ValueError("t_grid must be increasing and start at 0")
    with np.errstate(divide="ignore"):
        env = np.exp(-c.a_p * t) * t ** (c.b_u - 1.0)
    if c.b_u == 1.0:
        env[0] = 1.0
    return ImpulseResponse(t, env * np.cos(c.b_p * t - c.b_u * np.pi / 2.0))


def pgtf_time_grid(c: FilterConstants, tail_tol: float = 1e-10,
                   max_samples: int = 2_000_000) -> np.ndarray:
    """Uniform scaled-time grid for the P-GTF Fourier integral.

    Step ``min(2 pi / (40 b_p), 0.05 / a_p)``. The horizon starts at
    ``(b_u - 1)/a_p + 25/a_p`` and grows by ``5/a_p`` until the envelope
    has fallen below ``tail_tol`` of its maximum.
    """
    if c.b_u < 1.0:
        raise ValueError("P-GTF requires b_u >= 1 (integrable, bounded envelope)")
    a, n1 = c.a_p, c.b_u - 1.0
    dt = min(2.0 * math.pi / (40.0 * c.b_p), 0.05 / a)
    t_peak = n1 / a

    def log_env(t):
        return -a * t + (n1 * math.log(t) if n1 > 0 else 0.0)

    log_max = log_env(t_peak) if n1 > 0 else 0.0
    horizon = t_peak + 25.0 / a
    limit = math.log(tail_tol)
    while log_env(horizon) - log_max > limit:
        horizon += 5.0 / a
        if horizon / dt > max_samples:
            raise WindowTooShortError(
                f"envelope tail above {tail_tol:g} within {max_samples} samples")
    n = int(math.ceil(horizon / dt))
    if n + 1 > max_samples:
        raise WindowTooShortError(f"P-GTF window needs {n + 1} samples (> {max_samples})")
    return dt * np.arange(n + 1)


def _trapezoid_weights(g: np.ndarray, dt: float) -> np.ndarray:
    w = g.astype(complex) * dt
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def _direct_dtft(w: np.ndarray, dt: float, beta: np.ndarray,
                 chunk_elems: int = 4_000_000) -> np.ndarray:
    # sum_n w_n exp(-i beta n dt), evaluated term by term
    t = dt * np.arange(len(w))
    out = np.empty(len(beta), dtype=complex)
    step = max(1, chunk_elems // len(w))
    for i in range(0, len(beta), step):
        out[i:i + step] = np.exp(-1j * np.outer(beta[i:i + step], t)) @ w
    return out


def _chirp_dtft(w: np.ndarray, dt: float, beta0: float, dbeta: float, m: int) -> np.ndarray:
    # Bluestein: the same sum on beta0 + k*dbeta, k < m, via one FFT convolution
    n = len(w)
    theta = dbeta * dt
    nn = np.arange(n, dtype=float)
    kk = np.arange(m, dtype=float)
    a = w * np.exp(-1j * (beta0 * dt * nn + 0.5 * theta * nn * nn))
    size = 1 << int(math.ceil(math.log2(n + m - 1)))
    chirp = np.zeros(size, dtype=complex)
    chirp[:m] = np.exp(0.5j * theta * kk * kk)
    j = np.arange(1, n, dtype=float)
    chirp[size - n + 1:] = np.exp(0.5j * theta * j[::-1] * j[::-1])
    padded = np.zeros(size, dtype=complex)
    padded[:n] = a
    conv = np.fft.ifft(np.fft.fft(padded) * np.fft.fft(chirp))[:m]
    return np.exp(-0.5j * theta * kk * kk) * conv


def _uniform_runs(beta: np.ndarray, rtol: float = 1e-9):
    # maximal index ranges [i, j) with constant spacing
    d = np.diff(beta)
    runs, i = [], 0
    while i < len(beta) - 1:
        j = i + 1
        while j < len(d) and abs(d[j] - d[i]) <= rtol * d[i]:
            j += 1
        runs.append((i, j + 1))
        i = j + 1
    if i == len(beta) - 1:
        runs.append((i, i + 1))
    return runs


def _trapezoid_dtft(g: np.ndarray, dt: float, beta: np.ndarray,
                    min_chirp: int = 64) -> np.ndarray:
    """Trapezoid-rule Fourier integral of uniformly sampled ``g`` at each ``beta``."""
    w = _trapezoid_weights(g, dt)
    out = np.empty(len(beta), dtype=complex)
    for i, j in _uniform_runs(beta):
        seg = beta[i:j]
        if j - i >= min_chirp:
            dbeta = (seg[-1] - seg[0]) / (j - i - 1)
            out[i:j] = _chirp_dtft(w, dt, seg[0], dbeta, j - i)
        else:
            out[i:j] = _direct_dtft(w, dt, seg)
    return out


def pgtf_frequency_response(c: FilterConstants, beta_grid) -> FrequencyResponse:
    """Frequency response of the P-GTF by direct Fourier quadrature of its impulse response."""
    beta = np.asarray(beta_grid, dtype=float)
    if beta[0] < 0 or beta[-1] > 4.0 * c.b_p * (1 + 1e-12):
        raise ValueError("P-GTF beta grid must lie within [0, 4 b_p]")
    value = _pgtf_transform(c.a_p, c.b_p, c.b_u, beta.tobytes())
    return normalize_response(beta, value, FilterClass.PGTF, c)


@lru_cache(maxsize=64)
def _pgtf_transform(a_p: float, b_p: float, b_u: float, beta_bytes: bytes) -> np.ndarray:
    c = FilterConstants(a_p, b_p, b_u)
    beta = np.frombuffer(beta_bytes, dtype=float)
    t = pgtf_time_grid(c)
    g = impulse_pgtf(c, t).value
    out = _trapezoid_dtft(g, t[1] - t[0], beta)
    out.flags.writeable = False
    return out


# -- sampling ------------------------------------------------------------------

def default_beta_grid(c: FilterConstants, n: int = 4096, lo: float = 0.01,
                      hi: float = 3.0, refine: int = 16,
                      half_width: float = 5.0) -> np.ndarray:
    """Uniform grid on ``[lo, hi]*b_p`` refined ``refine``-fold on ``b_p +- half_width*a_p``.

    Fine points sit on ``b_p + k*h`` so that ``b_p`` itself is a sample.
    """
    b = c.b_p
    coarse = np.linspace(lo * b, hi * b, n)
    h = (coarse[1] - coarse[0]) / refine
    w_lo = max(lo * b, b - half_width * c.a_p)
    w_hi = min(hi * b, b + half_width * c.a_p)
    k = np.arange(math.ceil((w_lo - b) / h), math.floor((w_hi - b) / h) + 1)
    fine = b + k * h
    keep = (coarse < fine[0] - 0.5 * h) | (coarse > fine[-1] + 0.5 * h)
    return np.concatenate([coarse[keep & (coarse < b)], fine, coarse[keep & (coarse > b)]])


def normalize_response(beta, value, filter_class: FilterClass | None = None,
                       constants: FilterConstants | None = None) -> FrequencyResponse:
    """Peak-normalise magnitude and zero-reference the unwrapped phase."""
    beta = np.asarray(beta, dtype=float)
    value = np.asarray(value, dtype=complex)
    mag = np.abs(value)
    if not np.all(np.isfinite(mag)) or np.any(mag == 0):
        raise ArithmeticError("response has non-finite or zero samples")
    k = int(np.argmax(mag))
    mag_db = 20.0 * np.log10(mag / mag[k])
    phase = np.unwrap(np.angle(value) / (2.0 * np.pi), period=1.0)
    return FrequencyResponse(beta, value / mag[k], mag_db, phase - phase[0],
                             filter_class, constants)


_EVALUATORS = {
    FilterClass.SHARP: eval_sharp,
    FilterClass.GEF_P: eval_gef_p,
    FilterClass.V: eval_v,
}


def sample_response(filter_class, c: FilterConstants, beta_grid=None,
                    check_span: bool = True) -> FrequencyResponse:
    """Evaluate ``filter_class`` on ``beta_grid`` (default grid when omitted) and normalise."""
    cls = FilterClass.parse(filter_class)
    beta = default_beta_grid(c) if beta_grid is None else np.asarray(beta_grid, dtype=float)
    if beta.ndim != 1 or np.any(np.diff(beta) <= 0) or beta[0] < 0:
        raise ValueError("beta grid must be strictly increasing and non-negative")
    if check_span:
        if len(beta) < 64:
            raise ValueError("beta grid needs at least 64 points")
        if beta[0] > 0.05 * c.b_p * (1 + 1e-9) or beta[-1] < 3.0 * c.b_p * (1 - 1e-9):
            raise ValueError("beta grid must span at least [0.05, 3] * b_p")
    if cls is FilterClass.PGTF:
        return pgtf_frequency_response(c, beta)
    return normalize_response(beta, _EVALUATORS[cls](c, beta), cls, c)


def peak_beta_v(c: FilterConstants, tol: float = 1e-12) -> float:
    """Peak of ``|H_V|`` by golden-section search around the grid maximum."""
    beta = default_beta_grid(c)
    mag = np.abs(eval_v(c, beta))
    k = int(np.argmax(mag))
    lo, hi = beta[max(k - 1, 0)], beta[min(k + 1, len(beta) - 1)]

    def f(x):
        return -abs(eval_v(c, x))

    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    x1 = hi - invphi * (hi - lo)
    x2 = lo + invphi * (hi - lo)
    f1, f2 = f(x1), f(x2)
    while hi - lo > tol:
        if f1 < f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - invphi * (hi - lo)
            f1 = f(x1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + invphi * (hi - lo)
            f2 = f(x2)
    return 0.5 * (lo + hi)
