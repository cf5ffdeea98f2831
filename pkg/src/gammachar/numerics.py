"""Special functions and small numerical primitives.

Everything here is self-contained (no scipy): a Lanczos gamma function,
principal-branch complex powers, a Brent root finder, adaptive Simpson
quadrature and fourth-order central differences.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "DomainError",
    "NoSignChangeError",
    "ConvergenceError",
    "RootBracket",
    "gamma",
    "ln_gamma",
    "gamma_ratio",
    "complex_pow",
    "complex_pow_array",
    "brent_root",
    "adaptive_simpson",
    "derivative",
]


class DomainError(ValueError):
    """Argument outside the domain of a function."""


class NoSignChangeError(ValueError):
    """The objective does not change sign over the bracket."""


class ConvergenceError(ArithmeticError):
    """An iterative method hit its iteration or recursion cap."""


# Lanczos approximation, g = 7, n = 9.
_LANCZOS_G = 7.0
_LANCZOS_COEF = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)


def _lanczos_sum(z: float) -> float:
    # z = x - 1
    acc = _LANCZOS_COEF[0]
    for k, coef in enumerate(_LANCZOS_COEF[1:], start=1):
        acc += coef / (z + k)
    return acc


def gamma(x: float) -> float:
    """Gamma function for real ``x > 0``.

    Relative error is below 1e-13 on [0.25, 50]; arguments under 1/2 go
    through the reflection formula.
    """
    x = float(x)
    if not (x > 0.0 and math.isfinite(x)):
        raise DomainError(f"gamma requires finite x > 0, got {x!r}")
    if x < 0.5:
        return math.pi / (math.sin(math.pi * x) * gamma(1.0 - x))
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (z + 0.5) * math.exp(-t) * _lanczos_sum(z)


def ln_gamma(x: float) -> float:
    """Natural log of the gamma function for real ``x > 0``."""
    x = float(x)
    if not (x > 0.0 and math.isfinite(x)):
        raise DomainError(f"ln_gamma requires finite x > 0, got {x!r}")
    if x < 0.5:
        return math.log(math.pi / math.sin(math.pi * x)) - ln_gamma(1.0 - x)
    z = x - 1.0
    t = z + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (z + 0.5) * math.log(t) - t + math.log(_lanczos_sum(z))


def gamma_ratio(a: float, b: float) -> float:
    """Return ``gamma(a) / gamma(b)`` without forming either factor."""
    return math.exp(ln_gamma(a) - ln_gamma(b))


def complex_pow(z: complex, a: float) -> complex:
    """Principal-branch power ``z**a = exp(a * (ln|z| + i Arg z))``.

    ``Arg z`` lies in (-pi, pi], so ``complex_pow(-1, 0.5) == 1j``.
    """
    z = complex(z)
    if z == 0:
        if a > 0:
            return 0j
        raise DomainError("complex_pow(0, a) is undefined for a <= 0")
    # polar form via math: cmath reports subnormal intermediates as range errors.
    # Adding 0.0 maps an imaginary -0.0 to +0.0 so that Arg z = pi on the negative axis.
    r = math.exp(a * math.log(abs(z)))
    theta = a * math.atan2(z.imag + 0.0, z.real)
    return complex(r * math.cos(theta), r * math.sin(theta))


def complex_pow_array(z, a: float) -> np.ndarray:
    """Vectorised :func:`complex_pow` over a numpy array (no zeros allowed)."""
    z = np.asarray(z, dtype=complex)
    if np.any(z == 0):
        raise DomainError("complex_pow_array does not accept zero entries")
    return np.exp(a * np.log(z))


@dataclass(frozen=True)
class RootBracket:
    lo: float
    hi: float
    tol: float = 1e-12

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"bracket requires lo < hi, got [{self.lo}, {self.hi}]")
        if not self.tol > 0:
            raise ValueError("bracket tolerance must be positive")


def brent_root(f: Callable[[float], float], bracket: RootBracket,
               max_iter: int = 200) -> float:
    """Find a root of ``f`` inside ``bracket`` with Brent's method.

    Combines inverse quadratic interpolation and secant steps with a
    bisection safeguard. On return the final bracketing interval is no
    wider than ``bracket.tol`` (floored at a few ulps of the root).

    Raises
    ------
    NoSignChangeError
        If ``f(lo)`` and ``f(hi)`` have the same strict sign.
    ConvergenceError
        If ``max_iter`` iterations do not suffice.
    """
    a, b = float(bracket.lo), float(bracket.hi)
    fa, fb = f(a), f(b)
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    if fa * fb > 0.0:
        raise NoSignChangeError(
            f"f has the same sign at both ends of [{a}, {b}] ({fa:g}, {fb:g})")
    eps = sys.float_info.epsilon
    c, fc = a, fa
    d = e = b - a
    for _ in range(max_iter):
        if fb * fc > 0.0:
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        tol1 = max(0.5 * bracket.tol, 2.0 * eps * abs(b))
        xm = 0.5 * (c - b)
        if abs(xm) <= tol1 or fb == 0.0:
            return b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * xm * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0.0:
                q = -q
            p = abs(p)
            if 2.0 * p < min(3.0 * xm * q - abs(tol1 * q), abs(e * q)):
                e = d
                d = p / q
            else:
                d = xm
                e = d
        else:
            d = xm
            e = d
        a, fa = b, fb
        if abs(d) > tol1:
            b += d
        else:
            b += math.copysign(tol1, xm)
        fb = f(b)
    raise ConvergenceError(f"brent_root did not converge in {max_iter} iterations")


def adaptive_simpson(f: Callable[[float], float], lo: float, hi: float,
                     tol: float = 1e-10, max_depth: int = 50) -> float:
    """Integrate ``f`` over [lo, hi] with adaptive Simpson's rule.

    The target is ``|error| <= tol * max(1, |result|)``. A first pass sets
    the scale, and the integral is redone if the result turned out to be
    much smaller than the initial estimate suggested.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    if lo == hi:
        return 0.0

    def simpson(a, fa, b, fb):
        m = 0.5 * (a + b)
        fm = f(m)
        return m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb)

    def recurse(a, fa, b, fb, m, fm, whole, eps, depth):
        lm, flm, left = simpson(a, fa, m, fm)
        rm, frm, right = simpson(m, fm, b, fb)
        delta = left + right - whole
        if depth >= 4 and abs(delta) <= 15.0 * eps:
            return left + right + delta / 15.0
        if depth >= max_depth:
            raise ConvergenceError("adaptive_simpson exceeded its recursion depth cap")
        return (recurse(a, fa, m, fm, lm, flm, left, 0.5 * eps, depth + 1)
                + recurse(m, fm, b, fb, rm, frm, right, 0.5 * eps, depth + 1))

    fa, fb = f(lo), f(hi)
    m, fm, whole = simpson(lo, fa, hi, fb)
    eps = tol * max(1.0, abs(whole))
    result = recurse(lo, fa, hi, fb, m, fm, whole, eps, 0)
    target = tol * max(1.0, abs(result))
    if target < 0.5 * eps:
        result = recurse(lo, fa, hi, fb, m, fm, whole, target, 0)
    return result


def derivative(f: Callable[[float], float], x: float, order: int = 1,
               h: float = 1e-3) -> float:
    """Fourth-order central-difference derivative of ``f`` at ``x``."""
    if h <= 0:
        raise ValueError("step h must be positive")
    fm2, fm1, fp1, fp2 = f(x - 2 * h), f(x - h), f(x + h), f(x + 2 * h)
    if order == 1:
        return (fm2 - 8.0 * fm1 + 8.0 * fp1 - fp2) / (12.0 * h)
    if order == 2:
        return (-fm2 + 16.0 * fm1 - 30.0 * f(x) + 16.0 * fp1 - fp2) / (12.0 * h * h)
    raise ValueError("order must be 1 or 2")
