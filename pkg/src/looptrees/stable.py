"""Spectrally positive stable density on its light (negative) side.

Normalisation: Laplace exponent lambda^alpha, so that p_1(0) = 1/|Gamma(-1/alpha)|
and the mass left of zero is 1/alpha.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import mpmath
import numpy as np
from scipy import integrate

from .errors import ConvergenceFailure, DomainError

TERM_CAP = 200_000
TOL = 1e-14
# densities below this underflow to zero instead of being summed at huge precision
UNDERFLOW = 1e-300


@dataclass(frozen=True)
class StableParams:
    alpha: float

    def __post_init__(self):
        if not 1.0 < self.alpha < 2.0:
            raise DomainError(f"stability index must lie in (1, 2), got {self.alpha}")


def _alpha(params) -> float:
    return params.alpha if isinstance(params, StableParams) else StableParams(float(params)).alpha


def density_at_zero(params) -> float:
    return 1.0 / abs(math.gamma(-1.0 / _alpha(params)))


def terms_needed(alpha: float, x: float) -> int:
    """Rough count of series terms before they start to shrink for good."""
    return 4 * int(x ** (alpha / (alpha - 1.0))) + 64


def _digits_needed(alpha: float, x: float) -> int:
    # log10 of the largest series term, from Stirling on Gamma(1 + k/alpha) x^k / k!
    if x <= 1.0:
        return 20
    from scipy.special import gammaln

    k = np.arange(1, terms_needed(alpha, x), dtype=float)
    logs = gammaln(1.0 + k / alpha) - gammaln(k + 1.0) + k * math.log(x)
    # the result itself shrinks like exp(-c x^{alpha/(alpha-1)}); keep relative accuracy
    decay = _left_rate(alpha) * x ** (alpha / (alpha - 1.0))
    return 20 + int((max(0.0, logs.max()) + decay) / math.log(10.0))


@lru_cache(maxsize=65536)
def _series(alpha: float, x: float) -> float:
    digits = _digits_needed(alpha, x)
    with mpmath.workdps(digits):
        a = mpmath.mpf(alpha)
        mx = -mpmath.mpf(x)
        total = mpmath.mpf(0)
        power = mpmath.mpf(1)
        small = 0
        for k in range(1, TERM_CAP + 1):
            power *= mx
            term = mpmath.gamma(1 + k / a) / mpmath.factorial(k) * power * mpmath.sinpi(k / a)
            total += term
            # terms eventually decay monotonically in modulus; stop after a run of small ones
            bound = mpmath.gamma(1 + k / a) / mpmath.factorial(k) * abs(power)
            if bound < TOL * max(abs(total), mpmath.mpf(10) ** -300) and k > x:
                small += 1
                if small >= 3:
                    return float(-total / (mpmath.pi * x))
            else:
                small = 0
    raise ConvergenceFailure(f"series for p_1(-{x}) did not settle in {TERM_CAP} terms")


def p1_density(params, x: float) -> float:
    """p_1(-x) for x >= 0, summed from the power series in x.

    Terms alternate and grow before they shrink, so the working precision is
    raised until the cancellation is absorbed.
    """
    alpha = _alpha(params)
    x = float(x)
    if x < 0:
        raise DomainError("only the negative side of the density is available (x >= 0)")
    if x == 0.0:
        return density_at_zero(alpha)
    # the polynomial prefactor of the tail is far too small to matter at this depth
    if x > left_tail_cutoff(alpha, UNDERFLOW, slack=0.0):
        return 0.0
    if terms_needed(alpha, x) > TERM_CAP:
        raise ConvergenceFailure(f"series at x={x} needs more than {TERM_CAP} terms for alpha={alpha}")
    return max(0.0, _series(alpha, x))


def p1_density_fourier(params, y: float) -> float:
    """p_1(y) for any real y by Fourier inversion of exp((-iu)^alpha); used as a cross-check."""
    alpha = _alpha(params)
    rot = complex(math.cos(math.pi * alpha / 2.0), -math.sin(math.pi * alpha / 2.0))

    def re(u):
        return (np.exp(-1j * u * y + u**alpha * rot)).real

    val, _ = integrate.quad(re, 0.0, np.inf, limit=400, epsabs=1e-14, epsrel=1e-12)
    return val / math.pi


def stable_moment(params, beta: float) -> float:
    """int_0^oo x^beta p_1(-x) dx in closed form."""
    if beta <= 0:
        raise DomainError("beta must be positive")
    alpha = _alpha(params)
    return math.gamma(beta) / math.gamma(beta / alpha)


def _left_rate(alpha: float) -> float:
    return (alpha - 1.0) * alpha ** (-alpha / (alpha - 1.0))


def left_tail_cutoff(alpha: float, eps: float = 1e-17, slack: float = 2.0) -> float:
    """x beyond which p_1(-x) < eps, from the exp(-c x^{alpha/(alpha-1)}) left-tail rate."""
    c = _left_rate(alpha)
    return (math.log(1.0 / eps) / c) ** ((alpha - 1.0) / alpha) + slack


def moment_quadrature(params, beta: float, upper: float | None = None) -> float:
    """Numerical int_0^upper x^beta p_1(-x) dx over the series density.

    Gauss-Jacobi in x^beta near 0 would be sharper; splitting [0, 1] with a
    substitution x = t^2 removes the sqrt singularity for the betas we need.
    """
    alpha = _alpha(params)
    upper = left_tail_cutoff(alpha) if upper is None else upper
    f = lambda x: x**beta * p1_density(alpha, x)
    head, _ = integrate.quad(lambda t: 2.0 * t * f(t * t), 0.0, 1.0, epsabs=1e-13, epsrel=1e-12, limit=200)
    if upper <= 1.0:
        head, _ = integrate.quad(lambda t: 2.0 * t * f(t * t), 0.0, math.sqrt(upper), epsabs=1e-13, epsrel=1e-12)
        return head
    tail, _ = integrate.quad(f, 1.0, upper, epsabs=1e-13, epsrel=1e-12, limit=200)
    return head + tail


def left_mass(params) -> float:
    """int_0^oo p_1(-x) dx, which should equal 1/alpha."""
    alpha = _alpha(params)
    val, _ = integrate.quad(lambda x: p1_density(alpha, x), 0.0, left_tail_cutoff(alpha),
                            epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


def density_table(params, xmax: float, step: float) -> list[tuple[float, float]]:
    n = int(round(xmax / step))
    return [(i * step, p1_density(params, i * step)) for i in range(n + 1)]


@lru_cache(maxsize=16)
def p1_interpolant(alpha: float, xmax: float = 8.0, degree: int = 120):
    """Chebyshev interpolant of x -> p_1(-x) on [0, xmax] for bulk evaluation."""
    return np.polynomial.Chebyshev.interpolate(
        lambda xs: np.array([p1_density(alpha, float(x)) for x in xs]), degree, domain=[0.0, xmax])
