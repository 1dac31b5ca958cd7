"""Offspring laws, generating functions, tilting and closed-form constants.

Both triangulation models (type I: loops allowed, type II: no loops) lead to
one-type offspring laws whose generating function has the shape

    F(z) = A + B z + D (1 - z)^{3/2},

so every law here is built from the coefficients of ``(1 - z)^{3/2}``.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy import special

from .errors import DomainError

SQRT3 = math.sqrt(3.0)
R_C = 1.0 / math.sqrt(432.0)
GAMMA = SQRT3 - 1.0
Z_BLACK = GAMMA * R_C / 2.0
R_C_BAR = 2.0 / 27.0
Z_BLACK_BAR = 1.0 / 54.0

DEFAULT_CUTOFF = 10**6
_TABLE_MIN = 1 << 12


# ---------------------------------------------------------------------------
# coefficient tables
# ---------------------------------------------------------------------------

def _grow(kmax: int) -> int:
    size = _TABLE_MIN
    while size <= kmax:
        size *= 2
    return size


@lru_cache(maxsize=8)
def _tables(size: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Coefficients of (1-z)^{3/2}, (1-z)^{1/2} and (1-z)^{-1/2} for k <= size."""
    k = np.arange(1, size + 1, dtype=float)
    c = np.empty(size + 1)
    h = np.empty(size + 1)
    d = np.empty(size + 1)
    c[0] = h[0] = d[0] = 1.0
    c[1:] = np.cumprod((k - 2.5) / k)
    h[1:] = np.cumprod((k - 1.5) / k)
    d[1:] = np.cumprod((k - 0.5) / k)
    for arr in (c, h, d):
        arr.setflags(write=False)
    return c, h, d


def binom32(kmax: int) -> np.ndarray:
    """``(-1)^k binom(3/2, k)`` for ``k = 0..kmax``: the Taylor coefficients of (1-z)^{3/2}."""
    return _tables(_grow(kmax))[0][: kmax + 1]


def _c32(k: int) -> float:
    if k <= 4 * DEFAULT_CUTOFF:
        return float(binom32(k)[k])
    # Gamma(k - 3/2) / (Gamma(-3/2) Gamma(k + 1)), Gamma(-3/2) = 4 sqrt(pi) / 3
    return 3.0 / (4.0 * math.sqrt(math.pi)) / special.poch(k - 1.5, 2.5)


def _sqrt_coeff(k: int) -> float:
    """[z^k] (1-z)^{1/2}; equals the partial sum of (1-z)^{3/2} coefficients up to k."""
    return float(_tables(_grow(k))[1][k])


def _inv_sqrt_coeff(k: int) -> float:
    """[z^k] (1-z)^{-1/2} = binom(2k, k) / 4^k."""
    return float(_tables(_grow(k))[2][k])


# ---------------------------------------------------------------------------
# the offspring law record
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class OffspringLaw:
    """A probability law on {0, 1, 2, ...} stored up to a cutoff K.

    ``tail_mass`` and ``tail_mean`` are the analytic mass and first moment
    carried by ``k > K``.  ``tail_constant``/``tail_exponent`` describe
    ``law(k) ~ tail_constant * k^(-1 - tail_exponent)`` when the tail is a
    power law.
    """

    masses: np.ndarray
    label: str = "Custom"
    param: float | None = None
    tail_mass: float = 0.0
    tail_mean: float = 0.0
    tail_exponent: float | None = None
    tail_constant: float | None = None
    extras: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        m = np.ascontiguousarray(self.masses, dtype=float)
        if m.ndim != 1 or m.size == 0:
            raise DomainError("masses must be a nonempty 1-d array")
        if np.any(m < 0):
            raise DomainError("negative mass")
        total = math.fsum(m) + self.tail_mass
        if not (1.0 - 1e-12 <= total <= 1.0 + 1e-12):
            raise DomainError(f"masses sum to {total!r}, not 1")
        m.setflags(write=False)
        object.__setattr__(self, "masses", m)

    @property
    def cutoff(self) -> int:
        return self.masses.size - 1

    def __call__(self, k: int) -> float:
        return self.pmf(k)

    def pmf(self, k: int) -> float:
        if k < 0:
            return 0.0
        if k <= self.cutoff:
            return float(self.masses[k])
        exact = self.extras.get("exact_pmf")
        if exact is not None:
            return exact(k)
        raise DomainError(f"k={k} beyond stored cutoff {self.cutoff}")

    def head(self, kmax: int) -> np.ndarray:
        """Masses for ``k = 0..kmax``; extends past the cutoff when the law knows its exact pmf."""
        if kmax <= self.cutoff:
            return self.masses[: kmax + 1]
        builder = self.extras.get("exact_head")
        if builder is None:
            out = np.zeros(kmax + 1)
            out[: self.masses.size] = self.masses
            return out
        return builder(kmax)

    def mean(self) -> float:
        k = np.arange(self.masses.size, dtype=float)
        return math.fsum(k * self.masses) + self.tail_mean

    def pgf(self, z: float) -> float:
        """Truncated power series evaluation (exact to the tail mass)."""
        exact = self.extras.get("pgf")
        if exact is not None:
            return exact(z)
        powers = np.power(float(z), np.arange(self.masses.size))
        return math.fsum(powers * self.masses) + self.tail_mass * (z ** (self.cutoff + 1) if abs(z) < 1 else 1.0)

    def mass_even(self) -> float:
        return math.fsum(self.masses[::2])


# ---------------------------------------------------------------------------
# laws with generating function A + B z + D (1 - z)^{3/2}
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ThreeHalvesPgf:
    A: float
    B: float
    D: float

    def __call__(self, z):
        return self.A + self.B * z + self.D * np.power(1.0 - z, 1.5)

    def d1(self, z):
        return self.B - 1.5 * self.D * np.sqrt(1.0 - z)

    def d2(self, z):
        return 0.75 * self.D / np.sqrt(1.0 - z)

    def coefficients(self, kmax: int) -> np.ndarray:
        out = self.D * binom32(kmax).copy()
        out[0] += self.A
        if kmax >= 1:
            out[1] += self.B
        return out

    def coefficient(self, k: int) -> float:
        v = self.D * _c32(k)
        if k == 0:
            v += self.A
        elif k == 1:
            v += self.B
        return v

    def tail_mass(self, K: int) -> float:
        # sum_{k>K} c_k = -[z^K](1-z)^{1/2}
        return -self.D * _sqrt_coeff(K)

    def tail_mean(self, K: int) -> float:
        # sum_{k>K} k c_k = (3/2) [z^{K-1}](1-z)^{-1/2}
        return 1.5 * self.D * _inv_sqrt_coeff(K - 1)

    def to_law(self, label: str, param: float | None, cutoff: int = DEFAULT_CUTOFF) -> OffspringLaw:
        masses = self.coefficients(cutoff)
        tail_const = self.D * 3.0 / (4.0 * math.sqrt(math.pi))
        return OffspringLaw(
            masses=masses,
            label=label,
            param=param,
            tail_mass=self.tail_mass(cutoff),
            tail_mean=self.tail_mean(cutoff),
            tail_exponent=1.5,
            tail_constant=tail_const,
            extras={"pgf": self.__call__, "exact_pmf": self.coefficient, "exact_head": self.coefficients},
        )


def _check_unit(a: float, name: str = "a") -> None:
    if not (0.0 < a < 1.0):
        raise DomainError(f"{name}={a!r} outside (0, 1)")


def nu_pgf(a: float) -> ThreeHalvesPgf:
    _check_unit(a)
    D = 1.0 / (2.0 * a - 1.0 + SQRT3)
    return ThreeHalvesPgf(A=(2.0 * a - 1.0) * D, B=SQRT3 * D, D=D)


def nu_bar_pgf(a: float) -> ThreeHalvesPgf:
    _check_unit(a)
    s = 4.0 * a + 1.0
    return ThreeHalvesPgf(A=(4.0 * a - 2.0) / s, B=3.0 / s, D=2.0 / s)


# ---------------------------------------------------------------------------
# scalar mass functions
# ---------------------------------------------------------------------------

def q_k(k: int) -> float:
    """Weight of a simple-boundary triangulation component of perimeter k at criticality."""
    if k < 1:
        raise DomainError("q_k needs k >= 1")
    v = _c32(k) / (24.0 * SQRT3)
    if k == 1:
        v += 1.0 / 24.0
    return v


def q_array(kmax: int) -> np.ndarray:
    """``q_k`` for ``k = 0..kmax`` with a zero in slot 0."""
    out = binom32(kmax) / (24.0 * SQRT3)
    out[0] = 0.0
    if kmax >= 1:
        out[1] += 1.0 / 24.0
    return out


def q_bar(k: int) -> float:
    if k < 1:
        raise DomainError("q_bar needs k >= 1")
    v = _c32(k) / 27.0
    if k == 1:
        v += 1.0 / 18.0
    return v


def mu_black(j: int) -> float:
    if j < 0:
        raise DomainError("j must be nonnegative")
    return q_k(j + 1) / Z_BLACK


def xi(a: float) -> float:
    _check_unit(a)
    return GAMMA / (GAMMA + 2.0 * a)


def xi_bar(a: float) -> float:
    _check_unit(a)
    return 1.0 / (1.0 + 4.0 * a)


def mu_white(a: float, j: int) -> float:
    x = xi(a)
    if j < 0:
        raise DomainError("j must be nonnegative")
    return (1.0 - x) * x**j


def mu_black_bar(j: int) -> float:
    return q_bar(j + 1) / Z_BLACK_BAR


def mu_white_bar(a: float, j: int) -> float:
    x = xi_bar(a)
    return (1.0 - x) * x**j


def nu(a: float, k: int) -> float:
    if k < 0:
        raise DomainError("k must be nonnegative")
    return nu_pgf(a).coefficient(k)


def nu_bar(a: float, k: int) -> float:
    if k < 0:
        raise DomainError("k must be nonnegative")
    return nu_bar_pgf(a).coefficient(k)


def pgf_F(a: float, z: float) -> float:
    if not (0.0 <= z <= 1.0):
        raise DomainError(f"z={z!r} outside [0, 1]")
    return float(nu_pgf(a)(z))


def pgf_F_prime(a: float, z: float) -> float:
    return float(nu_pgf(a).d1(z))


def pgf_F_second(a: float, z: float) -> float:
    """F''_a(z) = 3 / (4 (2a - 1 + sqrt 3)) / sqrt(1 - z)."""
    if not (0.0 <= z < 1.0):
        raise DomainError(f"z={z!r} outside [0, 1)")
    return float(nu_pgf(a).d2(z))


# ---------------------------------------------------------------------------
# tilting
# ---------------------------------------------------------------------------

def _lambda_closed(a: float) -> complex:
    c = 8.0 * (1.0 - a) * a - 4.0 * (1.0 - 2.0 * a) * math.sqrt(a - a * a) * 1j - 1.0
    root = c ** (1.0 / 3.0)
    return root + 1.0 / root - 1.0


def lambda_tilt_bisect(a: float, pgf: ThreeHalvesPgf | None = None) -> float:
    """Root of lambda F'(lambda) = F(lambda) on (0, 1) by plain bisection."""
    f = pgf or nu_pgf(a)
    lo, hi = 0.0, 1.0
    # h(lo) < 0 < h(hi) for supercritical f
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if mid * f.d1(mid) - f(mid) < 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def lambda_tilt(a: float, method: str = "closed") -> float:
    """Tilting parameter making ``F_a(lambda z) / F_a(lambda)`` critical, for a in (0, 1/2).

    The same cubic governs the type II law, so the value serves both models.
    """
    if not (0.0 < a < 0.5):
        raise DomainError(f"tilting is only defined for a in (0, 1/2), got {a!r}")
    if method == "bisect":
        return lambda_tilt_bisect(a)
    if method != "closed":
        raise ValueError(f"unknown method {method!r}")
    lam = _lambda_closed(a)
    if abs(lam.imag) > 1e-9 or not (0.0 < lam.real < 1.0):
        warnings.warn(f"cube-root branch failed at a={a!r}; falling back to bisection", RuntimeWarning)
        return lambda_tilt_bisect(a)
    return lam.real


def tilt_residual(a: float, lam: float) -> float:
    f = nu_pgf(a)
    return abs(lam * f.d1(lam) - f(lam))


@dataclass(frozen=True)
class TiltedLaw:
    """Summary of the critical law with pgf z -> F(lambda z) / F(lambda)."""

    a: float
    lam: float
    F_lam: float
    variance: float
    even_mass: float


def _tilt(pgf: ThreeHalvesPgf, a: float) -> TiltedLaw:
    lam = lambda_tilt(a)
    F_lam = float(pgf(lam))
    var = lam * lam * float(pgf.d2(lam)) / F_lam
    # mass on even integers = (F~(1) + F~(-1)) / 2; F is analytic on the closed unit disc
    even = 0.5 * (1.0 + float(pgf(-lam)) / F_lam)
    return TiltedLaw(a=a, lam=lam, F_lam=F_lam, variance=var, even_mass=even)


def tilted_summary(a: float, model: str = "typeI") -> TiltedLaw:
    pgf = nu_pgf(a) if model == "typeI" else nu_bar_pgf(a)
    return _tilt(pgf, a)


def nu_tilted(a: float, k: int) -> float:
    t = tilted_summary(a)
    return nu(a, k) * t.lam**k / t.F_lam


def _tilted_law(pgf: ThreeHalvesPgf, a: float, label: str, cutoff: int | None) -> OffspringLaw:
    t = _tilt(pgf, a)
    if cutoff is None:
        # lambda^k k^{-5/2} below 1e-18 for k > K
        cutoff = int(min(DEFAULT_CUTOFF, max(64, math.ceil(-41.5 / math.log(t.lam)))))
    k = np.arange(cutoff + 1, dtype=float)
    masses = pgf.coefficients(cutoff) * np.exp(k * math.log(t.lam)) / t.F_lam
    tail = max(0.0, 1.0 - math.fsum(masses))
    return OffspringLaw(masses=masses, label=label, param=a, tail_mass=tail, tail_mean=0.0,
                        extras={"lambda": t.lam, "variance": t.variance})


# ---------------------------------------------------------------------------
# law constructors
# ---------------------------------------------------------------------------

@lru_cache(maxsize=32)
def nu_law(a: float = 0.5, cutoff: int = DEFAULT_CUTOFF) -> OffspringLaw:
    return nu_pgf(a).to_law("Nu", a, cutoff)


@lru_cache(maxsize=32)
def nu_bar_law(a: float = 0.5, cutoff: int = DEFAULT_CUTOFF) -> OffspringLaw:
    return nu_bar_pgf(a).to_law("NuBar", a, cutoff)


@lru_cache(maxsize=32)
def nu_tilted_law(a: float, cutoff: int | None = None) -> OffspringLaw:
    return _tilted_law(nu_pgf(a), a, "NuTilted", cutoff)


@lru_cache(maxsize=32)
def nu_bar_tilted_law(a: float, cutoff: int | None = None) -> OffspringLaw:
    return _tilted_law(nu_bar_pgf(a), a, "NuBarTilted", cutoff)


@lru_cache(maxsize=4)
def mu_black_law(cutoff: int = DEFAULT_CUTOFF) -> OffspringLaw:
    q = q_array(cutoff + 1)
    masses = q[1:] / Z_BLACK
    # sum_{j>K} q_{j+1} = -[z^{K+1}](1-z)^{1/2} / (24 sqrt 3)
    tail = -_sqrt_coeff(cutoff + 1) / (24.0 * SQRT3) / Z_BLACK
    # sum_{j>K} j q_{j+1} = sum_{k>K+1} (k-1) c_k / (24 sqrt 3)
    tail_mean = (1.5 * _inv_sqrt_coeff(cutoff) + _sqrt_coeff(cutoff + 1)) / (24.0 * SQRT3) / Z_BLACK
    return OffspringLaw(masses=masses, label="MuBlack", tail_mass=tail, tail_mean=tail_mean,
                        tail_exponent=1.5,
                        tail_constant=3.0 / (4.0 * math.sqrt(math.pi)) / (24.0 * SQRT3) / Z_BLACK,
                        extras={"exact_pmf": mu_black})


def geometric_law(ratio: float, label: str = "MuWhite", param: float | None = None,
                  cutoff: int | None = None) -> OffspringLaw:
    if not (0.0 <= ratio < 1.0):
        raise DomainError("geometric ratio must lie in [0, 1)")
    if cutoff is None:
        cutoff = 0 if ratio == 0 else int(max(16, math.ceil(-40.0 / math.log(ratio))))
    j = np.arange(cutoff + 1, dtype=float)
    masses = (1.0 - ratio) * ratio**j
    tail = ratio ** (cutoff + 1)
    tail_mean = tail * (cutoff + 1 + ratio / (1.0 - ratio))
    return OffspringLaw(masses=masses, label=label, param=param, tail_mass=tail, tail_mean=tail_mean,
                        extras={"exact_pmf": lambda k: (1.0 - ratio) * ratio**k})


def mu_white_law(a: float) -> OffspringLaw:
    return geometric_law(xi(a), "MuWhite", a)


def custom_law(masses) -> OffspringLaw:
    m = np.asarray(masses, dtype=float)
    return OffspringLaw(masses=m / m.sum(), label="Custom")


def point_mass(k: int) -> OffspringLaw:
    m = np.zeros(k + 1)
    m[k] = 1.0
    return OffspringLaw(masses=m, label="Custom")


# ---------------------------------------------------------------------------
# constants
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModelConstants:
    r_c: float = R_C
    gamma: float = GAMMA
    z_black: float = Z_BLACK
    r_c_bar: float = R_C_BAR
    z_black_bar: float = Z_BLACK_BAR

    def xi(self, a: float) -> float:
        return xi(a)

    def xi_bar(self, a: float) -> float:
        return xi_bar(a)


def c_alpha(a: float) -> float:
    """Scaling constant of the boundary of a hull of perimeter n (type I), a != 1/2."""
    _check_unit(a)
    if a == 0.5:
        raise DomainError("c_alpha is undefined at the critical point a = 1/2")
    if a > 0.5:
        return (2.0 * a - 1.0) / (SQRT3 - 1.0 + 2.0 * a)
    t = tilted_summary(a)
    sigma = math.sqrt(t.variance)
    return 2.0 / sigma * 0.25 * (t.variance + t.even_mass)


def c_alpha_type2(a: float) -> float:
    if not (0.5 <= a < 1.0):
        raise DomainError(f"a={a!r} outside [1/2, 1)")
    if a == 0.5:
        return 1.5 ** (2.0 / 3.0)
    return 4.0 * (a - 0.5) / (4.0 * a + 1.0)


def c_alpha_type2_subcritical(a: float) -> float:
    """Type II analogue of the a < 1/2 branch, via the tilted type II law."""
    if not (0.0 < a < 0.5):
        raise DomainError(f"a={a!r} outside (0, 1/2)")
    t = tilted_summary(a, "typeII")
    sigma = math.sqrt(t.variance)
    return 2.0 / sigma * 0.25 * (t.variance + t.even_mass)


def critical_scale(tail_constant: float, alpha: float = 1.5) -> float:
    """``(C |Gamma(-alpha)|)^{-1/alpha}``: looptree scale for a critical law with tail C k^{-1-alpha}."""
    return (tail_constant * abs(math.gamma(-alpha))) ** (-1.0 / alpha)


def C_p(p: int) -> float:
    """Asymptotic constant of w_{n,p} n^{5/2} r_c^n, evaluated through logs."""
    if p < 1:
        raise DomainError("p must be >= 1")
    log = ((p - 2) * math.log(3.0) + math.log(p) + math.lgamma(2 * p + 1) - 2.0 * math.lgamma(p + 1)
           - math.log(4.0 * math.sqrt(2.0 * math.pi)))
    return math.exp(log)


_PHI_PREFACTOR = 2.0 * SQRT3 / (3.0 * math.sqrt(2.0 * math.pi))


def phi_array(kmax: int) -> np.ndarray:
    """phi(k) = C_{k+1} / (12^{k+1} q_{k+1}) for k = 0..kmax.

    Uses C_p / 12^p = p binom(2p, p) 4^{-p} / (36 sqrt(2 pi)), which avoids
    overflow for large p.
    """
    c, _, d = _tables(_grow(kmax + 1))
    p = np.arange(1, kmax + 2, dtype=float)
    out = np.empty(kmax + 1)
    out[1:] = _PHI_PREFACTOR * p[1:] * d[2: kmax + 2] / c[2: kmax + 2]
    out[0] = (d[1] / (36.0 * math.sqrt(2.0 * math.pi))) / q_k(1)
    return out


def phi(k: int) -> float:
    if k < 0:
        raise DomainError("k must be nonnegative")
    return float(phi_array(k)[k])


PHI_ASYMPTOTIC = 4.0 / 9.0 * math.sqrt(6.0 / math.pi)
