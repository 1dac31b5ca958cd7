"""Exact laws of random-walk partial sums and the perimeter distributions built on them.

Everything is driven by the cycle-lemma identity: a GW tree has n vertices
with probability ``P(S_n = n - 1) / n`` where ``S_n`` sums n i.i.d.
offspring counts.  Convolution powers are taken by FFT, with values below
``FLOOR`` times the running peak zeroed and booked as lost mass.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy import special, stats

from . import laws
from .errors import BoundViolated, CapTooSmall, DomainError, TailBoundExceeded
from .laws import OffspringLaw

FLOOR = 1e-15

UIPT_PREFACTOR = 72.0 * math.sqrt(6.0 * math.pi)
BOLTZMANN_PREFACTOR = 192.0 * math.sqrt(3.0)

_G23 = abs(math.gamma(-2.0 / 3.0))
EQ17_CONSTANT = 3.0 ** (1.0 / 3.0) / _G23
Q_TILDE_CONSTANT = 1.0 / (8.0 * 3.0 ** (2.0 / 3.0) * _G23)
BOLTZMANN_CONSTANT = 2.0 * 3.0 ** (1.0 / 6.0) / _G23**2

# Closed forms as stated for the phi-weighted sums.  They are smaller than the
# limit of the exact sequences by 3^{-1/3} |Gamma(-2/3)|; the *_LIMIT values
# below redo the dominated-convergence integral and are what the data approach.
K_TILDE_STATED = 1.0 / (8.0 * 3.0 ** (5.0 / 6.0) * _G23**2 * math.sqrt(2.0 * math.pi))
EQ14_STATED = 3.0 ** (1.0 / 6.0) / (_G23**2 * math.sqrt(2.0 * math.pi))
UIPT_STATED = 3.0 / (2.0 * _G23**3)
PHI_SUM_CORRECTION = 3.0 ** (-1.0 / 3.0) * _G23
K_TILDE_LIMIT = K_TILDE_STATED * PHI_SUM_CORRECTION
EQ14_LIMIT = EQ14_STATED * PHI_SUM_CORRECTION
UIPT_LIMIT = UIPT_STATED * PHI_SUM_CORRECTION
UIPT_EXPONENT = -4.0 / 3.0
BOLTZMANN_EXPONENT = -10.0 / 3.0


@dataclass
class PmfVector:
    values: np.ndarray
    offset_base: int = 0
    lost_mass: float = 0.0
    cap: int | None = None

    def __getitem__(self, k: int) -> float:
        i = k - self.offset_base
        if self.cap is not None and k > self.cap:
            raise CapTooSmall(f"index {k} beyond support cap {self.cap}")
        if i < 0 or i >= self.values.size:
            return 0.0
        return float(self.values[i])

    def total(self) -> float:
        return math.fsum(self.values)


@dataclass
class SeriesTable:
    n_values: np.ndarray
    values: np.ndarray
    label: str
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.n_values = np.asarray(self.n_values)
        self.values = np.asarray(self.values, dtype=float)
        if np.any(np.diff(self.n_values) <= 0):
            raise DomainError("n_values must be strictly increasing")


# ---------------------------------------------------------------------------
# convolution primitives
# ---------------------------------------------------------------------------

def _fft_size(n: int) -> int:
    return 1 << max(1, (n - 1).bit_length())


def _clean(x: np.ndarray) -> tuple[np.ndarray, float]:
    peak = x.max(initial=0.0)
    small = x < FLOOR * peak
    lost = float(x[small & (x > 0)].sum())
    x[small] = 0.0
    return x, lost


def convolve_truncated(a: np.ndarray, b: np.ndarray, cap: int) -> tuple[np.ndarray, float]:
    """Coefficients 0..cap of the product of two nonnegative series."""
    a = a[: cap + 1]
    b = b[: cap + 1]
    size = _fft_size(a.size + b.size - 1)
    out = np.fft.irfft(np.fft.rfft(a, size) * np.fft.rfft(b, size), size)[: cap + 1]
    return _clean(out)


def law_head(law: OffspringLaw, cap: int) -> tuple[np.ndarray, float]:
    """Masses 0..cap and the mass lost beyond cap."""
    head = np.array(law.head(cap), dtype=float)
    if head.size < cap + 1:
        head = np.pad(head, (0, cap + 1 - head.size))
    missing = law.tail_mass if cap >= law.cutoff else law.tail_mass + math.fsum(law.masses[cap + 1:])
    if cap > law.cutoff and law.extras.get("exact_head") is None and law.tail_mass > 1e-9:
        raise CapTooSmall(f"law stored to {law.cutoff} only; tail mass {law.tail_mass:.3g} unresolved")
    return head, missing


def walk_pmf(law: OffspringLaw, n: int, support_cap: int | None = None) -> PmfVector:
    """Law of ``S_n`` on ``0..support_cap`` by binary exponentiation.

    Increments are nonnegative so coefficients up to the cap are exact
    regardless of what lies beyond it.
    """
    if n < 1:
        raise DomainError("n must be >= 1")
    cap = n if support_cap is None else int(support_cap)
    base, _ = law_head(law, cap)
    result = None
    lost = 0.0
    e = n
    while e:
        if e & 1:
            if result is None:
                result = base.copy()
            else:
                result, l1 = convolve_truncated(result, base, cap)
                lost += l1
        e >>= 1
        if e:
            base, l2 = convolve_truncated(base, base, cap)
            lost += l2
    return PmfVector(values=result, lost_mass=max(0.0, 1.0 - math.fsum(result)), cap=cap,
                     offset_base=0)


def walk_pmf_direct(law: OffspringLaw, n: int, support_cap: int) -> np.ndarray:
    """n-fold convolution by repeated direct products (reference path)."""
    base, _ = law_head(law, support_cap)
    out = base.copy()
    for _ in range(n - 1):
        out = np.convolve(out, base)[: support_cap + 1]
    return out


def iter_walk_pmfs(law: OffspringLaw, nmax: int, cap: int | None = None):
    """Yield ``(j, pmf of S_j on 0..cap)`` for j = 1..nmax by repeated FFT products."""
    cap = nmax if cap is None else cap
    base, _ = law_head(law, cap)
    size = _fft_size(2 * cap + 1)
    fb = np.fft.rfft(base, size)
    cur = base.copy()
    yield 1, cur
    for j in range(2, nmax + 1):
        nxt = np.fft.irfft(np.fft.rfft(cur, size) * fb, size)[: cap + 1]
        cur, _ = _clean(nxt)
        yield j, cur


# ---------------------------------------------------------------------------
# GW identities
# ---------------------------------------------------------------------------

def gw_size_pmf(law: OffspringLaw, n: int) -> float:
    """P(|tree| = n) = P(S_n = n - 1) / n."""
    if n < 1:
        raise DomainError("n must be >= 1")
    return walk_pmf(law, n, n - 1)[n - 1] / n


def _weights(weight, kmax: int) -> np.ndarray:
    if callable(weight):
        return np.array([float(weight(k)) for k in range(kmax + 1)])
    w = np.asarray(weight, dtype=float)
    if w.size < kmax + 1:
        raise DomainError(f"weight table shorter than {kmax + 1}")
    return w[: kmax + 1]


def gw_phi_sum(law: OffspringLaw, weight, n: int) -> float:
    """GW[sum_u weight(k_u) ; |tree| = n] = sum_k weight(k) law(k) P(S_{n-1} = n-1-k)."""
    if n < 1:
        raise DomainError("n must be >= 1")
    w = _weights(weight, n - 1)
    head, _ = law_head(law, n - 1)
    if n == 1:
        return float(w[0] * head[0])
    walk = walk_pmf(law, n - 1, n - 1).values
    return math.fsum(w * head[: n] * walk[n - 1:: -1])


def phi_shift_weights(kmax: int) -> np.ndarray:
    """k -> phi(k - 1) for k >= 1, and 0 at k = 0."""
    out = np.zeros(kmax + 1)
    if kmax >= 1:
        out[1:] = laws.phi_array(kmax - 1)
    return out


def q_tilde(n: int) -> float:
    if n < 0:
        raise DomainError("n must be >= 0")
    return gw_size_pmf(laws.nu_law(), n + 1) / 24.0


def k_tilde(n: int) -> float:
    if n < 0:
        raise DomainError("n must be >= 0")
    if n == 0:
        return 0.0
    return gw_phi_sum(laws.nu_law(), phi_shift_weights(n), n + 1) / 24.0


def k_alpha_expectation(a: float, p: int) -> float:
    """GW_{mu_white(a), mu_black}[sum over black u of phi(k_u); |tree| = p + 1], via the one-type law."""
    if p < 1:
        raise DomainError("p must be >= 1")
    return gw_phi_sum(laws.nu_law(a), phi_shift_weights(p), p + 1)


def k_alpha_p(a: float, p: int) -> float:
    """Constant K_a(p) in Q_a(T_{n,p}) ~ K_a(p) n^{-5/2}."""
    scale = laws.R_C * (laws.GAMMA + 2.0 * a) / 2.0
    return scale ** (p + 1) * k_alpha_expectation(a, p)


# ---------------------------------------------------------------------------
# perimeter laws
# ---------------------------------------------------------------------------

class PerimeterTables:
    """Q~_m and K~_m for m = 0..mmax, from one sweep of walk powers of nu."""

    def __init__(self, mmax: int):
        self.mmax = mmax
        nu = laws.nu_law()
        w = phi_shift_weights(mmax)
        head, _ = law_head(nu, mmax + 1)
        wnu = w * head[: mmax + 1]
        q = np.zeros(mmax + 1)
        k = np.zeros(mmax + 1)
        for j, pmf in iter_walk_pmfs(nu, mmax + 1, mmax + 1):
            q[j - 1] = pmf[j - 1] / (24.0 * j)
            if j <= mmax:
                k[j] = math.fsum(wnu[1: j + 1] * pmf[j - 1:: -1][: j]) / 24.0
        self.q = q
        self.k = k


def default_m_cap(n: int) -> int:
    return int(n + 64.0 * math.sqrt(n + 1.0))


def binomial_weights(n: int, m: np.ndarray) -> np.ndarray:
    """binom(n + m, n) 2^{-n-m}."""
    m = np.asarray(m, dtype=float)
    logw = special.gammaln(n + m + 1.0) - special.gammaln(n + 1.0) - special.gammaln(m + 1.0) - (n + m) * math.log(2.0)
    return np.exp(logw)


@dataclass
class PerimeterValue:
    n: int
    value: float
    tail_bound: float
    m_cap: int


_TABLE_CACHE: dict[int, PerimeterTables] = {}


def perimeter_tables(mmax: int) -> PerimeterTables:
    for size, tab in _TABLE_CACHE.items():
        if size >= mmax:
            return tab
    tab = PerimeterTables(mmax)
    _TABLE_CACHE.clear()
    _TABLE_CACHE[mmax] = tab
    return tab


def _tail_envelope(n: int, cap: int, q: np.ndarray, k: np.ndarray, model: str) -> float:
    # Q~ is eventually decreasing; K~ grows like m^{1/3}, bounded here by (m / cap)^{1/2}
    m = np.arange(cap + 1, 4 * cap + 64, dtype=float)
    w = binomial_weights(n, m)
    q_env = q[max(1, cap // 2): cap + 1].max()
    if model == "uipt":
        k_env = k[cap] * np.sqrt(m / cap)
        return float(UIPT_PREFACTOR * np.sum(w * (q_env * k[n] + q[n] * k_env)))
    return float(BOLTZMANN_PREFACTOR * q[n] * np.sum(w * q_env))


def _perimeter(n: int, model: str, m_cap: int | None, tables: PerimeterTables | None) -> PerimeterValue:
    if n < 1:
        raise DomainError("n must be >= 1")
    cap = default_m_cap(n) if m_cap is None else int(m_cap)
    tab = tables if tables is not None and tables.mmax >= max(cap, n) else perimeter_tables(max(cap, n))
    q, k = tab.q, tab.k
    m = np.arange(cap + 1)
    w = binomial_weights(n, m)
    if model == "uipt":
        value = UIPT_PREFACTOR * math.fsum(w * (q[: cap + 1] * k[n] + q[n] * k[: cap + 1]))
    else:
        value = BOLTZMANN_PREFACTOR * q[n] * math.fsum(w * q[: cap + 1])
    tail = _tail_envelope(n, cap, q, k, model)
    if tail > 1e-3 * value:
        raise TailBoundExceeded(f"m_cap={cap} leaves tail bound {tail:.3g} against partial sum {value:.3g}")
    return PerimeterValue(n=n, value=value, tail_bound=tail, m_cap=cap)


def perimeter_pmf_uipt(n: int, m_cap: int | None = None, tables: PerimeterTables | None = None) -> float:
    """P(perimeter of the critical white hull in the UIPT = n)."""
    return _perimeter(n, "uipt", m_cap, tables).value


def perimeter_pmf_boltzmann(n: int, m_cap: int | None = None, tables: PerimeterTables | None = None) -> float:
    """Same quantity under the critical Boltzmann triangulation."""
    return _perimeter(n, "boltzmann", m_cap, tables).value


def perimeter_detail(n: int, model: str = "uipt", m_cap: int | None = None) -> PerimeterValue:
    return _perimeter(n, model, m_cap, None)


def perimeter_series(model: str, ns: Sequence[int]) -> SeriesTable:
    ns = sorted(int(x) for x in ns)
    tab = perimeter_tables(max(default_m_cap(n) for n in ns))
    vals = [_perimeter(n, model, None, tab) for n in ns]
    label = "PerimeterUIPT" if model == "uipt" else "PerimeterBoltzmann"
    return SeriesTable(ns, [v.value for v in vals], label, {"tail_bounds": [v.tail_bound for v in vals]})


def negbin_tail(n: int, cap: int) -> float:
    """sum_{m > cap} binom(n+m, n) 2^{-n-m}."""
    return 2.0 * float(stats.nbinom.sf(cap, n + 1, 0.5))


# ---------------------------------------------------------------------------
# extrapolation
# ---------------------------------------------------------------------------

def richardson(ns, values, scale: float = -1.0 / 3.0, order: int = 1) -> float:
    """Limit of ``values`` as n -> oo, fitting c0 + c1 n^scale + ... + c_order n^(order*scale)."""
    ns = np.asarray(ns, dtype=float)
    v = np.asarray(values, dtype=float)
    if ns.size < order + 1:
        raise DomainError("not enough points for the requested order")
    h = ns**scale
    X = np.vander(h, order + 1, increasing=True)
    coef, *_ = np.linalg.lstsq(X, v, rcond=None)
    return float(coef[0])


# ---------------------------------------------------------------------------
# appendix checks
# ---------------------------------------------------------------------------

def big_jump_sides(constants: Sequence[float], beta: float, n: int, head=None) -> tuple[float, float]:
    """Both sides of the one-big-jump identity for a_m^{(i)} = C_i m^{-beta} (a_0 = C_i)."""
    m = np.arange(n + 1, dtype=float)
    seqs = []
    for c in constants:
        s = np.empty(n + 1)
        s[0] = c if head is None else head
        s[1:] = c * m[1:] ** (-beta)
        seqs.append(s)
    conv = seqs[0]
    for s in seqs[1:]:
        conv = np.convolve(conv, s)[: n + 1]
    lhs = n**beta * conv[n]
    totals = [(c if head is None else head) + c * float(special.zeta(beta, 1.0)) for c in constants]
    rhs = 0.0
    for i, c in enumerate(constants):
        rhs += c * math.prod(t for j, t in enumerate(totals) if j != i)
    return lhs, rhs


def prop_a3_constants(C: float, alpha: float, kappa: float, beta: float) -> dict:
    """Limits of the three normalised GW quantities for a critical law with tail C k^{-1-alpha}
    and weight kappa k^beta.

    ``size`` is the progeny constant.  ``conditional`` and ``joint`` come from
    the dominated-convergence integral with the ratio of walk probabilities
    tending to p_1(-x / s) / p_1(0), s = (Gamma(-alpha) C)^{1/alpha}.  The
    ``*_stated`` entries are the closed forms without the p_1(0) and s factors.
    """
    ga = math.gamma(-alpha)
    g_inv = abs(math.gamma(-1.0 / alpha))
    e = beta - alpha - 1.0
    s = (ga * C) ** (1.0 / alpha)
    moment = math.gamma(e) / math.gamma(e / alpha)
    size = 1.0 / (g_inv * s)
    joint = kappa * C * s**e * moment
    cond_stated = kappa * C ** ((beta - 1.0) / alpha) * ga ** (e / alpha) * moment
    joint_stated = (kappa * C ** ((beta - 2.0) / alpha) * ga ** ((beta - alpha - 2.0) / alpha) * moment / g_inv)
    return {"size": size, "size_exponent": -(1.0 + 1.0 / alpha),
            "conditional": joint / size, "conditional_exponent": beta / alpha,
            "joint": joint, "joint_exponent": e / alpha,
            "conditional_stated": cond_stated, "joint_stated": joint_stated}


def scale_a_n(C: float, alpha: float, n: float) -> float:
    return (math.gamma(-alpha) * C) ** (1.0 / alpha) * n ** (1.0 / alpha)


@dataclass
class LltReport:
    n: int
    error: float
    a_n: float
    argmax: int
    window: tuple[int, int]


def llt_error(law: OffspringLaw, n: int, drift: float | None = None, x_max: float = 8.0) -> LltReport:
    """sup_k |a_n P(S_n = k) - p_1((k - n drift) / a_n)| over k <= n drift.

    The density is only evaluated on its light left side; beyond ``x_max``
    rescaled units both terms are bounded by their values at the edge.
    """
    from . import stable

    if law.tail_constant is None or law.tail_exponent is None:
        raise DomainError("llt_error needs a law with a power-law tail")
    alpha = law.tail_exponent
    mu = law.mean() if drift is None else drift
    a_n = scale_a_n(law.tail_constant, alpha, n)
    center = int(math.floor(n * mu))
    pmf = walk_pmf(law, n, center).values
    lo = max(0, int(math.floor(center - x_max * a_n)))
    ks = np.arange(lo, center + 1)
    x = (n * mu - ks) / a_n
    dens = stable.p1_interpolant(alpha, x_max)(x)
    err = float(np.max(np.abs(a_n * pmf[lo: center + 1] - dens)))
    if lo > 0:
        err = max(err, float(a_n * pmf[:lo].max()) + float(dens[0]))
    return LltReport(n=n, error=err, a_n=a_n, argmax=int(np.argmax(pmf)), window=(lo, center))


@dataclass
class TailBoundReport:
    c1: float
    c2: float
    points: int
    violations: int
    per_N: dict


def tail_bound_check(law: OffspringLaw, Ns: Sequence[int], alpha: float | None = None,
                     slack: float = 2.0) -> TailBoundReport:
    """Constants (c1, c2) with P(S_N = N - k) <= c1 N^{-1/alpha} exp(-c2 k^alpha / N) on the grid.

    c2 is the largest rate keeping c1 within ``slack`` times its c2 = 0 value,
    pooled over all N, so a single pair has to serve every N.
    """
    alpha = law.tail_exponent if alpha is None else alpha
    xs, ys, tags = [], [], []
    for N in Ns:
        pmf = walk_pmf(law, N, N).values
        k = np.arange(1, N + 1)
        p = pmf[N - k]
        ok = p > 0
        xs.append(k[ok] ** alpha / N)
        ys.append(np.log(p[ok]) + math.log(N) / alpha)
        tags.append(np.full(ok.sum(), N))
    x = np.concatenate(xs)
    y = np.concatenate(ys)
    tag = np.concatenate(tags)
    y0 = y.max()

    def intercept(c2):
        return np.max(y + c2 * x)

    lo, hi = 0.0, 1.0
    while intercept(hi) - y0 < math.log(slack) and hi < 1e6:
        lo, hi = hi, 2 * hi
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if intercept(mid) - y0 < math.log(slack):
            lo = mid
        else:
            hi = mid
    c2 = lo
    if c2 <= 0:
        raise BoundViolated("no positive decay rate fits the tail")
    log_c1 = intercept(c2)
    viol = int(np.sum(y > log_c1 - c2 * x + 1e-12))
    per_N = {int(N): float(np.exp(np.max(y[tag == N] + c2 * x[tag == N]))) for N in Ns}
    return TailBoundReport(c1=float(math.exp(log_c1)), c2=float(c2), points=int(x.size), violations=viol, per_N=per_N)


# ---------------------------------------------------------------------------
# tree-of-components weights
# ---------------------------------------------------------------------------

@dataclass
class WeightChain:
    """Each line of the rewrite from Boltzmann weight to scaled two-type GW probability."""
    product_form: float
    normalised: float
    geometric: float
    scaled_gw: float

    @property
    def residual(self) -> float:
        vals = [self.normalised, self.geometric, self.scaled_gw]
        return max(abs(v - self.product_form) for v in vals) / self.product_form


def weight_chain(t, a: float) -> WeightChain:
    """Weight of a tree of components ``t`` (a TwoTypeTree) evaluated four equivalent ways."""
    from .planetree import TwoTypeTree

    if not isinstance(t, TwoTypeTree):
        raise DomainError("expected a TwoTypeTree")
    if t.size < 2:
        raise DomainError("need |t| >= 2")
    if not 0.0 < a < 1.0:
        raise DomainError("a must lie in (0, 1)")
    k = t.tree.degrees
    white = t.is_white
    kw, kb = k[white], k[~white]
    rc, z, xi = laws.R_C, laws.Z_BLACK, laws.xi(a)
    qb = np.array([laws.q_k(int(j) + 1) for j in kb])
    nw, nb = kw.size, kb.size
    product_form = (a * rc) ** nw * float(np.prod(qb))
    normalised = z ** (nw + nb) * (a * rc / z) ** nw * float(np.prod(qb / z))
    geometric = (z / xi) ** (nw + nb) * float(np.prod(a * rc / z * xi ** (kw + 1.0))) * float(np.prod(qb / z))
    gw = float(np.prod([laws.mu_white(a, int(j)) for j in kw])) * float(np.prod([laws.mu_black(int(j)) for j in kb]))
    scaled_gw = (rc * (2.0 * a + laws.GAMMA) / 2.0) ** t.size * gw
    return WeightChain(product_form, normalised, geometric, scaled_gw)


def prop32_identity_check(t, a: float) -> float:
    """Largest relative gap between the lines of the weight rewrite."""
    return weight_chain(t, a).residual
