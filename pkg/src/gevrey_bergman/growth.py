"""Scalar majorant recursions for the derivatives of b_m, and factorial growth fits.

For n = 1 the table is indexed by (m, mu, nu) with mu, nu in Z_{>=0}^2 (the
(x, z) derivative orders). One step of the recursion is

    b[m, mu, nu] = sum_{l=1..m} l!^(2p-1) C^l
                   sum_{alpha, beta <= l} sum_{xi + eta <= alpha + beta}
                   C^(xi+eta) / (xi! eta!)^p
                   sum_{mu0 <= mu, nu0 <= nu} b[m-l, (0,xi) + mu0, (0,eta) + nu0]
                   * f(mu, mu0) f(nu, nu0),
    f(mu, mu0) = binom(mu, mu0) (mu - mu0)!^p C^|mu - mu0|,     p = a + eps,

with b[0] the indicator of (0, 0). The (alpha, beta) sum only contributes a
count, which is folded in. Every term is a nonnegative product, so evaluating
all operations with MPFR rounding toward -inf (+inf) yields a certified lower
(upper) bound of the exact value.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial, lgamma, log
from typing import Sequence

import gmpy2
import mpmath
import numpy as np

__all__ = [
    "MajorantTable",
    "EntryBounds",
    "FitResult",
    "ResourceCapError",
    "majorant_recursion",
    "check_lower_bound",
    "LowerBoundReport",
    "growth_fit",
]

WORST_CASE = "WorstCaseEquality"
INEQUALITY = "InequalityBound"


class ResourceCapError(RuntimeError):
    def __init__(self, msg, deepest):
        super().__init__(f"{msg}; deepest state reached {deepest}")
        self.deepest = deepest


@dataclass(frozen=True)
class EntryBounds:
    lo: object  # gmpy2.mpfr, rounded toward -inf
    hi: object  # gmpy2.mpfr, rounded toward +inf

    def __float__(self):
        return float((self.lo + self.hi) / 2)


def _directed(x: Fraction, bits: int, rnd):
    with gmpy2.context(gmpy2.get_context(), precision=bits, round=rnd):
        return gmpy2.mpfr(x.numerator) / x.denominator if x.denominator != 1 else gmpy2.mpfr(x.numerator)


class _Pass:
    """One directed-rounding evaluation of the recursion (memoized on demand)."""

    def __init__(self, p: Fraction, C: Fraction, bits: int, rnd, max_states: int):
        self.bits = bits
        self.rnd = rnd
        self.ctx = gmpy2.context(gmpy2.get_context(), precision=bits, round=rnd)
        other = gmpy2.RoundUp if rnd == gmpy2.RoundDown else gmpy2.RoundDown
        # x^p with x >= 1 increases with p: round p with the pass, and -p against it
        self.p = _directed(p, bits, rnd)
        self.neg_p = -_directed(p, bits, other)
        self.q = _directed(2 * p - 1, bits, rnd)
        self.C = _directed(C, bits, rnd)
        self.max_states = max_states
        self.memo: dict = {}
        self.h_memo: dict = {}
        self.g_memo: dict = {}
        self.deepest = None
        self._fp: dict = {}
        self._ifp: dict = {}
        self._cpow: dict = {}

    def _exact(self, n: int):
        if n.bit_length() > self.bits:
            raise ResourceCapError("factorial exceeds working precision", self.deepest)
        return gmpy2.mpfr(n)

    def fp(self, n):
        """n!^p"""
        if n not in self._fp:
            with gmpy2.context(self.ctx):
                self._fp[n] = gmpy2.mpfr(1) if n < 2 else self._exact(factorial(n)) ** self.p
        return self._fp[n]

    def ifp(self, n):
        """n!^-p"""
        if n not in self._ifp:
            with gmpy2.context(self.ctx):
                self._ifp[n] = gmpy2.mpfr(1) if n < 2 else self._exact(factorial(n)) ** self.neg_p
        return self._ifp[n]

    def cpow(self, e):
        if e not in self._cpow:
            with gmpy2.context(self.ctx):
                self._cpow[e] = self.C ** e
        return self._cpow[e]

    def f(self, mu, mu0):
        with gmpy2.context(self.ctx):
            out = gmpy2.mpfr(1)
            d = 0
            for a, b in zip(mu, mu0):
                out = out * comb(a, b) * self.fp(a - b)
                d += a - b
            return out * self.cpow(d)

    def entry(self, m, mu, nu):
        key = (m, mu, nu)
        if key in self.memo:
            return self.memo[key]
        if m == 0:
            val = gmpy2.mpfr(1) if not any(mu) and not any(nu) else gmpy2.mpfr(0)
            self.memo[key] = val
            return val
        if len(self.memo) > self.max_states:
            raise ResourceCapError("majorant state cap exceeded", key)
        if self.deepest is None or sum(mu) + sum(nu) > sum(self.deepest[1]) + sum(self.deepest[2]):
            self.deepest = key
        with gmpy2.context(self.ctx):
            total = gmpy2.mpfr(0)
            for l in range(1, m + 1):
                with gmpy2.context(self.ctx):
                    w_l = self._exact(factorial(l)) ** self.q * self.cpow(l)
                counts = _pair_counts(l)
                inner = gmpy2.mpfr(0)
                for xi in range(2 * l + 1):
                    for eta in range(2 * l + 1 - xi):
                        cnt = counts[xi + eta]
                        g = self.G(m - l, xi, eta, mu, nu)
                        if not g:
                            continue
                        inner += cnt * self.cpow(xi + eta) * self.ifp(xi) * self.ifp(eta) * g
                total += w_l * inner
        self.memo[key] = total
        return total

    def G(self, m, xi, eta, mu, nu):
        key = (m, xi, eta, mu, nu)
        if key in self.g_memo:
            return self.g_memo[key]
        with gmpy2.context(self.ctx):
            total = gmpy2.mpfr(0)
            for mu0 in _below(mu):
                A = (mu0[0], mu0[1] + xi)
                h = self.H(m, A, eta, nu)
                if h:
                    total += self.f(mu, mu0) * h
        self.g_memo[key] = total
        return total

    def H(self, m, A, eta, nu):
        key = (m, A, eta, nu)
        if key in self.h_memo:
            return self.h_memo[key]
        with gmpy2.context(self.ctx):
            total = gmpy2.mpfr(0)
            for nu0 in _below(nu):
                val = self.entry(m, A, (nu0[0], nu0[1] + eta))
                if val:
                    total += self.f(nu, nu0) * val
        self.h_memo[key] = total
        return total


def _pair_counts(l):
    """counts[s] = #{(alpha, beta) in [0, l]^2 : alpha + beta >= s}, s = 0..2l."""
    out = []
    for s in range(2 * l + 1):
        out.append(sum(1 for a in range(l + 1) for b in range(l + 1) if a + b >= s))
    return out


def _below(mu):
    for a in range(mu[0] + 1):
        for b in range(mu[1] + 1):
            yield (a, b)


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(x).limit_denominator(10 ** 12) if isinstance(x, float) else Fraction(str(x))


@dataclass
class MajorantTable:
    n: int
    a: Fraction
    eps: Fraction
    C: Fraction
    M: int
    index_cap: int
    mode: str
    bits: int = 192
    max_states: int = 2_000_000
    _lo: _Pass = field(default=None, repr=False)
    _hi: _Pass = field(default=None, repr=False)

    @property
    def p(self) -> Fraction:
        return self.a + self.eps

    def _norm_index(self, mu):
        mu = tuple(int(v) for v in mu)
        if len(mu) != 2 * self.n:
            raise ValueError(f"multi-index must have {2 * self.n} entries")
        if any(v < 0 for v in mu):
            raise ValueError("multi-index entries must be non-negative")
        return mu

    def entry(self, m: int, mu=(0, 0), nu=(0, 0)) -> EntryBounds:
        """Certified enclosure [lo, hi] of b[m, mu, nu]."""
        mu, nu = self._norm_index(mu), self._norm_index(nu)
        if m > self.M:
            raise ValueError(f"table built for m <= {self.M}")
        if sum(mu) > self.index_cap or sum(nu) > self.index_cap:
            raise ValueError(f"index beyond index_cap = {self.index_cap}")
        return EntryBounds(self._lo.entry(m, mu, nu), self._hi.entry(m, mu, nu))

    def bound(self, m, mu=(0, 0), nu=(0, 0)):
        """The value reported by this mode: lower end for equality, upper end for bounds."""
        e = self.entry(m, mu, nu)
        return e.lo if self.mode == WORST_CASE else e.hi

    @property
    def states(self) -> int:
        return len(self._lo.memo)


def majorant_recursion(n: int = 1, a=2, eps=Fraction(1, 2), C=1, M: int = 6, index_cap: int = 8,
                       mode: str = WORST_CASE, bits: int = 192,
                       max_states: int = 2_000_000) -> MajorantTable:
    """Set up the memoized recursion; entries are computed when first requested."""
    if n != 1:
        raise ValueError("the majorant recursion is implemented for n = 1 only")
    if mode not in (WORST_CASE, INEQUALITY):
        raise ValueError(f"mode must be {WORST_CASE!r} or {INEQUALITY!r}")
    a, eps, C = _as_fraction(a), _as_fraction(eps), _as_fraction(C)
    if a <= 1 or eps <= 0:
        raise ValueError("need a > 1 and eps > 0")
    if C <= 0 or M < 1:
        raise ValueError("need C > 0 and M >= 1")
    p = a + eps
    lo = _Pass(p, C, bits, gmpy2.RoundDown, max_states)
    hi = _Pass(p, C, bits, gmpy2.RoundUp, max_states)
    return MajorantTable(n, a, eps, C, M, index_cap + 2 * M, mode, bits, max_states, lo, hi)


@dataclass
class LowerBoundReport:
    passed: bool
    rows: list  # (m, k, slot, entry_lo, bound_hi, margin = entry_lo / bound_hi)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["m", "k", "slot", "entry", "lower_bound", "margin"])
        for m, k, slot, e, b, r in self.rows:
            w.writerow([m, k, slot, f"{float(e):.17g}", f"{float(b):.17g}", f"{float(r):.6g}"])
        return buf.getvalue()


def _lb_rhs(m, k, p: Fraction, bits):
    """2^(-p m) (2m - 2 + k)!^p, rounded up."""
    ctx = gmpy2.context(gmpy2.get_context(), precision=bits, round=gmpy2.RoundUp)
    pu = _directed(p, bits, gmpy2.RoundUp)
    pd = _directed(p, bits, gmpy2.RoundDown)
    with gmpy2.context(ctx):
        f = gmpy2.mpfr(factorial(2 * m - 2 + k))
        # f >= 1 so f^p grows with p; 2^(-p m) shrinks with p
        return gmpy2.mpfr(2) ** (-pd * m) * f ** pu


def check_lower_bound(table: MajorantTable, m_max: int, k_max: int,
                      slots: Sequence[str] = ("nu", "mu")) -> LowerBoundReport:
    """entry(m, 0, k e1~) >= 2^(-p m) (2m-2+k)!^p for 1 <= m <= m_max, 0 <= k <= k_max.

    ``e1~ = (0, 1)`` is the unit vector in the z slot. Each row compares the
    rounded-down entry with the rounded-up bound, so a pass is rigorous. The
    ``mu`` slot places k e1~ in the first derivative index instead.
    """
    if table.mode != WORST_CASE or table.C != 1:
        raise ValueError("the lower bound is stated for the worst-case equality with C = 1")
    rows = []
    ok = True
    for slot in slots:
        for m in range(1, m_max + 1):
            for k in range(k_max + 1):
                idx = (0, k)
                e = table.entry(m, (0, 0), idx) if slot == "nu" else table.entry(m, idx, (0, 0))
                rhs = _lb_rhs(m, k, table.p, table.bits)
                margin = e.lo / rhs
                ok = ok and e.lo >= rhs
                rows.append((m, k, slot, e.lo, rhs, margin))
    return LowerBoundReport(ok, rows)


@dataclass(frozen=True)
class FitResult:
    logC: float
    sigma: float
    r_squared: float
    m_range: tuple


def growth_fit(values: Sequence, m_range: tuple | None = None) -> FitResult:
    """Least squares for log b(m) = m log C + sigma log m!, values indexed by m."""
    if m_range is None:
        m_range = (0, len(values) - 1)
    m0, m1 = m_range
    ms = list(range(m0, m1 + 1))
    if len(ms) < 3:
        raise ValueError("growth fit needs at least three points")
    ys = []
    for m in ms:
        v = values[m]
        if not v > 0:
            raise ValueError(f"value at m = {m} is not positive")
        ys.append(log(v) if isinstance(v, (int, float)) else float(mpmath.log(mpmath.mpf(str(v)))))
    X = np.array([[m, lgamma(m + 1)] for m in ms])
    y = np.array(ys)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    pred = X @ coef
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if ss_tot == 0 else max(0.0, min(1.0, 1.0 - ss_res / ss_tot))
    return FitResult(float(coef[0]), float(coef[1]), r2, (m0, m1))
