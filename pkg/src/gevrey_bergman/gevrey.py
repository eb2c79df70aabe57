"""Gevrey cutoffs and the Borel-type almost holomorphic extension of Gevrey functions.

For f of Gevrey class a > 1 (one complex variable) the extension is

    F(y, z) = sum_{alpha, beta} D^alpha Dbar^beta f(w) / (alpha! beta!) u^alpha v^beta chi(s_N),
    w = (y + zbar)/2,  u = (y - zbar)/2,  v = (z - ybar)/2,  N = alpha + beta,
    s_N = N^(2(a-1)) 4^(a-1) C1^2 |y - zbar|^2,

and chi(s) = 1 for s <= 1/2, 0 for s >= 1. Its antiholomorphic derivatives
only see indices whose cutoff is in transition, and they are smaller than any
power of |y - zbar|; they are computed here in closed form term by term
because they fall far below what finite differences can resolve.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Sequence

import mpmath
import numpy as np

__all__ = [
    "GevreyCutoff",
    "ExtensionEvaluator",
    "RealPartExtension",
    "LacunaryGevrey",
    "RadialBump",
    "TermBudgetError",
    "StencilError",
    "NoiseFloorError",
    "DecayFit",
    "build_cutoff",
    "estimate_C1",
    "extend",
    "dbar_extension",
    "extension_difference",
    "vanishing_rate_fit",
    "difference_rate_fit",
    "displaced_pair",
    "calibrated_extension",
    "with_cutoff",
]

BITS = 256


class TermBudgetError(RuntimeError):
    """The cutoff does not close the sum within the allowed number of orders."""


class StencilError(RuntimeError):
    """A finite-difference stencil straddles different cutoff transition windows."""


class NoiseFloorError(RuntimeError):
    """Derivative magnitudes are zero or not small enough to fit a decay rate."""


def _gl_nodes(bits):
    gl = mpmath.calculus.quadrature.GaussLegendre(mpmath.mp)
    return gl.calc_nodes(4, bits)  # 24-point rule on [-1, 1]


class GevreyCutoff:
    """chi(x) = g(x + 1) g(1 - x), g the normalized primitive of f_e(t) f_e(1/2 - t).

    Here f_e(t) = exp(-t^(-1/e)) for t > 0 and 0 otherwise, so g rises from 0 at
    t = 0 to 1 at t = 1/2.
    """

    def __init__(self, eps_cut, bits: int = BITS):
        self.bits = bits
        with mpmath.workprec(bits):
            self.eps_cut = mpmath.mpf(mpmath.mpmathify(eps_cut))
            if not self.eps_cut > 0:
                raise ValueError("eps_cut must be positive")
            self.inv_eps = 1 / self.eps_cut
            self._nodes = _gl_nodes(bits)
            half = mpmath.mpf(1) / 2
            val, err = mpmath.quad(self.h, [0, half / 4, half / 2, 3 * half / 4, half], error=True)
            if not val > 0 or err > mpmath.mpf("1e-12") * val:
                raise mpmath.NoConvergence("cutoff normalization did not converge")
            self.normalization = val

    # -- building blocks -------------------------------------------------
    def f_eps(self, t):
        with mpmath.workprec(self.bits):
            t = mpmath.mpf(t)
            return mpmath.exp(-t ** (-self.inv_eps)) if t > 0 else mpmath.mpf(0)

    def log_h(self, t):
        """log f_e(t) f_e(1/2 - t); concave on (0, 1/2) with its maximum at 1/4."""
        t = mpmath.mpf(t)
        half = mpmath.mpf(1) / 2
        if t <= 0 or t >= half:
            return mpmath.ninf
        return -t ** (-self.inv_eps) - (half - t) ** (-self.inv_eps)

    def h(self, t):
        with mpmath.workprec(self.bits):
            t = mpmath.mpf(t)
            if t <= 0 or t >= mpmath.mpf(1) / 2:
                return mpmath.mpf(0)
            return mpmath.exp(self.log_h(t))

    def _peak(self, a, b):
        q = mpmath.mpf(1) / 4
        if a <= q <= b:
            return q
        return a if self.log_h(a) >= self.log_h(b) else b

    def log_integral_bound(self, t1, t2):
        """Upper bound for log int_{t1}^{t2} h (concavity: width times the maximum)."""
        with mpmath.workprec(self.bits):
            a = max(mpmath.mpf(t1), mpmath.mpf(0))
            b = min(mpmath.mpf(t2), mpmath.mpf(1) / 2)
            if b <= a:
                return mpmath.ninf
            return mpmath.log(b - a) + self.log_h(self._peak(a, b))

    def _level_crossing(self, lo, hi, level, rising):
        # bisection for log_h = level on a monotone stretch; near t = 0 log h is
        # so steep that a fixed step count can leave a bracket spanning many e-folds
        for _ in range(4 * self.bits):
            mid = (lo + hi) / 2
            if (self.log_h(mid) >= level) == rising:
                hi = mid
            else:
                lo = mid
            if abs(self.log_h(hi) - self.log_h(lo)) <= 1 or hi - lo <= abs(mid) * mpmath.eps:
                break
        return lo if rising else hi

    def _gl(self, lo, hi):
        mid, rad = (lo + hi) / 2, (hi - lo) / 2
        return rad * mpmath.fsum(w * self.h(mid + rad * x) for x, w in self._nodes)

    def _adaptive(self, lo, hi, Llo, Lhi, depth=0):
        mid = (lo + hi) / 2
        Lm = self.log_h(mid)
        vals = (Llo, Lm, Lhi)
        if depth >= 48 or max(vals) - min(vals) <= 4:
            return self._gl(lo, hi)
        return (self._adaptive(lo, mid, Llo, Lm, depth + 1)
                + self._adaptive(mid, hi, Lm, Lhi, depth + 1))

    def _integral(self, t1, t2, cut=80):
        """int_{t1}^{t2} h to high relative accuracy even where h is astronomically small.

        The range is first clipped to where h exceeds e^-cut times its maximum on
        [t1, t2], then split until log h varies by at most 4 on each piece.
        """
        with mpmath.workprec(self.bits):
            a = max(mpmath.mpf(t1), mpmath.mpf(0))
            b = min(mpmath.mpf(t2), mpmath.mpf(1) / 2)
            if b <= a:
                return mpmath.mpf(0)
            p = self._peak(a, b)
            level = self.log_h(p) - cut
            if level == mpmath.ninf:
                return mpmath.mpf(0)
            lo = a if self.log_h(a) >= level else self._level_crossing(a, p, level, True)
            hi = b if self.log_h(b) >= level else self._level_crossing(p, b, level, False)
            if hi <= lo:
                return mpmath.mpf(0)
            return self._adaptive(lo, hi, self.log_h(lo), self.log_h(hi))

    def g(self, t):
        with mpmath.workprec(self.bits):
            t = mpmath.mpf(t)
            half = mpmath.mpf(1) / 2
            if t <= 0:
                return mpmath.mpf(0)
            if t >= half:
                return mpmath.mpf(1)
            if t <= mpmath.mpf(1) / 4:
                return self._integral(0, t) / self.normalization
            return 1 - self._integral(t, half) / self.normalization

    def __call__(self, x):
        """chi at a real point."""
        with mpmath.workprec(self.bits):
            x = mpmath.mpf(x)
            return self.g(x + 1) * self.g(1 - x)

    # -- cutoff as a function of s >= 0 (chi(s) = g(1 - s)) --------------
    def of_s(self, s):
        return self(s)

    def one_minus(self, s):
        """1 - chi(s) for s >= 0, accurate when tiny."""
        with mpmath.workprec(self.bits):
            s = mpmath.mpf(s)
            if s <= mpmath.mpf(1) / 2:
                return mpmath.mpf(0)
            if s >= 1:
                return mpmath.mpf(1)
            if s <= mpmath.mpf(3) / 4:
                return self._integral(1 - s, mpmath.mpf(1) / 2) / self.normalization
            return 1 - self._integral(0, 1 - s) / self.normalization

    def difference(self, s1, s2):
        """chi(s1) - chi(s2) for 0 <= s1 <= s2, accurate when tiny."""
        with mpmath.workprec(self.bits):
            return self._integral(1 - mpmath.mpf(s2), 1 - mpmath.mpf(s1)) / self.normalization

    def log_difference_bound(self, s1, s2):
        """Upper bound for log(chi(s1) - chi(s2)), cheap."""
        with mpmath.workprec(self.bits):
            return (self.log_integral_bound(1 - mpmath.mpf(s2), 1 - mpmath.mpf(s1))
                    - mpmath.log(self.normalization))

    def derivative_s(self, s):
        """d chi / ds at s >= 0."""
        with mpmath.workprec(self.bits):
            return -self.h(1 - mpmath.mpf(s)) / self.normalization


def build_cutoff(eps_cut, bits: int = BITS) -> GevreyCutoff:
    return GevreyCutoff(eps_cut, bits)


@dataclass
class ExtensionEvaluator:
    """Extension data: Gevrey index, growth constant, derivative oracle and cutoff.

    ``deriv_oracle(alpha, beta, w)`` returns D^alpha Dbar^beta f at the complex
    point w.
    """

    a: object
    C1: object
    deriv_oracle: Callable
    cutoff: GevreyCutoff
    term_budget: int = 20000
    bits: int = BITS
    f_real: bool = True

    def __post_init__(self):
        with mpmath.workprec(self.bits):
            self.a = mpmath.mpf(mpmath.mpmathify(self.a))
            self.C1 = mpmath.mpf(mpmath.mpmathify(self.C1))
            if not self.a > 1:
                raise ValueError("Gevrey index must exceed 1")
            if not self.C1 > 0:
                raise ValueError("C1 must be positive")
            self.K = mpmath.mpf(4) ** (self.a - 1) * self.C1 ** 2

    # -- index windows --------------------------------------------------
    def s_of(self, N, r2):
        if N == 0:
            return mpmath.mpf(0)
        return mpmath.mpf(N) ** (2 * (self.a - 1)) * self.K * r2

    def band(self, r2):
        """(first index with s > 1/2, last index with s < 1); empty when r2 == 0."""
        with mpmath.workprec(self.bits):
            if r2 == 0:
                return None
            e = 1 / (2 * (self.a - 1))
            lo = int(mpmath.floor((1 / (2 * self.K * r2)) ** e)) + 1
            hi = int(mpmath.ceil((1 / (self.K * r2)) ** e))
            while lo > 1 and self.s_of(lo - 1, r2) > mpmath.mpf(1) / 2:
                lo -= 1
            while self.s_of(lo, r2) <= mpmath.mpf(1) / 2:
                lo += 1
            while hi > 0 and self.s_of(hi, r2) >= 1:
                hi -= 1
            while self.s_of(hi + 1, r2) < 1:
                hi += 1
            return lo, hi

    def active_max(self, r2) -> int:
        b = self.band(r2)
        if b is None:
            return self.term_budget
        return b[1]

    def _check_budget(self, nmax):
        if nmax > self.term_budget:
            raise TermBudgetError(f"{nmax} orders needed, budget {self.term_budget}")

    # -- generic sums over (alpha, beta) ----------------------------------
    def _geometry(self, y, z):
        y, z = mpmath.mpc(y), mpmath.mpc(z)
        zb, yb = mpmath.conj(z), mpmath.conj(y)
        d = y - zb
        return y, z, (y + zb) / 2, (y - zb) / 2, (z - yb) / 2, d, abs(d) ** 2

    def extend(self, y, z, diagonal_shortcut: bool = True):
        with mpmath.workprec(self.bits):
            y, z, w, u, v, d, r2 = self._geometry(y, z)
            if r2 == 0 and diagonal_shortcut:
                return mpmath.mpc(self.deriv_oracle(0, 0, w))
            nmax = self.active_max(r2)
            if r2 != 0:
                self._check_budget(nmax)
            total = mpmath.mpc(0)
            for N in range(nmax + 1):
                if N and u == 0 and v == 0:
                    break
                chi = self.cutoff.of_s(self.s_of(N, r2))
                if chi == 0:
                    continue
                acc = mpmath.mpc(0)
                for al in range(N + 1):
                    be = N - al
                    mono = u ** al * v ** be
                    if mono == 0:
                        continue
                    acc += self.deriv_oracle(al, be, w) / (factorial(al) * factorial(be)) * mono
                total += chi * acc
            return total

    def dbar(self, y, z, which: str = "ybar"):
        """Exact Wirtinger derivative d/dybar or d/dzbar of F, band terms only."""
        if which not in ("ybar", "zbar"):
            raise ValueError("which must be 'ybar' or 'zbar'")
        with mpmath.workprec(self.bits):
            y, z, w, u, v, d, r2 = self._geometry(y, z)
            if r2 == 0:
                raise ValueError("the vanishing derivative is measured off the diagonal")
            lo, hi = self.band(r2)
            self._check_budget(hi + 1)
            # d|y - zbar|^2 / d(ybar) = y - zbar ; / d(zbar) = -(ybar - z)
            dr2 = d if which == "ybar" else -mpmath.conj(d)
            total = mpmath.mpc(0)
            for N in range(max(lo - 1, 0), hi + 1):
                sN = self.s_of(N, r2)
                diff = self.cutoff.difference(sN, self.s_of(N + 1, r2))
                if diff:
                    acc = mpmath.mpc(0)
                    for al in range(N + 1):
                        be = N - al
                        mono = u ** al * v ** be / (factorial(al) * factorial(be))
                        if which == "ybar":
                            acc += self.deriv_oracle(al, be + 1, w) * mono
                        else:
                            acc += self.deriv_oracle(al + 1, be, w) * mono
                    total += diff * acc / 2
                if lo <= N <= hi:
                    dchi = self.cutoff.derivative_s(sN)
                    if dchi:
                        acc = mpmath.mpc(0)
                        for al in range(N + 1):
                            be = N - al
                            acc += (self.deriv_oracle(al, be, w) / (factorial(al) * factorial(be))
                                    * u ** al * v ** be)
                        total += dchi * (sN / r2) * dr2 * acc
            return total


class RealPartExtension(ExtensionEvaluator):
    """Extension of f(x) = G(Re x); all orders with alpha + beta = N collapse.

    Then D^alpha Dbar^beta f = 2^-N G^(N)(Re w) and the (alpha, beta) sum of
    order N equals 2^-N G^(N)(Re w) (u + v)^N / N!.
    """

    def __init__(self, a, C1, gder: Callable, cutoff: GevreyCutoff, term_budget: int = 20000,
                 bits: int = BITS):
        self.gder = gder

        def oracle(al, be, w):
            N = al + be
            return gder(N, mpmath.re(w)) / mpmath.mpf(2) ** N

        super().__init__(a, C1, oracle, cutoff, term_budget, bits)

    def _term(self, N, w, t):
        # 2^-N G^(N)(Re w) t^N / N!, with t = u + v
        return self.gder(N, mpmath.re(w)) * (t / 2) ** N / mpmath.factorial(N)

    def extend(self, y, z, diagonal_shortcut: bool = True):
        with mpmath.workprec(self.bits):
            y, z, w, u, v, d, r2 = self._geometry(y, z)
            if r2 == 0 and diagonal_shortcut:
                return mpmath.mpc(self.gder(0, mpmath.re(w)))
            nmax = self.active_max(r2)
            if r2 != 0:
                self._check_budget(nmax)
            t = u + v
            total = mpmath.mpc(0)
            for N in range(nmax + 1):
                chi = self.cutoff.of_s(self.s_of(N, r2))
                if chi == 0:
                    continue
                if N and t == 0:
                    break
                total += chi * self._term(N, w, t)
            return total

    def _log_abs(self, x):
        return mpmath.log(abs(x)) if x else mpmath.ninf

    def _pruned_sum(self, items):
        """Sum lazily evaluated terms, skipping those bounded below working precision
        relative to the largest bound. ``items`` holds (log_bound, thunk) pairs."""
        items = [it for it in items if it[0] != mpmath.ninf]
        if not items:
            return mpmath.mpc(0)
        top = max(lb for lb, _ in items)
        floor = top - self.bits * mpmath.log(2) - 10
        return mpmath.fsum(thunk() for lb, thunk in items if lb >= floor)

    def dbar(self, y, z, which: str = "ybar"):
        if which not in ("ybar", "zbar"):
            raise ValueError("which must be 'ybar' or 'zbar'")
        with mpmath.workprec(self.bits):
            y, z, w, u, v, d, r2 = self._geometry(y, z)
            if r2 == 0:
                raise ValueError("the vanishing derivative is measured off the diagonal")
            lo, hi = self.band(r2)
            self._check_budget(hi + 1)
            t = u + v
            dr2 = d if which == "ybar" else -mpmath.conj(d)
            cut = self.cutoff
            log_norm = mpmath.log(cut.normalization)
            items = []
            for N in range(max(lo - 1, 0), hi + 1):
                sN, sN1 = self.s_of(N, r2), self.s_of(N + 1, r2)
                # (1/2) sum_{alpha+beta=N} of one extra order, collapsed
                G = self.gder(N + 1, mpmath.re(w)) * (t / 2) ** N / (4 * mpmath.factorial(N))
                items.append((cut.log_difference_bound(sN, sN1) + self._log_abs(G),
                              lambda sN=sN, sN1=sN1, G=G: cut.difference(sN, sN1) * G))
                if lo <= N <= hi:
                    T = (sN / r2) * dr2 * self._term(N, w, t)
                    items.append((cut.log_h(1 - sN) - log_norm + self._log_abs(T),
                                  lambda sN=sN, T=T: cut.derivative_s(sN) * T))
            return self._pruned_sum(items)

    def difference_from(self, other: "RealPartExtension", y, z):
        """F_self - F_other, summing only the orders where the cutoffs can differ."""
        with mpmath.workprec(self.bits):
            y, z, w, u, v, d, r2 = self._geometry(y, z)
            if r2 == 0:
                return mpmath.mpc(0)
            if (self.a, self.C1) != (other.a, other.C1):
                raise ValueError("extensions must share a and C1")
            lo, hi = self.band(r2)
            t = u + v
            half = mpmath.mpf(1) / 2
            items = []
            for N in range(lo, hi + 1):
                sN = self.s_of(N, r2)
                T = self._term(N, w, t)
                bound = max(self.cutoff.log_integral_bound(1 - sN, half)
                            - mpmath.log(self.cutoff.normalization),
                            other.cutoff.log_integral_bound(1 - sN, half)
                            - mpmath.log(other.cutoff.normalization), mpmath.mpf(0) if sN > 3 * half / 2 else mpmath.ninf)
                items.append((bound + self._log_abs(T),
                              lambda sN=sN, T=T: (other.cutoff.one_minus(sN)
                                                  - self.cutoff.one_minus(sN)) * T))
            return self._pruned_sum(items)


# ----------------------------------------------------------------------
# a Gevrey test function with sharp growth


class LacunaryGevrey:
    """G(t) = sum_j exp(-lam_j^(1/a)) cos(sigma lam_j t), lam_j = 2^j.

    Its derivatives grow exactly like N!^a (the lacunary frequencies prevent
    cancellation), which makes the extension's vanishing rate sharp.
    """

    def __init__(self, a, sigma="1/2", bits: int = BITS):
        with mpmath.workprec(bits):
            self.a = mpmath.mpf(mpmath.mpmathify(a))
            self.sigma = mpmath.mpf(mpmath.mpmathify(sigma))
        self.bits = bits
        self._range: dict = {}

    def _j_range(self, N):
        if N not in self._range:
            with mpmath.workprec(self.bits):
                inv_a = 1 / self.a

                def logterm(j):
                    lam = mpmath.mpf(2) ** j
                    return -lam ** inv_a + N * mpmath.log(self.sigma * lam)

                peak = logterm(0)
                j = 0
                js = []
                cut = self.bits * mpmath.log(2) + 20
                while True:
                    lt = logterm(j)
                    peak = max(peak, lt)
                    js.append(j)
                    lam = mpmath.mpf(2) ** j
                    if lam ** inv_a > self.a * N and lt < peak - cut:
                        break
                    j += 1
                self._range[N] = [j for j in js if logterm(j) > peak - cut]
        return self._range[N]

    def __call__(self, N: int, t):
        """G^(N)(t)"""
        with mpmath.workprec(self.bits):
            t = mpmath.mpf(t)
            total = mpmath.mpf(0)
            phase = N * mpmath.pi / 2
            inv_a = 1 / self.a
            for j in self._j_range(N):
                lam = mpmath.mpf(2) ** j
                om = self.sigma * lam
                total += mpmath.exp(-lam ** inv_a) * om ** N * mpmath.cos(om * t + phase)
            return total

    def f(self, x):
        return self(0, mpmath.re(mpmath.mpc(x)))


class RadialBump:
    """f(x) = exp(-(1 - |x|^2)^(-1/(a-1))) on |x| < 1, extended by 0; Gevrey of index a.

    With f = B(x xbar), D^alpha Dbar^beta f = sum_k C(alpha,k) C(beta,k) k!
    B^(alpha+beta-k)(x xbar) xbar^(alpha-k) x^(beta-k); the Taylor coefficients
    of B = exp(-q) come from m E_m = -sum_j j q_j E_(m-j).
    """

    def __init__(self, a, bits: int = BITS):
        with mpmath.workprec(bits):
            self.a = mpmath.mpf(mpmath.mpmathify(a))
            self.p = 1 / (self.a - 1)
        self.bits = bits
        self._series: dict = {}

    def _taylor(self, t0, M):
        key = t0
        have = self._series.get(key)
        if have is not None and len(have) > M:
            return have
        with mpmath.workprec(self.bits):
            d = 1 - t0
            q = [d ** (-self.p)]
            for j in range(1, M + 1):
                q.append(q[-1] * (self.p + j - 1) / (j * d))
            E = [mpmath.exp(-q[0])]
            for m in range(1, M + 1):
                E.append(-mpmath.fsum(j * q[j] * E[m - j] for j in range(1, m + 1)) / m)
        self._series[key] = E
        return E

    def B_derivative(self, m, t0):
        t0 = mpmath.mpf(t0)
        if t0 >= 1:
            return mpmath.mpf(0)
        return self._taylor(t0, m)[m] * mpmath.factorial(m)

    def __call__(self, al, be, w):
        with mpmath.workprec(self.bits):
            w = mpmath.mpc(w)
            t0 = mpmath.re(w * mpmath.conj(w))
            if t0 >= 1:
                return mpmath.mpc(0)
            wb = mpmath.conj(w)
            total = mpmath.mpc(0)
            for k in range(min(al, be) + 1):
                total += (mpmath.binomial(al, k) * mpmath.binomial(be, k) * mpmath.factorial(k)
                          * self.B_derivative(al + be - k, t0) * wb ** (al - k) * w ** (be - k))
            return total

    def f(self, x):
        return self(0, 0, x)


def estimate_C1(deriv_oracle: Callable, a, points: Sequence, max_order: int = 12,
                bits: int = BITS):
    """2 * max over points and 1 <= alpha + beta <= max_order of (|D^a Dbar^b f| / (a! b!)^a)^(1/N)."""
    with mpmath.workprec(bits):
        a = mpmath.mpf(mpmath.mpmathify(a))
        best = mpmath.mpf(0)
        for p in points:
            for N in range(1, max_order + 1):
                for al in range(N + 1):
                    be = N - al
                    val = abs(deriv_oracle(al, be, mpmath.mpc(p)))
                    if val == 0:
                        continue
                    ratio = (val / (mpmath.factorial(al) * mpmath.factorial(be)) ** a) ** (mpmath.mpf(1) / N)
                    best = max(best, ratio)
        if best == 0:
            raise ValueError("all sampled derivatives vanish; C1 is undefined")
        return 2 * best


def extend(ev: ExtensionEvaluator, y, z):
    return ev.extend(y, z)


def displaced_pair(x0, r):
    """(y, z) with (y + zbar)/2 = x0 and y - zbar = i r."""
    x0 = mpmath.mpc(x0)
    y = x0 + 1j * mpmath.mpf(r) / 2
    z = mpmath.conj(x0 - 1j * mpmath.mpf(r) / 2)
    return y, z


def dbar_extension(ev: ExtensionEvaluator, y, z, which: str = "ybar", method: str = "exact",
                   h=None):
    """D_ybar F or D_zbar F at (y, z).

    ``method="exact"`` differentiates the finite sum term by term.
    ``method="stencil"`` uses central differences in the conjugate direction
    with one Richardson step and step h (default |y - zbar|/64); it can only
    resolve values above roughly 2^-bits |F| / h.
    """
    if method == "exact":
        return ev.dbar(y, z, which)
    if method != "stencil":
        raise ValueError("method must be 'exact' or 'stencil'")
    with mpmath.workprec(ev.bits):
        y, z = mpmath.mpc(y), mpmath.mpc(z)
        r = abs(y - mpmath.conj(z))
        if r == 0:
            raise ValueError("stencil derivative needs y != zbar")
        h = r / 64 if h is None else mpmath.mpf(h)
        centre = ev.band(r ** 2)

        def F(dx, dy):
            if which == "ybar":
                yy, zz = y + mpmath.mpc(dx, dy), z
            else:
                yy, zz = y, z + mpmath.mpc(dx, dy)
            band = ev.band(abs(yy - mpmath.conj(zz)) ** 2)
            if band[0] > centre[1] + 1 or band[1] + 1 < centre[0]:
                raise StencilError("stencil step crosses the whole cutoff transition window")
            return ev.extend(yy, zz)

        def central(step):
            fx = (F(step, 0) - F(-step, 0)) / (2 * step)
            fy = (F(0, step) - F(0, -step)) / (2 * step)
            return (fx + 1j * fy) / 2

        return (4 * central(h / 2) - central(h)) / 3


@dataclass(frozen=True)
class DecayFit:
    """log(-log|g(r)|) = intercept - slope * log r."""

    slope: float
    intercept: float
    r_squared: float
    radii: tuple
    magnitudes: tuple = field(repr=False)

    def to_csv(self, extra: dict | None = None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        cols = ["r", "magnitude"] + list((extra or {}).keys())
        w.writerow(cols)
        for i, (r, m) in enumerate(zip(self.radii, self.magnitudes)):
            row = [mpmath.nstr(r, 10), mpmath.nstr(m, 20)]
            row += [extra[k][i] for k in (extra or {})]
            w.writerow(row)
        return buf.getvalue()


def _fit_loglog(radii, mags) -> DecayFit:
    if len(radii) < 3:
        raise ValueError("need at least three radii")
    if any(b >= a for a, b in zip(radii, radii[1:])):
        raise ValueError("radii must be strictly decreasing")
    for m in mags:
        if m == 0:
            raise NoiseFloorError("derivative magnitude is exactly zero; increase precision")
        if m >= 1:
            raise NoiseFloorError("magnitude is not small; the regime is below the noise floor fit")
    x = np.array([float(mpmath.log(r)) for r in radii])
    yv = np.array([float(mpmath.log(-mpmath.log(m))) for m in mags])
    slope, intercept = np.polyfit(x, yv, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((yv - pred) ** 2))
    ss_tot = float(np.sum((yv - yv.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(float(-slope), float(intercept), r2, tuple(radii), tuple(mags))


def vanishing_rate_fit(ev: ExtensionEvaluator, radii: Sequence, which: str = "ybar",
                       x0=0, method: str = "exact") -> DecayFit:
    """Fit the decay exponent s of |D_bar F| ~ exp(-b r^-s) over the given radii."""
    with mpmath.workprec(ev.bits):
        radii = [mpmath.mpf(r) for r in radii]
        mags = []
        for r in radii:
            y, z = displaced_pair(x0, r)
            mags.append(abs(dbar_extension(ev, y, z, which, method)))
        return _fit_loglog(radii, mags)


def extension_difference(ev1: RealPartExtension, ev2: RealPartExtension, y, z):
    return ev1.difference_from(ev2, y, z)


def difference_rate_fit(ev1: RealPartExtension, ev2: RealPartExtension, radii: Sequence,
                        x0=0) -> DecayFit:
    """Decay exponent of |F_1 - F_2| for extensions built with different cutoffs."""
    with mpmath.workprec(ev1.bits):
        radii = [mpmath.mpf(r) for r in radii]
        mags = [abs(extension_difference(ev1, ev2, *displaced_pair(x0, r))) for r in radii]
        return _fit_loglog(radii, mags)


def calibrated_extension(a, r_max="1/8", min_orders: int = 8, eps_cut="1/2", x_samples=None,
                         bits: int = BITS) -> RealPartExtension:
    """Extension of a lacunary Gevrey-a test function whose frequency scale is chosen
    so that about ``min_orders`` orders survive the cutoff at radius ``r_max``.

    C1 follows the sampling recipe of ``estimate_C1`` and is close to linear in
    the frequency scale, so two rescaling rounds suffice.
    """
    with mpmath.workprec(bits):
        a = mpmath.mpf(mpmath.mpmathify(a))
        r_max = mpmath.mpf(mpmath.mpmathify(r_max))
        cutoff = build_cutoff(eps_cut, bits)
        pts = x_samples or [mpmath.mpf(i) / 4 for i in range(8)]
        target = 1 / (mpmath.mpf(2) ** (a - 1) * r_max * mpmath.mpf(min_orders) ** (a - 1))
        sigma = mpmath.mpf(1)
        for _ in range(3):
            G = LacunaryGevrey(a, sigma, bits)
            C1 = estimate_C1(RealPartExtension(a, 1, G, cutoff, bits=bits).deriv_oracle, a, pts,
                             bits=bits)
            sigma = sigma * target / C1
        G = LacunaryGevrey(a, sigma, bits)
        C1 = estimate_C1(RealPartExtension(a, 1, G, cutoff, bits=bits).deriv_oracle, a, pts, bits=bits)
        return RealPartExtension(a, C1, G, cutoff, bits=bits)


def with_cutoff(ev: RealPartExtension, eps_cut) -> RealPartExtension:
    """Same function and constants, different cutoff."""
    return RealPartExtension(ev.a, ev.C1, ev.gder, build_cutoff(eps_cut, ev.bits), ev.term_budget,
                             ev.bits)
