from fractions import Fraction
from functools import lru_cache
from itertools import product
from math import comb, factorial, log

import mpmath
import pytest

from gevrey_bergman.growth import (
    INEQUALITY,
    WORST_CASE,
    check_lower_bound,
    growth_fit,
    majorant_recursion,
)

F = Fraction


def naive_entries(p: Fraction, C: Fraction, prec: int = 300):
    """Unfactored worst-case recursion: every (alpha, beta) pair is summed separately."""
    pm = mpmath.mpf(p.numerator) / p.denominator
    Cm = mpmath.mpf(C.numerator) / C.denominator

    def fp(n):
        return mpmath.factorial(n) ** pm

    def f(mu, mu0):
        out = mpmath.mpf(1)
        for a, b in zip(mu, mu0):
            out *= comb(a, b) * fp(a - b) * Cm ** (a - b)
        return out

    @lru_cache(maxsize=None)
    def b(m, mu, nu):
        if m == 0:
            return mpmath.mpf(1) if mu == (0, 0) and nu == (0, 0) else mpmath.mpf(0)
        total = mpmath.mpf(0)
        for l in range(1, m + 1):
            for alpha, beta in product(range(l + 1), repeat=2):
                for xi in range(alpha + beta + 1):
                    for eta in range(alpha + beta + 1 - xi):
                        w = Cm ** (xi + eta) / (fp(xi) * fp(eta))
                        for mu0 in product(range(mu[0] + 1), range(mu[1] + 1)):
                            for nu0 in product(range(nu[0] + 1), range(nu[1] + 1)):
                                prev = b(m - l, (mu0[0], mu0[1] + xi), (nu0[0], nu0[1] + eta))
                                if prev:
                                    total += (mpmath.factorial(l) ** (2 * pm - 1) * Cm ** l * w * prev
                                              * f(mu, mu0) * f(nu, nu0))
        return total

    def entry(m, mu, nu):
        with mpmath.workprec(prec):
            return b(m, tuple(mu), tuple(nu))

    return entry


def _encloses(e, value):
    lo, hi = mpmath.mpf(e.lo), mpmath.mpf(e.hi)
    slack = mpmath.mpf(2) ** -150 * abs(value)
    return lo - slack <= value <= hi + slack and hi - lo <= mpmath.mpf(2) ** -150 * hi


@pytest.mark.parametrize("a,eps,C", [(2, F(1, 2), 1), (F(3, 2), F(1, 4), 1), (2, F(1, 2), 2)])
def test_matches_naive_recursion(a, eps, C):
    table = majorant_recursion(1, a, eps, C, M=3, index_cap=2, bits=256)
    naive = naive_entries(F(a) + eps, F(C))
    for m in (1, 2, 3):
        for mu in [(0, 0), (1, 0), (0, 1), (1, 1)]:
            for nu in [(0, 0), (0, 2), (2, 0)]:
                with mpmath.workprec(300):
                    assert _encloses(table.entry(m, mu, nu), naive(m, mu, nu)), (m, mu, nu)


def test_first_step_closed_form():
    for a, eps, C in [(2, F(1, 2), 1), (F(3, 2), F(1, 4), 3)]:
        p = F(a) + eps
        t = majorant_recursion(1, a, eps, C, M=1, index_cap=4)
        with mpmath.workprec(192):
            pm = mpmath.mpf(p.numerator) / p.denominator
            for mu, nu in [((0, 0), (0, 0)), ((1, 2), (0, 1)), ((3, 0), (2, 2))]:
                fact = 1
                for v in mu + nu:
                    fact *= factorial(v)
                want = 4 * mpmath.mpf(C) ** (1 + sum(mu) + sum(nu)) * mpmath.mpf(fact) ** pm
                e = t.entry(1, mu, nu)
                assert mpmath.mpf(e.lo) <= want * (1 + mpmath.mpf(2) ** -180)
                assert want <= mpmath.mpf(e.hi) * (1 + mpmath.mpf(2) ** -180)


def test_initial_data():
    t = majorant_recursion(1, 2, F(1, 2), 1, M=2)
    assert t._lo.entry(0, (0, 0), (0, 0)) == 1
    assert t._lo.entry(0, (0, 1), (0, 0)) == 0


def test_second_step_goldens(goldens):
    g = goldens["majorant_worst_case_lo"]
    with mpmath.workprec(192):
        assert abs(mpmath.mpf(g["2,1/2"]["2,0"]) - 196) < mpmath.mpf("1e-50")
    for key, (a, eps) in {"2,1/2": (2, F(1, 2)), "3/2,1/4": (F(3, 2), F(1, 4))}.items():
        t = majorant_recursion(1, a, eps, 1, M=3, index_cap=2)
        for mk, val in g[key].items():
            m, k = map(int, mk.split(","))
            with mpmath.workprec(192):
                got = mpmath.mpf(str(t.entry(m, (0, 0), (0, k)).lo))
                assert abs(got - mpmath.mpf(val)) <= mpmath.mpf("1e-50") * got


def test_second_step_closed_form():
    # 52 + 9 * 2^(2p - 1), summed by hand over the four l = 1 (alpha, beta) pairs and l = 2
    for a, eps in [(2, F(1, 2)), (F(3, 2), F(1, 4))]:
        p = F(a) + eps
        t = majorant_recursion(1, a, eps, 1, M=2)
        with mpmath.workprec(192):
            want = 52 + 9 * mpmath.mpf(2) ** (2 * mpmath.mpf(p.numerator) / p.denominator - 1)
            assert abs(mpmath.mpf(t.entry(2).lo) - want) < mpmath.mpf("1e-40") * want


def test_symmetric_in_mu_nu():
    t = majorant_recursion(1, F(3, 2), F(1, 4), 1, M=3, index_cap=3)
    for mu, nu in [((0, 1), (0, 0)), ((1, 2), (0, 1)), ((2, 0), (1, 1))]:
        e1, e2 = t.entry(3, mu, nu), t.entry(3, nu, mu)
        # equal values; the two enclosures differ only by rounding order
        assert e1.lo <= e2.hi and e2.lo <= e1.hi
        assert abs(e1.lo - e2.lo) <= e1.lo * 2 ** -180


def test_monotone_in_C():
    t1 = majorant_recursion(1, 2, F(1, 2), 1, M=3, index_cap=2)
    t2 = majorant_recursion(1, 2, F(1, 2), 2, M=3, index_cap=2)
    for m in (1, 2, 3):
        for k in range(3):
            assert t1.entry(m, (0, 0), (0, k)).hi <= t2.entry(m, (0, 0), (0, k)).lo


def test_inequality_mode_reports_upper_end():
    t = majorant_recursion(1, 2, F(1, 2), 2, M=2, mode=INEQUALITY)
    e = t.entry(2, (0, 1), (1, 0))
    assert e.lo <= e.hi and t.bound(2, (0, 1), (1, 0)) == e.hi


def test_lower_bound_small_cases():
    for a, eps in [(2, F(1, 2)), (F(3, 2), F(1, 4))]:
        t = majorant_recursion(1, a, eps, 1, M=2, index_cap=2)
        rep = check_lower_bound(t, 1, 2, slots=("nu",))
        p = float(F(a) + eps)
        rows = {(m, k): r for m, k, _, _, _, r in rep.rows}
        assert rep.passed
        assert abs(float(rows[(1, 0)]) - 4 * 2 ** p) < 1e-9
        assert abs(float(rows[(1, 2)]) - 4 * 2 ** p) < 1e-9


def test_lower_bound_requires_worst_case_with_unit_C():
    with pytest.raises(ValueError):
        check_lower_bound(majorant_recursion(1, 2, F(1, 2), 2, M=1), 1, 1)


def test_bad_parameters():
    with pytest.raises(ValueError):
        majorant_recursion(2, 2, F(1, 2), 1, M=2)
    with pytest.raises(ValueError):
        majorant_recursion(1, 1, F(1, 2), 1, M=2)
    with pytest.raises(ValueError):
        majorant_recursion(1, 2, 0, 1, M=2)


def test_csv_export():
    t = majorant_recursion(1, 2, F(1, 2), 1, M=2, index_cap=1)
    text = check_lower_bound(t, 2, 1).to_csv()
    assert text.splitlines()[0] == "m,k,slot,entry,lower_bound,margin"
    assert len(text.splitlines()) == 1 + 2 * 2 * 2


def test_fit_recovers_squared_factorial():
    fit = growth_fit([factorial(m) ** 2 for m in range(9)])
    assert abs(fit.sigma - 2) < 1e-10 and abs(fit.logC) < 1e-10 and fit.r_squared == pytest.approx(1)


def test_fit_recovers_geometric_factorial():
    fit = growth_fit([3 ** m * factorial(m) for m in range(9)])
    assert abs(fit.sigma - 1) < 1e-10 and abs(fit.logC - log(3)) < 1e-10


def test_fit_errors():
    with pytest.raises(ValueError):
        growth_fit([1, 2])
    with pytest.raises(ValueError):
        growth_fit([1, 0, 2, 3])


def test_fit_on_quartic_sup_majorants(goldens):
    vals = [mpmath.mpf(v) for v in goldens["quartic_sup_majorant_r1_4_q2"]]
    fit = growth_fit(vals, (2, 8))
    assert fit.m_range == (2, 8) and 0 <= fit.r_squared <= 1 and mpmath.isfinite(fit.sigma)
