import random

import mpmath
import pytest

from gevrey_bergman import gevrey as gv

BITS = gv.BITS


def mp(v):
    return mpmath.mpf(mpmath.mpmathify(v))


@pytest.fixture(scope="module")
def cutoff():
    return gv.build_cutoff("1/2")


@pytest.fixture(scope="module")
def ev2():
    return gv.calibrated_extension(2, min_orders=16)


# -- cutoff --------------------------------------------------------------------


def test_cutoff_sandwich(cutoff):
    with mpmath.workprec(BITS):
        xs = [mpmath.mpf(-3) / 2 + 3 * mpmath.mpf(i) / 999 for i in range(1000)]
        vals = [cutoff(x) for x in xs]
        for x, v in zip(xs, vals):
            assert 0 <= v <= 1
            if abs(x) <= mpmath.mpf(1) / 2:
                assert v == 1
            if abs(x) >= 1:
                assert v == 0
        tail = [v for x, v in zip(xs, vals) if mpmath.mpf(1) / 2 <= x <= 1]
        assert all(b <= a for a, b in zip(tail, tail[1:]))


def test_cutoff_examples(cutoff):
    assert cutoff(0) == 1 and cutoff(mpmath.mpf(3) / 2) == 0
    with mpmath.workprec(BITS):
        for eps in ("1/2", "1", "3"):
            c = gv.build_cutoff(eps)
            assert abs(c.f_eps(1) - mpmath.exp(-1)) < mpmath.mpf(2) ** -250


def test_cutoff_midpoint_and_complement(cutoff):
    with mpmath.workprec(BITS):
        # g(1/4) = 1/2 by the symmetry t -> 1/2 - t of the integrand; the integral
        # clips the integrand below e^-80 of its peak
        assert abs(cutoff.g(mpmath.mpf(1) / 4) - mpmath.mpf(1) / 2) < mpmath.exp(-80)
        for s in ("0.55", "0.7", "0.9", "0.99"):
            assert abs(cutoff.one_minus(mp(s)) - (1 - cutoff.of_s(mp(s)))) < mpmath.mpf("1e-60")
        s1, s2 = mp("0.95"), mp("0.97")
        assert abs(cutoff.difference(s1, s2) - (cutoff.of_s(s1) - cutoff.of_s(s2))) < mpmath.mpf("1e-60")
        assert mpmath.log(cutoff.difference(s1, s2)) <= cutoff.log_difference_bound(s1, s2)


def test_cutoff_difference_next_to_one(cutoff):
    # an interval of width 1e-16 at the flat end of the cutoff: the value is far
    # below any float but must stay positive and come back quickly
    with mpmath.workprec(BITS):
        d = cutoff.difference(1 - mpmath.mpf("1e-16"), 1)
        assert 0 < d and mpmath.log(d) < -1e31
        assert mpmath.log(d) <= cutoff.log_difference_bound(1 - mpmath.mpf("1e-16"), 1)


def test_cutoff_derivative(cutoff):
    with mpmath.workprec(BITS):
        s = mp("0.8")
        h = mpmath.mpf("1e-20")
        fd = (cutoff.of_s(s + h) - cutoff.of_s(s - h)) / (2 * h)
        assert abs(fd - cutoff.derivative_s(s)) < mpmath.mpf("1e-30")


def test_cutoff_rejects_bad_eps():
    with pytest.raises(ValueError):
        gv.build_cutoff(0)


# -- extension on simple functions ---------------------------------------------


def _poly_oracle(table):
    def oracle(al, be, w):
        fn = table.get((al, be))
        return fn(w) if fn else mpmath.mpc(0)

    return oracle


ONE = {(0, 0): lambda w: mpmath.mpc(1)}
ABS2 = {
    (0, 0): lambda w: w * mpmath.conj(w),
    (1, 0): lambda w: mpmath.conj(w),
    (0, 1): lambda w: w,
    (1, 1): lambda w: mpmath.mpc(1),
}


def test_constant_extends_to_constant(cutoff):
    ev = gv.ExtensionEvaluator(2, 1, _poly_oracle(ONE), cutoff)
    for y, z in [(0.3, 0.2j), (0.1 + 0.1j, 0.05), (0.7, 0.6)]:
        assert gv.extend(ev, y, z) == 1
        assert gv.dbar_extension(ev, y, z) == 0
        assert gv.dbar_extension(ev, y, z, "zbar") == 0
    with pytest.raises(ValueError):
        gv.dbar_extension(ev, 0.7, 0.7)


def test_abs_squared_polarizes(cutoff):
    ev = gv.ExtensionEvaluator(2, 1, _poly_oracle(ABS2), cutoff)
    with mpmath.workprec(BITS):
        for y, z in [(mpmath.mpc("0.3", "0.1"), mpmath.mpc("0.25", "-0.05")),
                     (mpmath.mpc("-0.2", "0.4"), mpmath.mpc("-0.22", "-0.35"))]:
            assert ev.s_of(2, abs(y - mpmath.conj(z)) ** 2) <= mpmath.mpf(1) / 2
            assert abs(gv.extend(ev, y, z) - y * z) < mpmath.mpf(2) ** -240
            # truncated sum is an exact polynomial in (y, z): no antiholomorphic part
            assert abs(gv.dbar_extension(ev, y, z)) < mpmath.mpf(2) ** -240
            st = gv.dbar_extension(ev, y, z, method="stencil")
            assert abs(st) < mpmath.mpf("1e-50")


def test_noise_floor_refusal(cutoff):
    ev = gv.ExtensionEvaluator(2, 1, _poly_oracle(ABS2), cutoff)
    with pytest.raises(gv.NoiseFloorError):
        gv.vanishing_rate_fit(ev, [mp("1/8"), mp("1/16"), mp("1/32")], x0=mp("0.2"))


def test_fit_needs_decreasing_radii(ev2):
    with pytest.raises(ValueError):
        gv.vanishing_rate_fit(ev2, [mp("1/16"), mp("1/8"), mp("1/32")])


def test_term_budget(cutoff):
    ev = gv.ExtensionEvaluator(2, 1, _poly_oracle(ONE), cutoff, term_budget=10)
    with pytest.raises(gv.TermBudgetError):
        gv.extend(ev, mp("0.1"), mp("0.1") + mpmath.mpf("1e-6") * 1j)


# -- extension of a Gevrey function ----------------------------------------------


def test_lacunary_derivatives_match_numerical_ones():
    G = gv.LacunaryGevrey(2, "1/2")
    with mpmath.workprec(BITS):
        t, h = mp("0.3"), mpmath.mpf("1e-20")
        for n in (1, 2, 3, 4):
            num = (G(n - 1, t + h) - G(n - 1, t - h)) / (2 * h)
            assert abs(num - G(n, t)) < mpmath.mpf("1e-30") * (1 + abs(G(n, t)))


@pytest.mark.parametrize("a", ["3/2", "2", "3"])
def test_restriction_identity(a):
    ev = gv.calibrated_extension(a, min_orders=8)
    gen = random.Random(7)
    with mpmath.workprec(BITS):
        for _ in range(25):
            x = mpmath.mpc(gen.uniform(-0.7, 0.7), gen.uniform(-0.7, 0.7))
            F = ev.extend(x, mpmath.conj(x), diagonal_shortcut=False)
            assert abs(F - ev.gder.f(x)) <= mpmath.mpf("1e-10")


def test_restriction_identity_bump():
    bump = gv.RadialBump(2)
    with mpmath.workprec(BITS):
        C1 = gv.estimate_C1(bump, 2, [mpmath.mpf(i) / 10 for i in range(0, 9, 2)])
        ev = gv.ExtensionEvaluator(2, C1, bump, gv.build_cutoff("1/2"))
        for x in (mpmath.mpc("0.1", "0.2"), mpmath.mpc("-0.4", "0.3"), mpmath.mpc("0.6", "-0.1")):
            assert abs(ev.extend(x, mpmath.conj(x), diagonal_shortcut=False) - bump.f(x)) <= mpmath.mpf("1e-10")


def test_bump_derivatives_match_numerical_ones():
    bump = gv.RadialBump(2)
    with mpmath.workprec(BITS):
        w = mpmath.mpc("0.2", "0.1")
        # D = d/dw, Dbar = d/dwbar on f = B(|w|^2): check D Dbar f against the real Laplacian / 4
        h = mpmath.mpf("1e-15")
        lap = (bump.f(w + h) + bump.f(w - h) + bump.f(w + 1j * h) + bump.f(w - 1j * h) - 4 * bump.f(w)) / h ** 2
        assert abs(bump(1, 1, w) - lap / 4) < mpmath.mpf("1e-25")
        # D f by a central difference along the real and imaginary axes
        dx = (bump.f(w + h) - bump.f(w - h)) / (2 * h)
        dy = (bump.f(w + 1j * h) - bump.f(w - 1j * h)) / (2 * h)
        assert abs(bump(1, 0, w) - (dx - 1j * dy) / 2) < mpmath.mpf("1e-25")


def test_real_symmetry(ev2):
    with mpmath.workprec(BITS):
        for y, z in [gv.displaced_pair(mp("0.1"), mp("1/8")), (mpmath.mpc("0.2", "0.05"), mpmath.mpc("0.15", "0.01"))]:
            F1 = ev2.extend(y, z)
            F2 = ev2.extend(mpmath.conj(z), mpmath.conj(y))
            assert abs(F1 - mpmath.conj(F2)) < mpmath.mpf("1e-60") * (1 + abs(F1))


def test_generic_and_real_part_evaluators_agree(ev2):
    generic = gv.ExtensionEvaluator(ev2.a, ev2.C1, ev2.deriv_oracle, ev2.cutoff)
    with mpmath.workprec(BITS):
        y, z = gv.displaced_pair(mp("0.1"), mp("1/8"))
        assert abs(generic.extend(y, z) - ev2.extend(y, z)) < mpmath.mpf("1e-60")
        for which in ("ybar", "zbar"):
            d1 = generic.dbar(y, z, which)
            d2 = ev2.dbar(y, z, which)
            assert abs(d1 - d2) <= mpmath.mpf("1e-40") * abs(d2)


def test_active_window(ev2):
    with mpmath.workprec(BITS):
        for r in (mp("1/8"), mp("1/32"), mp("1/256")):
            r2 = r ** 2
            lo, hi = ev2.band(r2)
            half = mpmath.mpf(1) / 2
            assert ev2.s_of(lo - 1, r2) <= half < ev2.s_of(lo, r2)
            assert ev2.s_of(hi, r2) < 1 <= ev2.s_of(hi + 1, r2)
            assert ev2.cutoff.of_s(ev2.s_of(hi + 1, r2)) == 0
            assert ev2.cutoff.of_s(ev2.s_of(lo - 1, r2)) == 1
            # s_N < 1 exactly when N < (2 C1 r)^(-1/(a-1))
            assert hi < (2 * ev2.C1 * r) ** (-1 / (ev2.a - 1)) <= hi + 1


@pytest.mark.parametrize("a", ["3/2", "2"])
def test_stencil_cross_check(a):
    ev = gv.calibrated_extension(a, min_orders=8 if a == "3/2" else 16)
    with mpmath.workprec(BITS):
        y, z = gv.displaced_pair(mp("0.1"), mp("1/8"))
        exact = gv.dbar_extension(ev, y, z)
        stencil = gv.dbar_extension(ev, y, z, method="stencil")
        assert abs(stencil - exact) <= mpmath.mpf("0.05") * abs(exact)


def test_stencil_refuses_wide_steps(ev2):
    y, z = gv.displaced_pair(mp("0.1"), mp("1/8"))
    with pytest.raises(gv.StencilError):
        gv.dbar_extension(ev2, y, z, method="stencil", h=mp("0.1"))


def test_dbar_decays_in_both_directions(ev2):
    radii = [mpmath.mpf(2) ** -j for j in range(3, 9)]
    fy = gv.vanishing_rate_fit(ev2, radii, "ybar", x0=mp("0.1"))
    fz = gv.vanishing_rate_fit(ev2, radii, "zbar", x0=mp("0.1"))
    for fit in (fy, fz):
        assert abs(fit.slope - 1) <= 0.2
        assert all(b < a for a, b in zip(fit.magnitudes, fit.magnitudes[1:]))
    assert fy.to_csv().startswith("r,magnitude")


@pytest.mark.parametrize("a,orders", [("3", 40), ("2", 16), ("3/2", 8)])
def test_uniqueness_modulo_flat_terms(a, orders):
    ev = gv.calibrated_extension(a, min_orders=orders)
    other = gv.with_cutoff(ev, "1/3")
    radii = [mpmath.mpf(2) ** -j for j in range(4, 9)]
    fit = gv.difference_rate_fit(ev, other, radii, x0=mp("0.1"))
    target = 1 / (float(mp(a)) - 1)
    assert abs(fit.slope - target) <= 0.25 * target
