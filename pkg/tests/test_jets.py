from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from gevrey_bergman import _kernels_py
from gevrey_bergman.jets import (
    CenteringError,
    DimensionError,
    Jet,
    affine_blend_integral,
    invert_map,
    jet_compose,
    jet_reciprocal,
    reindex,
)
from gevrey_bergman.potentials import fubini_study, polarize
from gevrey_bergman.recursion import compute_theta
from gevrey_bergman.scalars import RATIONAL, ModeMismatchError, bigfloat

F = Fraction


def J(d, T, terms, mode=RATIONAL):
    return Jet.from_terms(d, T, terms, mode=mode)


def x(d, T, i=0):
    return Jet.variable(i, d, T)


# -- hand examples ------------------------------------------------------


def test_sum_cancels():
    assert (1 + x(1, 3)) + (1 - x(1, 3)) == Jet.constant(2, 1, 3)


def test_product_of_binomials():
    assert (1 + x(1, 2)) * (1 - x(1, 2)) == J(1, 2, {(0,): 1, (2,): -1})


def test_product_truncates():
    assert (x(2, 1, 0) * x(2, 1, 1)).is_zero()


def test_product_takes_min_truncation():
    assert (x(2, 5) * x(2, 3, 1)).T == 3


def test_derivatives():
    f = J(2, 4, {(2, 1): 1})
    assert f.derive(0) == J(2, 3, {(1, 1): 2})
    assert Jet.constant(7, 2, 4).derive(1).is_zero()
    psi = J(2, 4, {(1, 1): 1, (2, 2): F(1, 4)})
    assert psi.derive(1) == J(2, 3, {(1, 0): 1, (2, 1): F(1, 2)})


def test_derive_out_of_range():
    with pytest.raises(DimensionError):
        x(2, 3).derive(2)


def test_geometric_reciprocal():
    assert jet_reciprocal(1 + x(1, 3)) == J(1, 3, {(0,): 1, (1,): -1, (2,): 1, (3,): -1})


def test_constant_reciprocal_is_exact():
    r = jet_reciprocal(Jet.constant(2, 1, 2))
    assert r.constant_term.re == F(1, 2)


def test_reciprocal_of_fubini_study_hessian():
    # psi_yz = (1 + yz)^-2 for psi = log(1 + yz)
    h = J(2, 2, {(0, 0): 1, (1, 1): -2})
    assert jet_reciprocal(h) == J(2, 2, {(0, 0): 1, (1, 1): 2})


def test_reciprocal_of_zero_constant_term():
    with pytest.raises(ZeroDivisionError):
        jet_reciprocal(x(1, 3))


def test_compose_square():
    w2 = J(1, 3, {(2,): 1})
    s = x(2, 3, 0) + x(2, 3, 1)
    assert jet_compose(w2, [s]) == J(2, 3, {(2, 0): 1, (1, 1): 2, (0, 2): 1})


def test_compose_rejects_off_centre_substitution():
    with pytest.raises(CenteringError):
        jet_compose(J(1, 3, {(2,): 1}), [1 + x(1, 3)])


def test_mode_mismatch():
    with pytest.raises(ModeMismatchError):
        x(1, 2) + x(1, 2).to_mode(bigfloat(128))


def test_dimension_mismatch():
    with pytest.raises(DimensionError):
        x(1, 2) * x(2, 2)


def test_blend_constant_and_linear():
    one = Jet.constant(1, 2, 3)
    assert affine_blend_integral(one, 1) == Jet.constant(1, 3, 3)
    w = x(2, 3, 0)
    assert affine_blend_integral(w, 1) == J(3, 3, {(1, 0, 0): F(1, 2), (0, 1, 0): F(1, 2)})


FS_THETA = {
    (0, 0, 1): 1,
    (1, 0, 2): F(-1, 2), (0, 1, 2): F(-1, 2),
    (2, 0, 3): F(1, 3), (1, 1, 3): F(1, 3), (0, 2, 3): F(1, 3),
}


def test_blend_of_fubini_study_gradient():
    # psi_x = z / (1 + wz) truncated at total degree 5
    psi_x = J(2, 5, {(0, 1): 1, (1, 2): -1, (2, 3): 1})
    assert affine_blend_integral(psi_x, 1) == J(3, 5, FS_THETA)


def test_fubini_study_theta_from_potential():
    psi = polarize(fubini_study().phi_jet(6))
    (theta,) = compute_theta(psi)
    assert theta == J(3, 5, FS_THETA)


def test_invert_identity():
    (z,) = invert_map([Jet.displacement(2, 3, 4)], 1)
    assert z == Jet.displacement(2, 3, 4)


def test_invert_series_reversion():
    (z,) = invert_map([J(3, 3, {(0, 0, 1): 1, (0, 0, 2): 1})], 1)
    assert z == J(3, 3, {(0, 0, 1): 1, (0, 0, 2): -1, (0, 0, 3): 2})


def test_invert_fubini_study_theta():
    theta = J(3, 5, FS_THETA)
    (z,) = invert_map([theta], 1)
    assert z.truncate(3) == J(3, 3, {(0, 0, 1): 1, (1, 0, 2): F(1, 2), (0, 1, 2): F(1, 2)})
    back = jet_compose(theta, [x(3, 5, 0), x(3, 5, 1), z])
    assert back == Jet.displacement(2, 3, 5)


def test_invert_two_dimensional_map():
    d, T = 6, 4
    z1 = Jet.displacement(4, d, T)
    z2 = Jet.displacement(5, d, T)
    theta = [z1 + z1 * z2 + x(d, T, 0) * z2 * z2, z2 - z1 * z1 + x(d, T, 3) * z1]
    zs = invert_map(theta, 2)
    coords = [Jet.variable(i, d, T, zs[0].base) for i in range(4)]
    for i in range(2):
        assert jet_compose(theta[i], coords + zs) == Jet.displacement(4 + i, d, T)


def test_json_roundtrip_example():
    f = J(2, 3, {(1, 0): F(2, 3), (0, 2): (1, -5)})
    assert Jet.from_json(f.to_json()) == f


# -- property tests -----------------------------------------------------

coef = st.builds(Fraction, st.integers(-9, 9), st.integers(1, 7))


@st.composite
def jets(draw, d=None, T=None, max_terms=5, min_degree=0, const=None, complex_coeffs=True):
    d = draw(st.integers(1, 6)) if d is None else d
    T = draw(st.integers(0, 8)) if T is None else T
    exps = st.lists(st.integers(0, T), min_size=d, max_size=d).map(tuple).filter(
        lambda e: min_degree <= sum(e) <= T)
    vals = st.tuples(coef, coef if complex_coeffs else st.just(Fraction(0)))
    terms = draw(st.dictionaries(exps, vals, max_size=max_terms))
    if const is not None:
        terms[(0,) * d] = const
    return Jet.from_terms(d, T, terms)


@st.composite
def jet_triples(draw):
    d = draw(st.integers(1, 6))
    T = draw(st.integers(0, 8))
    return tuple(draw(jets(d, T)) for _ in range(3))


@given(jet_triples())
def test_ring_axioms(fgh):
    f, g, h = fgh
    assert (f * g) * h == f * (g * h)
    assert f * (g + h) == f * g + f * h
    assert f * g == g * f
    assert f + g == g + f


nonzero = coef.filter(lambda c: c != 0)


@given(st.data())
def test_reciprocal_property(data):
    d = data.draw(st.integers(1, 4))
    T = data.draw(st.integers(0, 6))
    c0 = (data.draw(nonzero), data.draw(coef))
    f = data.draw(jets(d, T, max_terms=4, const=c0))
    assert (f * jet_reciprocal(f)).agrees(Jet.constant(1, d, T))


@given(st.data())
def test_invert_then_compose_is_identity(data):
    T = data.draw(st.integers(1, 6))
    lead = data.draw(nonzero)
    higher = data.draw(jets(3, T, max_terms=4, min_degree=2))
    theta = Jet.displacement(2, 3, T).scale(lead) + higher
    (z,) = invert_map([theta], 1)
    back = jet_compose(theta, [x(3, T, 0), x(3, T, 1), z])
    assert back == Jet.displacement(2, 3, T)


@given(st.data())
def test_blend_on_the_diagonal(data):
    n = data.draw(st.integers(1, 2))
    f = data.draw(jets(2 * n, data.draw(st.integers(0, 6))))
    F3 = affine_blend_integral(f, n)
    # y -> x restricts the blend to f itself
    mapping = list(range(n)) + list(range(n)) + [n + i for i in range(n)]
    assert reindex(F3, mapping, 2 * n) == f


@given(st.data())
def test_derive_inverts_integrate(data):
    f = data.draw(jets())
    var = data.draw(st.integers(0, f.d - 1))
    assert f.integrate(var).derive(var) == f


@given(jets())
def test_json_roundtrip(f):
    assert Jet.from_json(f.to_json()) == f


def _max_gap(a: Jet, b: Jet):
    keys = set(a.re) | set(a.im) | set(b.re) | set(b.im)
    worst = mpmath.mpf(0)
    for e in keys:
        worst = max(worst, abs(a.coeff(e).to_mpc(200) - b.coeff(e).to_mpc(200)))
    return worst


@given(st.data())
def test_bigfloat_tracks_rational(data):
    d = data.draw(st.integers(1, 4))
    T = data.draw(st.integers(0, 6))
    f = data.draw(jets(d, T, const=(data.draw(nonzero), Fraction(0))))
    g = data.draw(jets(d, T))
    bf = bigfloat(160)
    exact = (f * g + f.reciprocal()).to_mode(bf)
    approx = f.to_mode(bf) * g.to_mode(bf) + f.to_mode(bf).reciprocal()
    scale = 1 + max([abs(c.to_mpc(200)) for _, c in exact.items()] or [0])
    assert _max_gap(exact, approx) <= mpmath.mpf(2) ** -140 * scale


def test_bigfloat_json_roundtrip():
    f = J(2, 3, {(1, 0): F(1, 3), (1, 2): F(-2, 7)}).to_mode(bigfloat(128))
    g = Jet.from_json(f.to_json())
    assert _max_gap(f, g) <= mpmath.mpf(2) ** -126


# -- compiled kernel agrees with the Python one -------------------------

ckernels = pytest.importorskip("gevrey_bergman._ckernels")


@st.composite
def term_dicts(draw, d, T):
    import gmpy2

    exps = st.lists(st.integers(0, T), min_size=d, max_size=d).map(tuple).filter(lambda e: sum(e) <= T)
    raw = draw(st.dictionaries(exps, coef.filter(lambda c: c != 0), max_size=8))
    return {e: gmpy2.mpq(c.numerator, c.denominator) for e, c in raw.items()}


@given(st.data())
def test_kernels_agree(data):
    d = data.draw(st.integers(1, 6))
    T = data.draw(st.integers(0, 8))
    a = data.draw(term_dicts(d, T))
    b = data.draw(term_dicts(d, T))
    assert ckernels.mul_trunc(a, b, d, T) == _kernels_py.mul_trunc(a, b, d, T)
    if d >= 2:
        pairs = [(0, d - 1)] + ([(1, d - 2)] if d >= 4 else [])
        assert ckernels.apply_laplace_pair(a, pairs) == _kernels_py.apply_laplace_pair(a, pairs)
