"""Truncated multivariate power series ("jets") over Q(i) or big-float C.

A :class:`Jet` stores the Taylor coefficients of a germ at ``base`` in the
displacement variables ``v - base``. Real and imaginary parts live in two
separate coefficient dicts so that the (very common) real case costs a single
real product. All operations return new jets; nothing is mutated after
construction.
"""

from __future__ import annotations

import json
from math import comb, factorial
from typing import Iterable, Sequence

import gmpy2
import mpmath

from . import kernels
from .scalars import RATIONAL, CScalar, ModeMismatchError, ScalarMode, to_mpf

__all__ = [
    "Jet",
    "JetError",
    "DimensionError",
    "CenteringError",
    "ConvergenceError",
    "jet_add",
    "jet_mul",
    "jet_scale",
    "jet_derive",
    "jet_reciprocal",
    "jet_compose",
    "affine_blend_integral",
    "blend_integral",
    "reindex",
    "invert_map",
    "hermitian_conjugate",
]


class JetError(ValueError):
    pass


class DimensionError(JetError):
    pass


class CenteringError(JetError):
    pass


class ConvergenceError(JetError):
    pass


def _grlex(exps):
    return (sum(exps), tuple(-e for e in exps))


def _clean(terms, T):
    return {k: v for k, v in terms.items() if v and sum(k) <= T}


def _add_dicts(a, b, sign=1):
    out = dict(a)
    for k, v in b.items():
        if k in out:
            w = out[k] + v if sign > 0 else out[k] - v
            if w:
                out[k] = w
            else:
                del out[k]
        else:
            out[k] = v if sign > 0 else -v
    return out


def _scale_dict(a, c):
    if not c:
        return {}
    return {k: v * c for k, v in a.items()}


class Jet:
    """Truncated power series in ``d`` variables, valid through total degree ``T``."""

    __slots__ = ("d", "T", "re", "im", "base", "mode")

    def __init__(self, d: int, T: int, re=None, im=None, base=None, mode: ScalarMode = RATIONAL):
        if d < 0 or T < 0:
            raise DimensionError("d and T must be non-negative")
        self.d = d
        self.T = T
        self.mode = mode
        self.re = _clean(re or {}, T)
        self.im = _clean(im or {}, T)
        if base is None:
            base = tuple(CScalar(mode.zero, mode.zero, mode) for _ in range(d))
        else:
            base = tuple(CScalar.of(b, mode) for b in base)
            if len(base) != d:
                raise DimensionError("base point length must equal d")
        self.base = base

    # -- construction -------------------------------------------------
    @classmethod
    def from_terms(cls, d, T, terms, base=None, mode: ScalarMode = RATIONAL) -> "Jet":
        """Build from ``{exps: value}`` where value is int/str/Fraction/complex/CScalar."""
        re, im = {}, {}
        with mode.context():
            for exps, val in terms.items():
                exps = tuple(exps)
                if len(exps) != d:
                    raise DimensionError(f"exponent {exps} has wrong length for d={d}")
                c = CScalar.of(val, mode)
                if c.re:
                    re[exps] = re.get(exps, mode.zero) + c.re
                if c.im:
                    im[exps] = im.get(exps, mode.zero) + c.im
        return cls(d, T, re, im, base, mode)

    @classmethod
    def constant(cls, value, d, T, base=None, mode: ScalarMode = RATIONAL) -> "Jet":
        return cls.from_terms(d, T, {(0,) * d: value}, base, mode)

    @classmethod
    def variable(cls, i, d, T, base=None, mode: ScalarMode = RATIONAL) -> "Jet":
        """The coordinate function v_i (constant term = base_i)."""
        e = [0] * d
        e[i] = 1
        j = cls.from_terms(d, T, {tuple(e): 1}, base, mode)
        return j + Jet(d, T, {(0,) * d: j.base[i].re}, {(0,) * d: j.base[i].im}, j.base, mode)

    @classmethod
    def displacement(cls, i, d, T, base=None, mode: ScalarMode = RATIONAL) -> "Jet":
        """The centred coordinate v_i - base_i."""
        e = [0] * d
        e[i] = 1
        return cls.from_terms(d, T, {tuple(e): 1}, base, mode)

    def _like(self, re, im, T=None, base=None, d=None) -> "Jet":
        return Jet(self.d if d is None else d, self.T if T is None else T, re, im,
                   self.base if base is None else base, self.mode)

    # -- inspection ---------------------------------------------------
    def coeff(self, exps) -> CScalar:
        exps = tuple(exps)
        z = self.mode.zero
        return CScalar(self.re.get(exps, z), self.im.get(exps, z), self.mode)

    @property
    def constant_term(self) -> CScalar:
        return self.coeff((0,) * self.d)

    def support(self):
        """Exponents with a nonzero coefficient, in graded-lex order."""
        return sorted(set(self.re) | set(self.im), key=_grlex)

    def items(self):
        for e in self.support():
            yield e, self.coeff(e)

    def is_zero(self) -> bool:
        return not self.re and not self.im

    def is_real(self) -> bool:
        return not self.im

    def degree(self) -> int:
        s = self.support()
        return sum(s[-1]) if s else -1

    def homogeneous(self, deg: int) -> "Jet":
        return self._like({k: v for k, v in self.re.items() if sum(k) == deg},
                          {k: v for k, v in self.im.items() if sum(k) == deg})

    def truncate(self, T: int) -> "Jet":
        return self._like(self.re, self.im, T=min(T, self.T))

    def __len__(self):
        return len(set(self.re) | set(self.im))

    def __repr__(self):
        parts = []
        for e, c in list(self.items())[:8]:
            parts.append(f"{c!r}*{e}")
        more = " + ..." if len(self) > 8 else ""
        return f"Jet(d={self.d}, T={self.T}, {' + '.join(parts) or '0'}{more})"

    # -- comparisons --------------------------------------------------
    def _compatible(self, other: "Jet"):
        if not isinstance(other, Jet):
            raise TypeError(f"expected Jet, got {type(other).__name__}")
        if other.d != self.d:
            raise DimensionError(f"variable count mismatch: {self.d} vs {other.d}")
        if other.mode != self.mode:
            raise ModeMismatchError(f"scalar mode mismatch: {self.mode} vs {other.mode}")

    def __eq__(self, other):
        if not isinstance(other, Jet):
            return NotImplemented
        return (self.d == other.d and self.T == other.T and self.mode == other.mode
                and self.base == other.base and self.re == other.re and self.im == other.im)

    def agrees(self, other: "Jet", upto: int | None = None) -> bool:
        """Coefficientwise equality through degree ``upto`` (default: common truncation)."""
        self._compatible(other)
        upto = min(self.T, other.T) if upto is None else upto
        a, b = self.truncate(upto), other.truncate(upto)
        return a.re == b.re and a.im == b.im

    __hash__ = None

    # -- ring operations ----------------------------------------------
    def __add__(self, other):
        if not isinstance(other, Jet):
            other = Jet.constant(other, self.d, self.T, self.base, self.mode)
        self._compatible(other)
        T = min(self.T, other.T)
        with self.mode.context():
            return self._like(_add_dicts(self.re, other.re), _add_dicts(self.im, other.im), T=T)

    __radd__ = __add__

    def __neg__(self):
        return self._like({k: -v for k, v in self.re.items()}, {k: -v for k, v in self.im.items()})

    def __sub__(self, other):
        if not isinstance(other, Jet):
            other = Jet.constant(other, self.d, self.T, self.base, self.mode)
        self._compatible(other)
        T = min(self.T, other.T)
        with self.mode.context():
            return self._like(_add_dicts(self.re, other.re, -1), _add_dicts(self.im, other.im, -1), T=T)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if not isinstance(other, Jet):
            return self.scale(CScalar.of(other, self.mode))
        self._compatible(other)
        T = min(self.T, other.T)
        mul = kernels.mul_trunc
        d = self.d
        ctx = self.mode.context()
        with ctx:
            re = mul(self.re, other.re, d, T)
            im = {}
            if self.im and other.im:
                re = _add_dicts(re, mul(self.im, other.im, d, T), -1)
            if other.im:
                im = mul(self.re, other.im, d, T)
            if self.im:
                im = _add_dicts(im, mul(self.im, other.re, d, T))
        return self._like(re, im, T=T)

    __rmul__ = __mul__

    def scale(self, c: CScalar) -> "Jet":
        c = CScalar.of(c, self.mode)
        if c.mode != self.mode:
            raise ModeMismatchError("scalar mode mismatch")
        with self.mode.context():
            re = _scale_dict(self.re, c.re)
            re = _add_dicts(re, _scale_dict(self.im, c.im), -1)
            im = _add_dicts(_scale_dict(self.im, c.re), _scale_dict(self.re, c.im))
        return self._like(re, im)

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other.reciprocal()
        return self.scale(CScalar.of(other, self.mode).inverse())

    def __pow__(self, k: int):
        if k < 0:
            return self.reciprocal() ** (-k)
        out = Jet.constant(1, self.d, self.T, self.base, self.mode)
        p = self
        while k:
            if k & 1:
                out = out * p
            k >>= 1
            if k:
                p = p * p
        return out

    # -- calculus -----------------------------------------------------
    def derive(self, var: int) -> "Jet":
        """Formal partial derivative; the result is valid through degree T-1."""
        if not 0 <= var < self.d:
            raise DimensionError(f"variable index {var} out of range for d={self.d}")

        def dd(terms):
            out = {}
            for e, c in terms.items():
                k = e[var]
                if k:
                    ne = list(e)
                    ne[var] = k - 1
                    out[tuple(ne)] = c * k
            return out

        with self.mode.context():
            return self._like(dd(self.re), dd(self.im), T=max(self.T - 1, 0))

    def integrate(self, var: int) -> "Jet":
        """Antiderivative in one variable vanishing at the base point; valid through T+1."""
        if not 0 <= var < self.d:
            raise DimensionError(f"variable index {var} out of range for d={self.d}")

        def ii(terms):
            out = {}
            for e, c in terms.items():
                ne = list(e)
                ne[var] += 1
                out[tuple(ne)] = c / self.mode.convert(ne[var])
            return out

        with self.mode.context():
            return self._like(ii(self.re), ii(self.im), T=self.T + 1)

    def laplace_pairs(self, pairs: Sequence[tuple[int, int]]) -> "Jet":
        """Apply sum_i d_{p_i} d_{q_i}; costs two degrees of validity."""
        f = kernels.apply_laplace_pair
        with self.mode.context():
            return self._like(f(self.re, list(pairs)), f(self.im, list(pairs)), T=max(self.T - 2, 0))

    def reciprocal(self) -> "Jet":
        c0 = self.constant_term
        if c0.is_zero():
            raise ZeroDivisionError("jet has zero constant term")
        with self.mode.context():
            inv = c0.inverse()
            h = self.scale(inv) - 1  # no constant term
            neg = -h
            acc = Jet.constant(1, self.d, self.T, self.base, self.mode)
            power = acc
            for _ in range(self.T):
                power = power * neg
                if power.is_zero():
                    break
                acc = acc + power
            return acc.scale(inv)

    # -- evaluation ---------------------------------------------------
    def evaluate(self, point: Sequence, bits: int = 128):
        """Sum the jet at ``point`` (absolute coordinates). Returns an mpmath.mpc."""
        if len(point) != self.d:
            raise DimensionError("point has wrong length")
        with mpmath.workprec(bits):
            disp = [mpmath.mpc(p) - b.to_mpc(bits) for p, b in zip(point, self.base)]
            total = mpmath.mpc(0)
            for e, c in self.items():
                term = mpmath.mpc(to_mpf(c.re, bits), to_mpf(c.im, bits))
                for x, k in zip(disp, e):
                    if k:
                        term *= x ** k
                total += term
            return total

    def degree_contributions(self, point: Sequence, bits: int = 128) -> list:
        """|homogeneous part of degree j| at ``point`` for j = 0..T (tail diagnostics)."""
        with mpmath.workprec(bits):
            disp = [mpmath.mpc(p) - b.to_mpc(bits) for p, b in zip(point, self.base)]
            parts = [mpmath.mpc(0)] * (self.T + 1)
            for e, c in self.items():
                term = mpmath.mpc(to_mpf(c.re, bits), to_mpf(c.im, bits))
                for x, k in zip(disp, e):
                    if k:
                        term *= x ** k
                parts[sum(e)] += term
            return [abs(p) for p in parts]

    def abs_majorant(self, r, bits: int = 128):
        """sum |c_alpha| r^|alpha| -- an upper bound for sup |f| on the polydisc of radius r."""
        with mpmath.workprec(bits):
            r = mpmath.mpf(r)
            s = mpmath.mpf(0)
            for e, c in self.items():
                s += abs(mpmath.mpc(to_mpf(c.re, bits), to_mpf(c.im, bits))) * r ** sum(e)
            return s

    def to_mode(self, mode: ScalarMode) -> "Jet":
        if mode == self.mode:
            return self
        if mode.exact:
            raise ModeMismatchError("cannot convert big-float jet to exact rationals")
        conv = mode.convert
        return Jet(self.d, self.T, {k: conv(v) for k, v in self.re.items()},
                   {k: conv(v) for k, v in self.im.items()},
                   [CScalar.of(b, mode) for b in self.base], mode)

    # -- serialization ------------------------------------------------
    def to_dict(self) -> dict:
        fmt = self.mode.format
        return {
            "d": self.d,
            "T": self.T,
            "scalar_mode": str(self.mode),
            "base_point": [{"re": fmt(b.re), "im": fmt(b.im)} for b in self.base],
            "terms": [{"exps": list(e), "re": fmt(c.re), "im": fmt(c.im)} for e, c in self.items()],
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "Jet":
        from .scalars import parse_mode

        mode = parse_mode(data.get("scalar_mode", "rational"))
        base = [CScalar(mode.parse(b["re"]), mode.parse(b["im"]), mode) for b in data["base_point"]]
        re, im = {}, {}
        for t in data["terms"]:
            e = tuple(t["exps"])
            r, i = mode.parse(t["re"]), mode.parse(t.get("im", "0"))
            if r:
                re[e] = r
            if i:
                im[e] = i
        return cls(data["d"], data["T"], re, im, base, mode)

    @classmethod
    def from_json(cls, s: str) -> "Jet":
        return cls.from_dict(json.loads(s))


# ----------------------------------------------------------------------
# free-function API


def jet_add(f: Jet, g: Jet) -> Jet:
    return f + g


def jet_mul(f: Jet, g: Jet) -> Jet:
    return f * g


def jet_scale(c, f: Jet) -> Jet:
    return f.scale(CScalar.of(c, f.mode))


def jet_derive(f: Jet, var: int) -> Jet:
    return f.derive(var)


def jet_reciprocal(f: Jet) -> Jet:
    return f.reciprocal()


def _identity_target(s: Jet):
    """If ``s`` is exactly a coordinate function v_j of its own frame, return j."""
    keys = set(s.re) | set(s.im)
    nonconst = [k for k in keys if any(k)]
    if len(nonconst) != 1 or s.im.get(nonconst[0]):
        return None
    e = nonconst[0]
    if sum(e) != 1 or s.re[e] != 1:
        return None
    j = e.index(1)
    if s.constant_term != s.base[j]:
        return None
    return j


def jet_compose(f: Jet, subs: Sequence[Jet]) -> Jet:
    """Substitute ``v_i = subs[i]`` into ``f``.

    Every ``subs[i]`` must have constant term equal to ``f.base[i]``; the
    result lives in the frame of the substituted jets and is valid through
    ``min(f.T, subs.T)``.
    """
    if len(subs) != f.d:
        raise DimensionError(f"need {f.d} substitutions, got {len(subs)}")
    if not subs:
        raise DimensionError("empty substitution")
    d_in = subs[0].d
    mode = f.mode
    for i, s in enumerate(subs):
        if s.d != d_in:
            raise DimensionError("substituted jets must share their variable count")
        if s.mode != mode:
            raise ModeMismatchError("scalar mode mismatch in composition")
        if s.base != subs[0].base:
            raise CenteringError("substituted jets must share a base point")
        if s.constant_term != f.base[i]:
            raise CenteringError(
                f"substitution {i} has constant term {s.constant_term!r}, "
                f"expected base coordinate {f.base[i]!r}"
            )
    T = min([f.T] + [s.T for s in subs])
    base_in = subs[0].base
    ident = {}
    centred = {}
    for i, s in enumerate(subs):
        j = _identity_target(s)
        if j is not None:
            ident[i] = j
        else:
            centred[i] = (s - s.constant_term).truncate(T)
    nontriv = sorted(centred)

    with mode.context():
        groups: dict[tuple, tuple[dict, dict]] = {}
        for part, terms in ((0, f.re), (1, f.im)):
            for e, c in terms.items():
                if sum(e) > T:
                    continue
                key = tuple(e[i] for i in nontriv)
                out_e = [0] * d_in
                for i, j in ident.items():
                    out_e[j] += e[i]
                out_e = tuple(out_e)
                if sum(out_e) + sum(key) > T:
                    continue
                slot = groups.setdefault(key, ({}, {}))[part]
                slot[out_e] = slot[out_e] + c if out_e in slot else c

        powers: dict[tuple, Jet] = {(0,) * len(nontriv): Jet.constant(1, d_in, T, base_in, mode)}

        def power(key):
            if key in powers:
                return powers[key]
            last = max(k for k in range(len(key)) if key[k])
            prev = list(key)
            prev[last] -= 1
            val = power(tuple(prev)) * centred[nontriv[last]]
            powers[key] = val
            return val

        total_re: dict = {}
        total_im: dict = {}
        for key in sorted(groups, key=lambda k: (sum(k), k)):
            re, im = groups[key]
            g = Jet(d_in, T, re, im, base_in, mode)
            if g.is_zero():
                continue
            term = power(key) * g if any(key) else g
            total_re = _add_dicts(total_re, term.re)
            total_im = _add_dicts(total_im, term.im)
    return Jet(d_in, T, total_re, total_im, base_in, mode)


def reindex(f: Jet, mapping: Sequence[int], d_out: int, base_out=None) -> Jet:
    """Linear change of frame: input variable i becomes output variable mapping[i].

    Several inputs may share a target (e.g. y -> x restricts to the diagonal).
    The base point must be consistent with the mapping.
    """
    if len(mapping) != f.d:
        raise DimensionError("mapping length must equal f.d")
    if base_out is None:
        base_out = [None] * d_out
        for i, j in enumerate(mapping):
            base_out[j] = f.base[i]
        zero = CScalar(f.mode.zero, f.mode.zero, f.mode)
        base_out = [b if b is not None else zero for b in base_out]
    base_out = tuple(CScalar.of(b, f.mode) for b in base_out)
    for i, j in enumerate(mapping):
        if base_out[j] != f.base[i]:
            raise CenteringError(f"variable {i} -> {j}: base point mismatch")

    def move(terms):
        out = {}
        for e, c in terms.items():
            ne = [0] * d_out
            for i, j in enumerate(mapping):
                ne[j] += e[i]
            ne = tuple(ne)
            out[ne] = out[ne] + c if ne in out else c
        return out

    with f.mode.context():
        return Jet(d_out, f.T, move(f.re), move(f.im), base_out, f.mode)


def _beta_weights(total: int, mode: ScalarMode):
    # int_0^1 t^j (1-t)^(total-j) dt = j!(total-j)!/(total+1)!
    den = factorial(total + 1)
    return [mode.convert(gmpy2.mpq(factorial(j) * factorial(total - j), den)) for j in range(total + 1)]


def _splits(alpha):
    """All beta <= alpha componentwise, with the product of binomials."""
    if not alpha:
        yield (), 1
        return
    head, rest = alpha[0], alpha[1:]
    for tail, w in _splits(rest):
        for b in range(head + 1):
            yield (b,) + tail, comb(head, b) * w


def blend_integral(f: Jet, blend: Sequence[int], to_x: Sequence[int], to_y: Sequence[int],
                   keep: dict[int, int], d_out: int, base_out) -> Jet:
    """int_0^1 f(..., w = t*X + (1-t)*Y, ...) dt, expanded exactly.

    ``blend[i]`` is an input variable replaced by ``t*X_{to_x[i]} + (1-t)*Y_{to_y[i]}``
    (output indices); ``keep`` maps every other input variable to an output index.
    Displacements are taken from the respective base points, which must agree.
    """
    mode = f.mode
    base_out = tuple(CScalar.of(b, mode) for b in base_out)
    for i, bx, by in zip(blend, to_x, to_y):
        if base_out[bx] != f.base[i] or base_out[by] != f.base[i]:
            raise CenteringError("blended variables must share the base coordinate")
    for i, j in keep.items():
        if base_out[j] != f.base[i]:
            raise CenteringError(f"kept variable {i} -> {j}: base point mismatch")
    if sorted(list(blend) + list(keep)) != list(range(f.d)):
        raise DimensionError("blend and keep must partition the input variables")

    weights_cache: dict[int, list] = {}

    def run(terms):
        out = {}
        for e, c in terms.items():
            alpha = tuple(e[i] for i in blend)
            tot = sum(alpha)
            if tot not in weights_cache:
                weights_cache[tot] = _beta_weights(tot, mode)
            w = weights_cache[tot]
            fixed = [0] * d_out
            for i, j in keep.items():
                fixed[j] += e[i]
            for beta, binom in _splits(alpha):
                ne = list(fixed)
                for k, b in enumerate(beta):
                    ne[to_x[k]] += b
                    ne[to_y[k]] += alpha[k] - b
                ne = tuple(ne)
                v = c * w[sum(beta)] * binom
                out[ne] = out[ne] + v if ne in out else v
        return out

    with mode.context():
        return Jet(d_out, f.T, run(f.re), run(f.im), base_out, mode)


def affine_blend_integral(f: Jet, n: int) -> Jet:
    """For f(w, z) with w, z in C^n return F(x, y, z) = int_0^1 f(t x + (1-t) y, z) dt."""
    if f.d != 2 * n:
        raise DimensionError(f"expected a jet in 2n = {2 * n} variables, got d={f.d}")
    p, q = f.base[:n], f.base[n:]
    return blend_integral(
        f,
        blend=list(range(n)),
        to_x=list(range(n)),
        to_y=list(range(n, 2 * n)),
        keep={n + i: 2 * n + i for i in range(n)},
        d_out=3 * n,
        base_out=tuple(p) + tuple(p) + tuple(q),
    )


def _solve_linear(A, mode):
    """Inverse of a small complex matrix (list of lists of CScalar) by Gauss-Jordan."""
    n = len(A)
    one = CScalar(mode.one, mode.zero, mode)
    zero = CScalar(mode.zero, mode.zero, mode)
    M = [list(row) + [one if i == j else zero for j in range(n)] for i, row in enumerate(A)]
    for col in range(n):
        piv = next((r for r in range(col, n) if not M[r][col].is_zero()), None)
        if piv is None:
            raise JetError("singular base Jacobian")
        M[col], M[piv] = M[piv], M[col]
        inv = M[col][col].inverse()
        M[col] = [x * inv for x in M[col]]
        for r in range(n):
            if r != col and not M[r][col].is_zero():
                factor = M[r][col]
                M[r] = [x - factor * y for x, y in zip(M[r], M[col])]
    return [row[n:] for row in M]


def invert_map(theta: Sequence[Jet], n: int) -> list[Jet]:
    """Solve theta(x, y, z(x, y, tau)) = theta(base) + tau for z.

    ``theta`` holds n jets in (x, y, z). The result holds n jets in
    (x, y, tau) with base (p, p, 0). Uses a constant-Jacobian Newton step,
    which gains one degree per round; at most T + 1 rounds are allowed.
    """
    if len(theta) != n:
        raise DimensionError(f"expected {n} component jets")
    d = 3 * n
    for t in theta:
        if t.d != d:
            raise DimensionError("theta components must be jets in 3n variables")
    mode = theta[0].mode
    T = min(t.T for t in theta)
    base = theta[0].base
    theta0 = [t.constant_term for t in theta]
    J = []
    for t in theta:
        row = []
        for j in range(n):
            e = [0] * d
            e[2 * n + j] = 1
            row.append(t.coeff(e))
        J.append(row)
    Jinv = _solve_linear(J, mode)

    zero = CScalar(mode.zero, mode.zero, mode)
    out_base = tuple(base[: 2 * n]) + tuple(zero for _ in range(n))
    coords = [Jet.variable(i, d, T, out_base, mode) for i in range(2 * n)]
    tau = [Jet.displacement(2 * n + i, d, T, out_base, mode) for i in range(n)]

    def apply_jinv(vec):
        out = []
        for j in range(n):
            acc = Jet(d, T, base=out_base, mode=mode)
            for k in range(n):
                if not Jinv[j][k].is_zero():
                    acc = acc + vec[k].scale(Jinv[j][k])
            out.append(acc)
        return out

    Z = [base[2 * n + j] for j in range(n)]
    Z = [Jet.constant(Z[j], d, T, out_base, mode) + lin for j, lin in enumerate(apply_jinv(tau))]
    for _ in range(T + 2):
        comp = [jet_compose(t, coords + Z) for t in theta]
        resid = [c - theta0[i] - tau[i] for i, c in enumerate(comp)]
        if mode.exact and all(r.is_zero() for r in resid):
            return Z
        corr = apply_jinv(resid)
        Z = [z - c for z, c in zip(Z, corr)]
    if not mode.exact:
        # every degree is settled after T + 1 rounds; what is left is rounding
        return Z
    raise ConvergenceError("map inversion did not converge within T+1 rounds")


def hermitian_conjugate(f: Jet, n: int) -> Jet:
    """Coefficient (alpha, beta) -> conj of coefficient (beta, alpha) for a jet in (x, z)."""
    if f.d != 2 * n:
        raise DimensionError("expected a jet in 2n variables")

    def swap(e):
        return tuple(e[n:]) + tuple(e[:n])

    base = tuple(b.conj() for b in f.base[n:]) + tuple(b.conj() for b in f.base[:n])
    return Jet(f.d, f.T, {swap(e): v for e, v in f.re.items()},
               {swap(e): -v for e, v in f.im.items()}, base, f.mode)
