"""Kähler potential catalog: jets, polarization, diastasis and Bochner checks.

Every catalog model is radial, ``phi(x) = g(|x|^2)``, so its polarization is
``psi(x, z) = g(x . z)`` and is available in closed form.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import gmpy2
import mpmath

from .jets import Jet, JetError, hermitian_conjugate
from .scalars import RATIONAL, CScalar, ScalarMode, parse_mode, to_mpf

__all__ = [
    "PotentialModel",
    "DiastasisValue",
    "BochnerReport",
    "SymmetryError",
    "EvaluationRadiusError",
    "bargmann_fock",
    "fubini_study",
    "radial_quartic",
    "radial_series",
    "from_config",
    "load_model",
    "polarize",
    "diastasis",
    "bochner_check",
    "scalar_curvature_b1_reference",
    "CATALOG",
]


class SymmetryError(JetError):
    """The potential jet is not real-valued (coefficients not Hermitian)."""


class EvaluationRadiusError(ValueError):
    """A point lies outside the region where a truncated jet is trustworthy."""


def _q(x):
    if isinstance(x, str):
        return gmpy2.mpq(x)
    if isinstance(x, Fraction):
        return gmpy2.mpq(x.numerator, x.denominator)
    return gmpy2.mpq(x)


@dataclass(frozen=True)
class PotentialModel:
    """A Kähler potential near the base point (the origin of a Bochner chart).

    ``profile(s_degree)`` returns the Taylor coefficients ``g_0..g_K`` of the
    radial profile g with phi = g(|x|^2); ``profile_eval`` evaluates g at a
    complex argument when a closed form exists.
    """

    name: str
    n: int
    gevrey_a: float
    profile: Callable[[int], list] | None
    profile_eval: Callable | None = None
    psi_closed_form: str | None = None  # "BargmannFock" | "FubiniStudy" | None
    oracle_kind: str | None = None  # "ClosedForm" | "RadialQuadrature" | None
    params: dict = field(default_factory=dict)
    raw_phi: Jet | None = None  # non-radial models given only by a jet
    polynomial_degree: int | None = None  # degree in s when g is a polynomial

    @property
    def radial(self) -> bool:
        return self.profile is not None

    def phi_jet(self, T: int, mode: ScalarMode = RATIONAL) -> Jet:
        """Jet of phi in (x, xbar) at the origin, through total degree T."""
        n = self.n
        if self.raw_phi is not None:
            if self.raw_phi.T < T:
                raise JetError(f"model {self.name} only carries a degree-{self.raw_phi.T} jet")
            return self.raw_phi.truncate(T).to_mode(mode)
        coeffs = self.profile(T // 2)
        terms = {}
        for k, c in enumerate(coeffs):
            if not c or 2 * k > T:
                continue
            # |x|^{2k} = sum over |alpha| = k of k!/alpha! x^alpha xbar^alpha
            for alpha in _compositions(k, n):
                w = _multinomial(k, alpha)
                terms[tuple(alpha) + tuple(alpha)] = _q(c) * w
        return Jet.from_terms(2 * n, T, terms, mode=mode)

    def phi_eval(self, x: Sequence, bits: int = 128):
        with mpmath.workprec(bits):
            # same arithmetic as psi_eval(x, conj(x)), so D(x, x) vanishes exactly
            s = sum(mpmath.mpc(v) * mpmath.conj(mpmath.mpc(v)) for v in x)
            return mpmath.re(self.g_eval(s, bits))

    def g_eval(self, s, bits: int = 128):
        """Profile g at a (possibly complex) argument."""
        with mpmath.workprec(bits):
            if self.profile_eval is not None:
                return self.profile_eval(mpmath.mpc(s))
            if self.polynomial_degree is not None:
                coeffs = self.profile(self.polynomial_degree)
                return mpmath.polyval([to_mpf(c, bits) for c in reversed(coeffs)], mpmath.mpc(s))
            raise EvaluationRadiusError(f"model {self.name} has no closed-form profile")

    def psi_eval(self, x: Sequence, z: Sequence, bits: int = 128, T: int = 24):
        """psi(x, z); closed form when available, else the psi jet with a tail check."""
        if self.radial and (self.profile_eval is not None or self.polynomial_degree is not None):
            with mpmath.workprec(bits):
                s = sum(mpmath.mpc(a) * mpmath.mpc(b) for a, b in zip(x, z))
                return self.g_eval(s, bits)
        jet = polarize(self.phi_jet(T))
        point = list(x) + list(z)
        contrib = jet.degree_contributions(point, bits)
        value = jet.evaluate(point, bits)
        scale = max(abs(value), mpmath.mpf(1))
        if contrib[-1] > mpmath.mpf("1e-3") * scale or contrib[-2] > mpmath.mpf("1e-3") * scale:
            raise EvaluationRadiusError(
                f"psi jet tail too large at {point}: last degrees contribute {contrib[-2:]}"
            )
        return value

    def to_config(self) -> dict:
        return {
            "name": self.name,
            "n": self.n,
            "params": {k: _fmt_param(v) for k, v in self.params.items()},
            "base_point": [0] * self.n,
            "scalar_mode": "rational",
        }


def _fmt_param(v):
    if isinstance(v, (list, tuple)):
        return [_fmt_param(x) for x in v]
    if isinstance(v, (int, str)):
        return v
    q = _q(v)
    return f"{q.numerator}/{q.denominator}"


def _compositions(k, n):
    if n == 1:
        yield (k,)
        return
    for first in range(k + 1):
        for rest in _compositions(k - first, n - 1):
            yield (first,) + rest


def _multinomial(k, alpha):
    from math import factorial

    out = factorial(k)
    for a in alpha:
        out //= factorial(a)
    return out


# ----------------------------------------------------------------------
# catalog


def bargmann_fock(n: int = 1) -> PotentialModel:
    """phi = |x|^2 (flat)."""
    return PotentialModel(
        name="bargmann_fock",
        n=n,
        gevrey_a=1.0,
        profile=lambda K: [0, 1] + [0] * max(K - 1, 0),
        profile_eval=lambda s: s,
        psi_closed_form="BargmannFock",
        oracle_kind="ClosedForm",
        polynomial_degree=1,
    )


def fubini_study(n: int = 1) -> PotentialModel:
    """Affine chart of CP^n: phi = log(1 + |x|^2)."""
    return PotentialModel(
        name="fubini_study",
        n=n,
        gevrey_a=1.0,
        profile=lambda K: [0] + [gmpy2.mpq((-1) ** (k + 1), k) for k in range(1, K + 1)],
        profile_eval=lambda s: mpmath.log(1 + s),
        psi_closed_form="FubiniStudy",
        oracle_kind="ClosedForm",
    )


def radial_quartic(c="1/10", n: int = 1) -> PotentialModel:
    """phi = |x|^2 + c |x|^4 with rational c."""
    cq = _q(c)
    return PotentialModel(
        name="radial_quartic",
        n=n,
        gevrey_a=1.0,
        profile=lambda K: ([0, 1, cq] + [0] * K)[: max(K + 1, 3)],
        oracle_kind="RadialQuadrature",
        params={"c": cq},
        polynomial_degree=2,
    )


def radial_series(coeffs: Sequence, n: int = 1, name: str = "radial_series") -> PotentialModel:
    """phi = sum_k coeffs[k-1] |x|^{2k}; coeffs[0] should be 1 for Bochner coordinates."""
    cs = [gmpy2.mpq(0)] + [_q(c) for c in coeffs]
    return PotentialModel(
        name=name,
        n=n,
        gevrey_a=1.0,
        profile=lambda K: (cs + [gmpy2.mpq(0)] * (K + 1))[: max(K + 1, len(cs))],
        oracle_kind="RadialQuadrature",
        params={"coeffs": cs[1:]},
        polynomial_degree=len(cs) - 1,
    )


def from_jet(name: str, phi: Jet, n: int) -> PotentialModel:
    """Wrap an arbitrary (not necessarily radial) potential jet."""
    return PotentialModel(name=name, n=n, gevrey_a=1.0, profile=None, raw_phi=phi)


CATALOG = {
    "bargmann_fock": lambda params, n: bargmann_fock(n),
    "fubini_study": lambda params, n: fubini_study(n),
    "radial_quartic": lambda params, n: radial_quartic(params.get("c", "1/10"), n),
    "radial_series": lambda params, n: radial_series(params["coeffs"], n),
}


def from_config(cfg: dict) -> PotentialModel:
    """Build a model from ``{name, n, params, base_point, scalar_mode}``."""
    name = cfg["name"]
    if name not in CATALOG:
        raise ValueError(f"unknown model {name!r}; choose from {sorted(CATALOG)}")
    n = int(cfg.get("n", 1))
    base = cfg.get("base_point", [0] * n)
    if any(mpmath.mpc(b) != 0 for b in (base or [])):
        raise ValueError("catalog models are centred at the origin of their Bochner chart; "
                         "re-centre the model instead of moving the base point")
    parse_mode(cfg.get("scalar_mode", "rational"))
    return CATALOG[name](cfg.get("params", {}), n)


def load_model(path) -> PotentialModel:
    with open(path) as fh:
        return from_config(json.load(fh))


# ----------------------------------------------------------------------
# operations


def polarize(phi: Jet) -> Jet:
    """psi(x, z) with psi(x, xbar) = phi(x): the substitution xbar -> z on jets."""
    n = phi.d // 2
    if phi.d != 2 * n:
        raise SymmetryError("potential jet must live in (x, xbar)")
    if not hermitian_conjugate(phi, n).agrees(phi) or hermitian_conjugate(phi, n).base != phi.base:
        raise SymmetryError("potential jet is not real-valued (Hermitian symmetry fails)")
    return phi


@dataclass(frozen=True)
class DiastasisValue:
    value: object
    phi_x: object
    phi_y: object
    psi_x_ybar: object
    psi_y_xbar: object

    @property
    def components(self):
        return (self.phi_x, self.phi_y, self.psi_x_ybar, self.psi_y_xbar)


def diastasis(model: PotentialModel, x: Sequence, y: Sequence, bits: int = 128) -> DiastasisValue:
    """D(x, y) = phi(x) + phi(y) - psi(x, ybar) - psi(y, xbar)."""
    with mpmath.workprec(bits):
        x = [mpmath.mpc(v) for v in x]
        y = [mpmath.mpc(v) for v in y]
        px = model.phi_eval(x, bits)
        py = model.phi_eval(y, bits)
        pxy = model.psi_eval(x, [mpmath.conj(v) for v in y], bits)
        pyx = model.psi_eval(y, [mpmath.conj(v) for v in x], bits)
        val = mpmath.re(px + py - pxy - pyx)
        return DiastasisValue(val, px, py, pxy, pyx)


@dataclass(frozen=True)
class BochnerReport:
    passed: bool
    offending: list  # (exps, coefficient, reason)

    def __bool__(self):
        return self.passed


def bochner_check(model: PotentialModel) -> BochnerReport:
    """phi = |x|^2 + O(|x|^4): no constant, linear or cubic terms, unit Hermitian part."""
    n = model.n
    phi = model.phi_jet(3)
    bad = []
    for e, c in phi.items():
        deg = sum(e)
        if deg in (0, 1, 3):
            bad.append((e, c, f"degree-{deg} term"))
        elif deg == 2:
            diag = any(e[i] == 1 and e[n + i] == 1 for i in range(n))
            if not diag or c != 1:
                bad.append((e, c, "degree-2 part differs from |x|^2"))
    for i in range(n):
        e = [0] * (2 * n)
        e[i] = e[n + i] = 1
        if phi.coeff(e) != 1:
            if not any(b[0] == tuple(e) for b in bad):
                bad.append((tuple(e), phi.coeff(e), "missing |x_i|^2 term"))
    return BochnerReport(not bad, bad)


def _quartic_coefficient(model: PotentialModel):
    phi = model.phi_jet(4)
    return phi.coeff((2, 2)).re


def scalar_curvature_b1_reference(model: PotentialModel, calibration_T: int = 6):
    """Diagonal value b_1(p, pbar) implied by the x^2 xbar^2 coefficient (n = 1).

    In Bochner coordinates b_1 at the base point depends linearly on that single
    coefficient. The slope is pinned by running the recursion on the
    Fubini-Study chart (whose exact kernel gives b_1 = 1); Bargmann-Fock fixes
    the intercept at 0.
    """
    if model.n != 1:
        raise ValueError("reference value is only defined for n = 1")
    if not bochner_check(model):
        raise ValueError(f"model {model.name} is not Bochner-normalized")
    from .recursion import compute_bm

    fs = fubini_study(1)
    b1_fs = compute_bm(fs, M=1, T=calibration_T).b[1].constant_term.re
    slope = b1_fs / _quartic_coefficient(fs)
    return slope * _quartic_coefficient(model)
