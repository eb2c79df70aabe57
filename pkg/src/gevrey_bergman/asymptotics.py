"""Truncated kernel expansions, remainders against the exact oracle, and log-kernel checks."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from fractions import Fraction
from math import floor
from typing import Callable, Iterable, Sequence

import mpmath
import numpy as np

from .oracle import KernelOracle, kernel_eval
from .potentials import EvaluationRadiusError, PotentialModel, diastasis
from .recursion import CoefficientTable

__all__ = [
    "ExpansionEvaluation",
    "ResidualRecord",
    "RateFit",
    "RegimeError",
    "eval_expansion",
    "compare_with_oracle",
    "fit_rate",
    "log_kernel_residual",
    "log_regime_grid",
    "log_regime_radius",
    "n0_of_k",
    "records_to_csv",
]

BITS = 192


class RegimeError(ValueError):
    """A point lies outside the neighbourhood where the estimate is claimed."""


@dataclass(frozen=True)
class ExpansionEvaluation:
    k: int
    N: int
    value: object  # mpc
    weighted: object  # mpf
    partial_sums: tuple
    N0: int
    log_leading: object  # k psi(x, ybar) + n log(k / pi), complex


@dataclass(frozen=True)
class ResidualRecord:
    k: int
    x: complex
    y: complex
    N: int
    residual: object  # |oracle - expansion|
    weighted_residual: object  # same, times exp(-k phi(x)/2 - k phi(y)/2)
    relative_residual: object  # residual / |(k/pi)^n exp(k psi(x, ybar))|
    scaled: object  # relative_residual * k^(N+1)


@dataclass(frozen=True)
class RateFit:
    exponent: float  # residual ~ c k^-exponent
    log_c: float
    r_squared: float


def n0_of_k(k, C=1, a=2, eps=Fraction(1, 2)) -> int:
    """floor((k / C)^(1 / (2a + 2 eps))), exact for rational a, eps."""
    if k < 1 or C <= 0:
        raise ValueError("need k >= 1 and C > 0")
    ratio = Fraction(k) / Fraction(C)
    if ratio < 1:
        return 0
    p = 2 * Fraction(a) + 2 * Fraction(eps)
    guess = int(floor(float(ratio) ** (1 / float(p))))
    # settle the floor exactly: N^p <= ratio  <=>  N^u <= ratio^v for p = u/v
    u, v = p.numerator, p.denominator

    def le(N):
        return Fraction(N) ** u <= ratio ** v

    N = max(guess - 1, 0)
    while le(N + 1):
        N += 1
    while N > 0 and not le(N):
        N -= 1
    return N


def _point(v):
    if isinstance(v, (list, tuple)):
        return [mpmath.mpc(c) for c in v]
    return [mpmath.mpc(v)]


def _bj_eval(jet, point, bits, strict=True):
    """Evaluate a b_j jet, refusing points where its tail is not small."""
    val = jet.evaluate(point, bits)
    if strict and jet.T >= 1 and any(point_i != 0 for point_i in point):
        contrib = jet.degree_contributions(point, bits)
        scale = max(abs(val), mpmath.mpf(1))
        if contrib[-1] > mpmath.mpf("1e-3") * scale:
            raise EvaluationRadiusError("point outside the validity radius of the coefficient jets")
    return val


def eval_expansion(table: CoefficientTable, model: PotentialModel, k: int, N: int, x, y,
                   C_cfg=1, a=2, eps=Fraction(1, 2), bits: int = BITS) -> ExpansionEvaluation:
    """K^(N)(x, y) = (k/pi)^n exp(k psi(x, ybar)) (1 + sum_{j<=N} b_j(x, ybar) k^-j)."""
    if N > table.M:
        raise ValueError(f"table only holds orders up to {table.M}")
    n = table.n
    with mpmath.workprec(bits):
        xs = _point(x)
        ys = _point(y)
        ybar = [mpmath.conj(c) for c in ys]
        psi = model.psi_eval(xs, ybar, bits)
        point = xs + ybar
        k_ = mpmath.mpf(k)
        B = mpmath.mpc(0)
        partial = []
        for j in range(N + 1):
            B += _bj_eval(table.b[j], point, bits) / k_ ** j
            partial.append(B)
        log_lead = n * mpmath.log(k_ / mpmath.pi) + k_ * psi
        lead = mpmath.exp(log_lead)
        value = lead * B
        phix = model.phi_eval(xs, bits)
        phiy = model.phi_eval(ys, bits)
        log_w = mpmath.re(log_lead) + mpmath.log(abs(B)) - k_ * (phix + phiy) / 2
        return ExpansionEvaluation(
            k=k, N=N, value=value, weighted=mpmath.exp(log_w),
            partial_sums=tuple(lead * s for s in partial),
            N0=n0_of_k(k, C_cfg, a, eps), log_leading=log_lead,
        )


def compare_with_oracle(table: CoefficientTable, model: PotentialModel,
                        oracle_family: Callable[[int], KernelOracle], ks: Iterable[int],
                        grid: Sequence[tuple], N: int, bits: int = BITS) -> list[ResidualRecord]:
    """Residuals of K^(N) against the exact kernel at every (k, x, y)."""
    out = []
    with mpmath.workprec(bits):
        for k in ks:
            oracle = oracle_family(k)
            for x, y in grid:
                ev = eval_expansion(table, model, k, N, x, y, bits=bits)
                kv = kernel_eval(oracle, x, y)
                diff = abs(kv.raw - ev.value)
                lead = abs(mpmath.exp(ev.log_leading))
                xs, ys = _point(x), _point(y)
                damp = mpmath.exp(-k * (model.phi_eval(xs, bits) + model.phi_eval(ys, bits)) / 2)
                rel = diff / lead
                out.append(ResidualRecord(k, complex(x), complex(y), N, diff, diff * damp, rel,
                                          rel * mpmath.mpf(k) ** (N + 1)))
    return out


def fit_rate(ks: Sequence, residuals: Sequence) -> RateFit:
    """Least-squares fit of log residual = log c - exponent * log k."""
    if len(ks) < 2:
        raise ValueError("need at least two k values")
    if any(r <= 0 for r in residuals):
        raise ValueError("residuals must be positive to fit a rate")
    lk = np.log(np.array([float(k) for k in ks]))
    lr = np.array([float(mpmath.log(r)) for r in residuals])
    slope, intercept = np.polyfit(lk, lr, 1)
    pred = slope * lk + intercept
    ss_res = float(np.sum((lr - pred) ** 2))
    ss_tot = float(np.sum((lr - lr.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(-slope), float(intercept), r2)


def log_regime_radius(k, delta=1, a=2, eps=Fraction(1, 2)):
    """Largest diastasis for which the log-kernel estimate is claimed: (delta/2) k^(-1 + 1/(2a+2eps))."""
    p = 2 * Fraction(a) + 2 * Fraction(eps)
    expo = mpmath.mpf(p.denominator) / p.numerator - 1
    return mpmath.mpf(Fraction(delta).numerator) / Fraction(delta).denominator / 2 * mpmath.mpf(k) ** expo


def log_regime_grid(model: PotentialModel, radius, centres=(0, 0.2, 0.3j, -0.15 + 0.1j),
                    fill="0.9", bits: int = BITS) -> list[tuple[complex, complex]]:
    """Pairs (x0, x0 + t u) for four unit directions u, with t the largest step keeping D <= fill * radius."""
    pts = []
    with mpmath.workprec(bits):
        cap = mpmath.mpf(radius) * mpmath.mpf(fill)
        for x0 in centres:
            for direction in (1, 1j, -1, (1 + 1j) / abs(1 + 1j)):
                lo, hi = mpmath.mpf(0), mpmath.mpf(1)
                for _ in range(60):
                    mid = (lo + hi) / 2
                    D = diastasis(model, [x0], [x0 + mid * direction], bits).value
                    lo, hi = (mid, hi) if D <= cap else (lo, mid)
                pts.append((complex(x0), complex(x0 + float(lo) * direction)))
    return pts


def log_kernel_residual(oracle: KernelOracle, model: PotentialModel, k: int, x, y,
                        delta=1, a=2, eps=Fraction(1, 2), check_regime: bool = True,
                        bits: int = BITS):
    """k^2 |(1/k) log|K_k(x,y)|_h + D/2 - log(k)/k + log(pi)/k| (n = 1)."""
    if oracle.k != k:
        raise ValueError("oracle was built for a different k")
    with mpmath.workprec(bits):
        D = diastasis(model, _point(x), _point(y), bits).value
        if check_regime and D > log_regime_radius(k, delta, a, eps):
            raise RegimeError(f"D = {mpmath.nstr(D, 6)} outside the regime for k = {k}")
        kv = kernel_eval(oracle, x, y)
        if kv.weighted == 0:
            raise ValueError("weighted kernel underflowed; raise the precision")
        k_ = mpmath.mpf(k)
        val = kv.log_weighted / k_ + D / 2 - mpmath.log(k_) / k_ + mpmath.log(mpmath.pi) / k_
        return k_ ** 2 * abs(val)


def records_to_csv(records: Iterable[ResidualRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["k", "x_re", "x_im", "y_re", "y_im", "N", "residual", "weighted_residual"])
    for r in records:
        w.writerow([r.k, r.x.real, r.x.imag, r.y.real, r.y.imag, r.N,
                    mpmath.nstr(r.residual, 17), mpmath.nstr(r.weighted_residual, 17)])
    return buf.getvalue()
