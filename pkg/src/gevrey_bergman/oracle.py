"""Exact Bergman kernels of radial one-variable models from monomial norms.

For phi = g(|x|^2) the monomials x^j are orthogonal for the weight
exp(-k phi) dVol, dVol = phi_{x xbar} dA, so K_k(x, y) = sum_j (x ybar)^j / h_j
with h_j = pi int_0^inf s^j exp(-k g(s)) w(s) ds, w(s) = d/ds (s g'(s)).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from math import factorial

import mpmath

from .potentials import PotentialModel
from .scalars import to_mpf

__all__ = [
    "KernelOracle",
    "KernelValue",
    "OracleError",
    "monomial_norms",
    "kernel_eval",
    "bergman_function_integral",
    "radial_density",
]

DEFAULT_BITS = 192


class OracleError(ValueError):
    pass


def radial_density(model: PotentialModel, s, bits: int = DEFAULT_BITS):
    """w(s) = d/ds (s g'(s)); the area density of phi_{x xbar} in the variable s = |x|^2."""
    with mpmath.workprec(bits):
        s = mpmath.mpf(s)
        if model.psi_closed_form == "FubiniStudy":
            return 1 / (1 + s) ** 2
        if model.polynomial_degree is not None:
            coeffs = model.profile(model.polynomial_degree)
            return mpmath.fsum(to_mpf(c, bits) * j * j * s ** (j - 1) for j, c in enumerate(coeffs) if j and c)
        return mpmath.diff(lambda t: t * mpmath.diff(lambda u: model.g_eval(u, bits).real, t), s)


def _closed_norm(model: PotentialModel, k: int, j: int, bits: int):
    with mpmath.workprec(bits):
        if model.psi_closed_form == "BargmannFock":
            return mpmath.pi * factorial(j) / mpmath.mpf(k) ** (j + 1)
        if model.psi_closed_form == "FubiniStudy":
            if j > k:
                raise OracleError(f"x^{j} is not a section of O({k})")
            return mpmath.pi * mpmath.mpf(factorial(j) * factorial(k - j)) / factorial(k + 1)
    raise OracleError(f"no closed form for {model.name}")


def _quad_norm(model: PotentialModel, k: int, j: int, bits: int, tol):
    if model.profile is None:
        raise OracleError("monomial norms need a radial model")
    with mpmath.workprec(bits):
        k_ = mpmath.mpf(k)

        def f(s):
            return s ** j * mpmath.exp(-k_ * model.g_eval(s, bits).real) * radial_density(model, s, bits)

        # split near the peak of s^j e^{-k s}, where the integrand lives
        peak = max(mpmath.mpf(j) / k_, 1 / k_)
        pts = [0, peak / 2, peak, 2 * peak, 4 * peak + 8 / k_, mpmath.inf]
        val, err = mpmath.quad(f, pts, error=True)
        if not val > 0:
            raise OracleError(f"norm of x^{j} is not positive (potential not confining?)")
        if err > tol * abs(val):
            raise OracleError(f"quadrature error {mpmath.nstr(err, 3)} exceeds tolerance for h_{j}")
        return mpmath.pi * val


@dataclass
class KernelOracle:
    model: str
    k: int
    norms: list
    kind: str  # "ClosedForm" | "Quadrature"
    J: int
    tail_bound: object = 0
    radius: object = 0
    bits: int = DEFAULT_BITS
    potential: PotentialModel | None = field(default=None, repr=False)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["j", "h_j"])
        for j, h in enumerate(self.norms):
            w.writerow([j, mpmath.nstr(h, 30)])
        return buf.getvalue()


@dataclass(frozen=True)
class KernelValue:
    raw: object  # mpc
    weighted: object  # mpf, |K| exp(-k phi(x)/2 - k phi(y)/2)
    log_weighted: object


def monomial_norms(model: PotentialModel, k: int, J: int | None = None, tol=1e-12,
                   radius=0, bits: int = DEFAULT_BITS, method: str = "auto") -> KernelOracle:
    """Norms h_0..h_J of the monomials for K_k; J from a ratio test at ``radius``.

    ``method`` is "auto" (closed form when available), "closed" or "quadrature".
    """
    if model.n != 1:
        raise OracleError("monomial oracle is implemented for n = 1 only")
    if model.profile is None:
        raise OracleError(f"model {model.name} is not radial")
    if k < 1:
        raise OracleError("k must be a positive integer")
    closed = model.psi_closed_form in ("BargmannFock", "FubiniStudy")
    if method == "closed" and not closed:
        raise OracleError(f"no closed form for {model.name}")
    use_closed = closed and method != "quadrature"
    kind = "ClosedForm" if use_closed else "Quadrature"
    compact = model.psi_closed_form == "FubiniStudy"
    tol = mpmath.mpf(tol)

    def norm(j):
        return _closed_norm(model, k, j, bits) if use_closed else _quad_norm(model, k, j, bits, tol * 1e-2)

    with mpmath.workprec(bits):
        R2 = mpmath.mpf(radius) ** 2
        norms = []
        tail = mpmath.mpf(0)
        if compact:
            J = k if J is None else min(J, k)
            norms = [norm(j) for j in range(J + 1)]
        elif J is not None:
            norms = [norm(j) for j in range(J + 1)]
            tail = _tail_estimate(norms, R2)
        elif R2 == 0:
            J = 0
            norms = [norm(0)]
        else:
            partial = mpmath.mpf(0)
            prev = None
            j = 0
            while True:
                norms.append(norm(j))
                t = R2 ** j / norms[-1]
                partial += t
                if prev is not None and t < prev:
                    ratio = t / prev
                    tail = t * ratio / (1 - ratio) / partial
                    if tail < tol * 1e-2:
                        break
                prev = t
                j += 1
                if j > 20000:
                    raise OracleError("monomial expansion did not converge at the requested radius")
            J = len(norms) - 1
        return KernelOracle(model.name, k, norms, kind, J, tail, radius, bits, model)


def _tail_estimate(norms, R2):
    if len(norms) < 2 or R2 == 0:
        return mpmath.mpf(0)
    t1 = R2 ** (len(norms) - 1) / norms[-1]
    t0 = R2 ** (len(norms) - 2) / norms[-2]
    ratio = t1 / t0
    if ratio >= 1:
        return mpmath.inf
    partial = sum(R2 ** j / h for j, h in enumerate(norms))
    return t1 * ratio / (1 - ratio) / partial


def kernel_eval(oracle: KernelOracle, x, y) -> KernelValue:
    """K_k(x, y) = sum_j (x ybar)^j / h_j together with its pointwise norm."""
    with mpmath.workprec(oracle.bits):
        x = mpmath.mpc(x)
        y = mpmath.mpc(y)
        r = max(abs(x), abs(y))
        compact = oracle.potential is not None and oracle.potential.psi_closed_form == "FubiniStudy"
        if not compact and r > mpmath.mpf(oracle.radius) * (1 + mpmath.mpf(10) ** -10):
            raise OracleError(f"point radius {mpmath.nstr(r, 6)} exceeds validated radius {oracle.radius}")
        w = x * mpmath.conj(y)
        raw = mpmath.mpc(0)
        p = mpmath.mpc(1)
        for h in oracle.norms:
            raw += p / h
            p *= w
        model = oracle.potential
        if model is None:
            raise OracleError("oracle carries no potential for the weighted value")
        k = oracle.k
        log_w = mpmath.log(abs(raw)) - k * (model.phi_eval([x], oracle.bits) + model.phi_eval([y], oracle.bits)) / 2
        return KernelValue(raw, mpmath.exp(log_w), log_w)


def bergman_function_integral(oracle: KernelOracle, radius=None):
    """int K_k(x, x) exp(-k phi) dVol over |x| < radius (whole chart by default)."""
    model = oracle.potential
    with mpmath.workprec(oracle.bits):
        k = oracle.k
        norms = oracle.norms

        def density(s):
            kxx = mpmath.fsum(s ** j / h for j, h in enumerate(norms))
            return kxx * mpmath.exp(-k * model.g_eval(s, oracle.bits).real) * radial_density(model, s, oracle.bits)

        upper = mpmath.inf if radius is None else mpmath.mpf(radius) ** 2
        if upper == mpmath.inf and oracle.kind != "ClosedForm":
            raise OracleError("whole-chart integral needs a compact model; pass a radius")
        pts = [0, 1, upper] if upper == mpmath.inf or upper > 1 else [0, upper]
        return mpmath.pi * mpmath.quad(density, pts)
