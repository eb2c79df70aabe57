"""Bergman coefficients b_m(x, z) from the phase/amplitude calculus, as exact jets.

Frames (n = complex dimension):

* ``(x, z)``      -- 2n variables, base ``(p, pbar)``; potentials and b_m live here.
* ``(x, y, z)``   -- 3n variables, base ``(p, p, pbar)``; theta and its Jacobian.
* ``(x, y, tau)`` -- 3n variables, base ``(p, p, 0)``; amplitudes, where
  ``tau = theta - theta(base)``.

The operator ``L = sum_i d/dy_i d/dtau_i`` drives everything; ``S = exp(L/k)``.
"""

from __future__ import annotations

import csv
import io
import json
import time
from dataclasses import dataclass, field
from math import factorial
from typing import Sequence

import mpmath

from .jets import (
    Jet,
    JetError,
    affine_blend_integral,
    blend_integral,
    invert_map,
    jet_compose,
    reindex,
)
from .potentials import PotentialModel, bochner_check, polarize
from .scalars import RATIONAL, CScalar, ScalarMode, to_mpf

__all__ = [
    "AmplitudeSeries",
    "CoefficientTable",
    "FrameError",
    "TruncationError",
    "compute_theta",
    "compute_z_of_theta",
    "compute_delta0",
    "apply_S",
    "compute_amplitudes",
    "compute_bm",
    "sup_majorant",
    "negligibility_defect",
]

XYZ = "xyz"
XYT = "xytau"


class FrameError(JetError):
    pass


class TruncationError(JetError):
    pass


@dataclass(frozen=True)
class AmplitudeSeries:
    """Coefficients of k^0, k^-1, ..., k^-M; all jets in the same 3n-variable frame."""

    terms: tuple
    frame: str = XYT

    def __post_init__(self):
        ds = {t.d for t in self.terms}
        if len(ds) > 1:
            raise FrameError("amplitude terms must share a variable count")
        if self.frame not in (XYZ, XYT):
            raise FrameError(f"unknown frame {self.frame!r}")

    @property
    def M(self) -> int:
        return len(self.terms) - 1

    def __getitem__(self, m):
        return self.terms[m]

    def __len__(self):
        return len(self.terms)

    @property
    def truncations(self):
        return [t.T for t in self.terms]


def _n_of(jet: Jet, k: int) -> int:
    if jet.d % k:
        raise FrameError(f"jet in {jet.d} variables is not a {k}n-variable frame")
    return jet.d // k


def _L_pairs(n):
    return [(n + i, 2 * n + i) for i in range(n)]


def _det(mat):
    """Determinant of a small square matrix of jets (cofactor expansion)."""
    size = len(mat)
    if size == 1:
        return mat[0][0]
    if size == 2:
        return mat[0][0] * mat[1][1] - mat[0][1] * mat[1][0]
    total = None
    for j in range(size):
        minor = [row[:j] + row[j + 1:] for row in mat[1:]]
        term = mat[0][j] * _det(minor)
        if j % 2:
            term = -term
        total = term if total is None else total + term
    return total


# ----------------------------------------------------------------------
# phase


def compute_theta(psi: Jet) -> list[Jet]:
    """theta_i(x, y, z) = int_0^1 psi_{x_i}(t x + (1-t) y, z) dt."""
    n = _n_of(psi, 2)
    return [affine_blend_integral(psi.derive(i), n) for i in range(n)]


def compute_z_of_theta(theta: Sequence[Jet]) -> list[Jet]:
    """z(x, y, tau) with theta(x, y, z) = theta(p, p, pbar) + tau."""
    n = len(theta)
    for i, t in enumerate(theta):
        for j in range(n):
            e = [0] * (3 * n)
            e[2 * n + j] = 1
            want = 1 if i == j else 0
            if t.coeff(e) != want:
                raise JetError("d theta / dz is not the identity at the base point; "
                               "the model is not in Bochner coordinates")
    return invert_map(theta, n)


def _xy_coords(n, T, base, mode):
    return [Jet.variable(i, 3 * n, T, base, mode) for i in range(2 * n)]


def compute_delta0(psi: Jet, theta: Sequence[Jet], z_of_theta: Sequence[Jet]) -> Jet:
    """Delta0 = det psi_yz(y, z) / det theta_z(x, y, z), expressed in (x, y, tau)."""
    n = len(theta)
    base_xyz = theta[0].base
    psi_yz = []
    for i in range(n):
        row = []
        di = psi.derive(i)
        for j in range(n):
            h = di.derive(n + j)
            # (x, z) -> (y, z) slots of the 3n frame
            row.append(reindex(h, [n + a for a in range(n)] + [2 * n + b for b in range(n)],
                               3 * n, base_xyz))
        psi_yz.append(row)
    theta_z = [[theta[i].derive(2 * n + j) for j in range(n)] for i in range(n)]
    num = _det(psi_yz)
    den = _det(theta_z)
    if den.constant_term.is_zero():
        raise JetError("det theta_z vanishes at the base point")
    ratio = num * den.reciprocal()
    z0 = z_of_theta[0]
    coords = _xy_coords(n, z0.T, z0.base, z0.mode)
    return jet_compose(ratio, coords + list(z_of_theta))


# ----------------------------------------------------------------------
# the S operator


def _L_power_table(jet: Jet, n: int, upto: int) -> list[Jet]:
    """[jet, L jet, L^2 jet, ...] up to L^upto."""
    pairs = _L_pairs(n)
    out = [jet]
    for _ in range(upto):
        out.append(out[-1].laplace_pairs(pairs))
    return out


def apply_S(series: AmplitudeSeries, direction: str = "forward") -> AmplitudeSeries:
    """(S^{+-1} a)_m = sum_{i+j=m} (+-1)^i L^i a_j / i!."""
    if series.frame != XYT:
        raise FrameError("S acts on amplitudes in the (x, y, tau) frame")
    if direction not in ("forward", "inverse"):
        raise ValueError("direction must be 'forward' or 'inverse'")
    sign = 1 if direction == "forward" else -1
    M = series.M
    if M < 0:
        return series
    n = _n_of(series[0], 3)
    powers = [_L_power_table(series[j], n, M - j) for j in range(M + 1)]
    out = []
    for m in range(M + 1):
        acc = None
        for i in range(m + 1):
            term = powers[m - i][i]
            if i:
                term = term / (sign ** i * factorial(i))
            acc = term if acc is None else acc + term
        out.append(acc)
    return AmplitudeSeries(tuple(out), XYT)


def _blend_y(g: Jet, n: int) -> Jet:
    """int_0^1 g(x, t x + (1-t) y, tau) dt in the (x, y, tau) frame."""
    keep = {i: i for i in range(n)}
    keep.update({2 * n + i: 2 * n + i for i in range(n)})
    return blend_integral(
        g,
        blend=[n + i for i in range(n)],
        to_x=list(range(n)),
        to_y=[n + i for i in range(n)],
        keep=keep,
        d_out=3 * n,
        base_out=g.base,
    )


def compute_amplitudes(delta0: Jet, table: "CoefficientTable", z_of_theta: Sequence[Jet]):
    """Return (a, A) with A a list of n AmplitudeSeries (one per tau direction).

    a_0 = Delta0 - 1 and a_m = b_m(x, z(x, y, tau)) Delta0. Since (S a)_m
    vanishes on y = x it factors as (x - y) . (S A)_{m+1}; the factor is
    minus the blend of D_y (S a)_m along the segment from y to x.
    """
    n = len(z_of_theta)
    M = table.M
    P = table.work["P"] if table.work and "P" in table.work else _pulled_products(
        table.b, delta0, z_of_theta)
    a_terms = [delta0 - 1] + [P[m] for m in range(1, M + 1)]
    a = AmplitudeSeries(tuple(a_terms), XYT)
    Sa = apply_S(a, "forward")
    zero = Jet(3 * n, delta0.T, base=delta0.base, mode=delta0.mode)
    SA = [[zero] for _ in range(n)]
    for m in range(1, M + 1):
        g = Sa[m - 1]
        for i in range(n):
            SA[i].append(-_blend_y(g.derive(n + i), n))
    A = []
    for i in range(n):
        # A_0 = 0, and the zero term must not clip the truncation of the rest
        series = AmplitudeSeries(tuple(SA[i]), XYT)
        inv = apply_S(series, "inverse")
        A.append(inv)
    return a, A


def negligibility_defect(a: AmplitudeSeries, A: Sequence[AmplitudeSeries], N: int,
                         remainder_sign: int = -1) -> list[Jet]:
    """Coefficients of (a^(N) - nabla A^(N+1)) - remainder_sign k^{-(N+1)} D_tau . A_{N+1}.

    ``nabla A = D_tau . A + k (x - y) . A``. The returned list holds the
    coefficients of k^0 .. k^-(N+1); the identity holds iff all are zero.
    Entry j for j <= N is a_j - D_tau . A_j - (x - y) . A_{j+1}; the last
    entry is -(1 + remainder_sign) D_tau . A_{N+1}, so only the sign -1 makes
    the identity hold when D_tau . A_{N+1} is nonzero.
    """
    n = len(A)
    if N + 1 > min(s.M for s in A) or N > a.M:
        raise TruncationError(f"amplitudes computed only to order {a.M}")
    ref = a[0]
    xmy = [Jet.displacement(i, 3 * n, ref.T, ref.base, ref.mode)
           - Jet.displacement(n + i, 3 * n, ref.T, ref.base, ref.mode) for i in range(n)]

    def div(m):
        acc = None
        for i in range(n):
            t = A[i][m].derive(2 * n + i)
            acc = t if acc is None else acc + t
        return acc

    def dot(m):
        acc = None
        for i in range(n):
            t = xmy[i] * A[i][m]
            acc = t if acc is None else acc + t
        return acc

    out = []
    for j in range(N + 1):
        out.append(a[j] - div(j) - dot(j + 1))
    # k^{-(N+1)}: only nabla A^(N+1) contributes, through D_tau . A_{N+1}
    rem = div(N + 1)
    out.append(-rem - rem.scale(CScalar.of(remainder_sign, rem.mode)))
    return out


# ----------------------------------------------------------------------
# coefficients


@dataclass
class CoefficientTable:
    model: str
    n: int
    M: int
    T_used: int
    q: int
    mode: ScalarMode
    b: list
    diagnostics: dict = field(default_factory=dict)
    work: dict | None = field(default=None, repr=False, compare=False)

    def value_at_base(self, m: int) -> CScalar:
        return self.b[m].constant_term

    def output_jet(self, m: int) -> Jet:
        """b_m truncated to the documented output degree q."""
        return self.b[m].truncate(self.q)

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "n": self.n,
            "M": self.M,
            "T_used": self.T_used,
            "output_degree": self.q,
            "scalar_mode": str(self.mode),
            "b": [j.to_dict() for j in self.b],
            "diagnostics": {k: _jsonable(v) for k, v in self.diagnostics.items()},
        }

    def to_json(self, **kw) -> str:
        return json.dumps(self.to_dict(), **kw)

    @classmethod
    def from_dict(cls, data: dict) -> "CoefficientTable":
        from .scalars import parse_mode

        return cls(
            model=data["model"],
            n=data["n"],
            M=data["M"],
            T_used=data["T_used"],
            q=data["output_degree"],
            mode=parse_mode(data["scalar_mode"]),
            b=[Jet.from_dict(j) for j in data["b"]],
            diagnostics=data.get("diagnostics", {}),
        )

    def to_csv(self, r="1/4", bits: int = 128) -> str:
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["m", "b_m_re", "b_m_im", "sup_majorant"])
        sups = sup_majorant(self, r, bits)
        for m, jet in enumerate(self.b):
            c = jet.constant_term
            w.writerow([m, self.mode.format(c.re), self.mode.format(c.im), mpmath.nstr(sups[m], 20)])
        return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, (int, float, str, bool)) or v is None:
        return v
    return str(v)


def _pulled_products(b: Sequence[Jet], delta0: Jet, z_of_theta: Sequence[Jet]) -> list[Jet]:
    n = len(z_of_theta)
    z0 = z_of_theta[0]
    out = []
    for bm in b:
        coords = [Jet.variable(i, 3 * n, z0.T, z0.base, z0.mode) for i in range(n)]
        out.append(jet_compose(bm, coords + list(z_of_theta)) * delta0)
    return out


def compute_bm(model: PotentialModel, M: int, T: int | None = None, q: int | None = None,
               mode: ScalarMode = RATIONAL, keep_work: bool = False) -> CoefficientTable:
    """b_0..b_M of ``model`` at the origin, each valid through degree T - 2m.

    Either T or the output degree q may be given; the other follows from
    T = 2M + q + 2.
    """
    with mode.context():
        return _compute_bm(model, M, T, q, mode, keep_work)


def _compute_bm(model, M, T, q, mode, keep_work):
    if M < 0:
        raise ValueError("M must be non-negative")
    if T is None:
        T = 2 * M + (q if q is not None else 0) + 2
    if q is None:
        q = T - 2 * M - 2
    if q < 0 or T < 2 * M + q + 2:
        raise TruncationError(f"truncation T={T} too small for M={M} with output degree {q}; "
                              f"need T >= 2M + q + 2 = {2 * M + max(q, 0) + 2}")
    if not bochner_check(model):
        raise JetError(f"model {model.name} is not in Bochner coordinates")
    n = model.n
    timings = {}
    t0 = time.perf_counter()
    psi = polarize(model.phi_jet(T + 2, mode))
    theta = compute_theta(psi)
    z_tau = compute_z_of_theta(theta)
    delta0 = compute_delta0(psi, theta, z_tau)
    timings["phase"] = time.perf_counter() - t0

    base_xz = psi.base
    pairs = _L_pairs(n)
    # tau(x, z) = psi_x(x, z) - psi_x(p, pbar) for the final pullback
    tau_of_z = []
    for i in range(n):
        g = psi.derive(i)
        tau_of_z.append(g - g.constant_term)
    x_coords_xz = [Jet.variable(i, 2 * n, T + 1, base_xz, mode) for i in range(n)]
    diag_map = list(range(n)) + list(range(n)) + [n + i for i in range(n)]
    diag_base = tuple(base_xz[:n]) + tuple(z_tau[0].base[2 * n:])

    one = Jet.constant(1, 2 * n, T, base_xz, mode)
    b = [one]
    P = [delta0]
    Lpow: dict[int, list[Jet]] = {0: [delta0]}  # Lpow[j][l] = L^l P_j
    coords = [Jet.variable(i, 3 * n, z_tau[0].T, z_tau[0].base, mode) for i in range(n)]
    for m in range(1, M + 1):
        t1 = time.perf_counter()
        acc = None
        for l in range(1, m + 1):
            j = m - l
            lp = Lpow[j]
            while len(lp) <= l:
                lp.append(lp[-1].laplace_pairs(pairs))
            term = lp[l] / factorial(l)
            acc = term if acc is None else acc + term
        c_m = -reindex(acc, diag_map, 2 * n, diag_base)
        bm = jet_compose(c_m, x_coords_xz + tau_of_z).truncate(T - 2 * m)
        b.append(bm)
        Pm = jet_compose(bm, coords + list(z_tau)) * delta0
        P.append(Pm)
        Lpow[m] = [Pm]
        timings[f"b{m}"] = time.perf_counter() - t1

    diagnostics = {
        "timings_s": timings,
        "truncations": [j.T for j in b],
        "backend": _backend(),
    }
    work = {"psi": psi, "theta": theta, "z_of_theta": z_tau, "delta0": delta0, "P": P} if keep_work else None
    return CoefficientTable(model.name, n, M, T, q, mode, b, diagnostics, work)


def _backend():
    from . import kernels

    return kernels.BACKEND


def sup_majorant(table: CoefficientTable, r, bits: int = 128) -> list:
    """sum_alpha |coeff_alpha| r^|alpha| for each b_m (output-degree jets)."""
    rr = to_mpf(RATIONAL.convert(r), bits) if isinstance(r, str) else mpmath.mpf(r)
    if rr <= 0:
        raise ValueError("radius must be positive")
    return [table.output_jet(m).abs_majorant(rr, bits) for m in range(table.M + 1)]
