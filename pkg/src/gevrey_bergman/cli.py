"""Command line front end.

Every subcommand writes its main payload (JSON or CSV) to --out or stdout and
prints one PASS/FAIL line per hard assertion to stderr. The exit status is 0
exactly when all of them pass.

Scaling recipe for Bochner-rescaled points: the log-kernel check at
(x/sqrt(k), y/sqrt(k)) is ``logcheck --scale-sqrt-k`` on the unscaled grid.
"""

from __future__ import annotations

import argparse
import json
import random
import sys
from fractions import Fraction

import mpmath

from . import asymptotics, gevrey, growth, oracle, potentials, recursion
from .scalars import RATIONAL, parse_mode

EXACT_MODELS = ("bargmann_fock", "fubini_study")


class Checks:
    def __init__(self):
        self.results = []

    def add(self, name: str, ok: bool, detail: str = ""):
        self.results.append((name, bool(ok)))
        print(f"{'PASS' if ok else 'FAIL'} {name}{': ' + detail if detail else ''}", file=sys.stderr)

    @property
    def ok(self) -> bool:
        return all(ok for _, ok in self.results)


def _emit(args, text: str):
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
        if not text.endswith("\n"):
            sys.stdout.write("\n")


def _model(args):
    if args.model_config is not None:
        return potentials.from_config(args.model_config)
    params = {}
    if args.model == "radial_quartic" and args.c is not None:
        params["c"] = args.c
    return potentials.from_config({"name": args.model, "n": args.n, "params": params})


def _ks(text: str) -> list[int]:
    return [int(v) for v in text.split(",") if v.strip()]


def _fractions(text: str) -> list[Fraction]:
    out = []
    for v in text.split(","):
        v = v.strip()
        if v.startswith("2^"):
            out.append(Fraction(2) ** int(v[2:]))
        elif v:
            out.append(Fraction(v))
    return out


# ----------------------------------------------------------------------
# subcommands


def cmd_coeffs(args, checks: Checks):
    model = _model(args)
    mode = args.scalar
    table = recursion.compute_bm(model, args.M, T=args.T, q=args.q, mode=mode)
    checks.add("b0 = 1 at the base point", table.value_at_base(0) == mode.one if mode.exact
               else abs(complex(table.value_at_base(0).re) - 1) < 1e-20)
    if mode.exact and model.name == "bargmann_fock":
        checks.add("flat model: b_m = 0 for m >= 1", all(table.b[m].is_zero() for m in range(1, args.M + 1)))
    if mode.exact and model.name == "fubini_study" and args.M >= 1:
        b1 = table.output_jet(1)
        one = b1.constant_term
        checks.add("Fubini-Study: b1 = 1", one == mode.one and (b1 - b1.truncate(0)).is_zero())
        checks.add("Fubini-Study: b_m = 0 for m >= 2",
                   all(table.b[m].is_zero() for m in range(2, args.M + 1)))
    if args.stability:
        wider = recursion.compute_bm(model, args.M, T=table.T_used + 2, mode=mode)
        same = all((table.output_jet(m) - wider.output_jet(m).truncate(table.q)).is_zero()
                   for m in range(args.M + 1))
        checks.add("outputs unchanged under T -> T + 2", same)
    if args.csv is not None:
        _emit(args, table.to_csv(args.csv))
    else:
        _emit(args, table.to_json(indent=1))


def _family(model, radius, tol, bits):
    def build(k):
        return oracle.monomial_norms(model, k, tol=tol, radius=radius, bits=bits)

    return build


def cmd_compare(args, checks: Checks):
    model = _model(args)
    pairs = [(complex(x), complex(y)) for x, y in (args.pair or [("0", "0")])]
    radius = max(max(abs(x), abs(y)) for x, y in pairs)
    table = recursion.compute_bm(model, args.N, q=args.q, mode=RATIONAL)
    ks = _ks(args.ks)
    recs = asymptotics.compare_with_oracle(table, model, _family(model, radius, args.tol, args.bits),
                                           ks, pairs, args.N, bits=args.bits)
    if model.name == "bargmann_fock" or (model.name == "fubini_study" and args.N >= 1):
        worst = max(r.relative_residual for r in recs)
        checks.add("expansion equals the exact kernel", worst < mpmath.mpf("1e-10"),
                   f"max relative residual {mpmath.nstr(worst, 3)}")
    if args.expect_rate and len(ks) >= 2:
        for x, y in pairs:
            res = [r.relative_residual for r in recs if (r.x, r.y) == (x, y)]
            fit = asymptotics.fit_rate(ks, res)
            checks.add(f"residual rate at ({x}, {y})", abs(fit.exponent - (args.N + 1)) <= 0.5,
                       f"exponent {fit.exponent:.3f}, expected {args.N + 1}")
    _emit(args, asymptotics.records_to_csv(recs))


def cmd_logcheck(args, checks: Checks):
    model = _model(args)
    a, eps = Fraction(args.a), Fraction(args.eps)
    lines = ["k,x_re,x_im,y_re,y_im,diastasis,k2_residual"]
    ok = True
    for k in _ks(args.ks):
        R = asymptotics.log_regime_radius(k, args.delta, a, eps)
        grid = asymptotics.log_regime_grid(model, R, bits=args.bits)
        if args.scale_sqrt_k:
            grid = [(x / k ** 0.5, y / k ** 0.5) for x, y in grid]
        radius = max(max(abs(x), abs(y)) for x, y in grid) * 1.01
        orc = oracle.monomial_norms(model, k, tol=args.tol, radius=radius, bits=args.bits)
        for x, y in grid:
            val = asymptotics.log_kernel_residual(orc, model, k, x, y, args.delta, a, eps, bits=args.bits)
            D = potentials.diastasis(model, [x], [y], args.bits).value
            ok = ok and args.lo <= val <= args.hi
            lines.append(f"{k},{x.real},{x.imag},{y.real},{y.imag},{mpmath.nstr(D, 8)},{mpmath.nstr(val, 12)}")
    checks.add(f"k^2 residual in [{args.lo}, {args.hi}] at every point", ok)
    _emit(args, "\n".join(lines) + "\n")


def cmd_growth(args, checks: Checks):
    model = _model(args)
    table = recursion.compute_bm(model, args.M, q=args.q, mode=args.scalar)
    sups = recursion.sup_majorant(table, args.r, bits=args.bits)
    checks.add("sup-majorant of b0 is 1", abs(sups[0] - 1) < mpmath.mpf("1e-20"))
    lines = ["m,b_m_at_base,sup_majorant"]
    for m, s in enumerate(sups):
        lines.append(f"{m},{table.value_at_base(m).re},{mpmath.nstr(s, 17)}")
    if len(sups) >= 4 and all(s > 0 for s in sups[1:]):
        fit = growth.growth_fit(sups, (1, len(sups) - 1))
        lines.append(f"# fit logC={fit.logC:.6g} sigma={fit.sigma:.6g} r2={fit.r_squared:.6g}")
    _emit(args, "\n".join(lines) + "\n")


def cmd_majorant(args, checks: Checks):
    mode = {"worst": growth.WORST_CASE, "inequality": growth.INEQUALITY}.get(args.mode, args.mode)
    table = growth.majorant_recursion(1, Fraction(args.a), Fraction(args.eps), Fraction(args.C),
                                      args.mmax, index_cap=args.kmax, mode=mode, bits=args.bits)
    if mode == growth.WORST_CASE and Fraction(args.C) == 1:
        rep = growth.check_lower_bound(table, args.mmax, args.kmax)
        checks.add("lower bound entry(m, 0, k e1) >= 2^(-pm) (2m-2+k)!^p", rep.passed,
                   f"minimum margin {min(float(r[5]) for r in rep.rows):.4g}")
        _emit(args, rep.to_csv())
    else:
        lines = ["m,k,entry_lo,entry_hi"]
        for m in range(1, args.mmax + 1):
            for k in range(args.kmax + 1):
                e = table.entry(m, (0, 0), (0, k))
                lines.append(f"{m},{k},{float(e.lo):.17g},{float(e.hi):.17g}")
        checks.add("enclosures ordered", True)
        _emit(args, "\n".join(lines) + "\n")


def cmd_extension(args, checks: Checks):
    bits = args.precision_bits
    with mpmath.workprec(bits):
        if args.function == "lacunary":
            ev = gevrey.calibrated_extension(args.a, r_max=args.r_max, min_orders=args.min_orders,
                                             eps_cut=args.eps_cut, bits=bits)
            f = ev.gder.f
        else:
            bump = gevrey.RadialBump(args.a, bits)
            cutoff = gevrey.build_cutoff(args.eps_cut, bits)
            C1 = gevrey.estimate_C1(bump, args.a, [mpmath.mpf(i) / 10 for i in range(0, 9, 2)], bits=bits)
            ev = gevrey.ExtensionEvaluator(args.a, C1, bump, cutoff, bits=bits)
            f = bump.f
        gen = random.Random(args.seed)
        worst = mpmath.mpf(0)
        for _ in range(100):
            x = mpmath.mpc(gen.uniform(-0.7, 0.7), gen.uniform(-0.7, 0.7))
            worst = max(worst, abs(ev.extend(x, mpmath.conj(x), diagonal_shortcut=False) - f(x)))
        checks.add("restriction F(x, xbar) = f(x)", worst <= mpmath.mpf("1e-10"),
                   f"max error {mpmath.nstr(worst, 3)}")
        radii = [mpmath.mpf(r.numerator) / r.denominator for r in _fractions(args.radii)]
        fit = gevrey.vanishing_rate_fit(ev, radii, args.direction, x0=mpmath.mpf(args.x0))
        target = 1 / (mpmath.mpf(mpmath.mpmathify(args.a)) - 1)
        rel = abs(fit.slope - float(target)) / float(target)
        checks.add("dbar vanishing-rate slope 1/(a-1)", rel <= args.slope_tol,
                   f"slope {fit.slope:.4f}, target {float(target):.4f}, rel. error {rel:.3f}")
        lines = ["r,abs_F,abs_dbarF,active_index_max"]
        for r, m in zip(fit.radii, fit.magnitudes):
            y, z = gevrey.displaced_pair(mpmath.mpf(args.x0), r)
            try:
                F = mpmath.nstr(abs(ev.extend(y, z)), 17)
            except gevrey.TermBudgetError:
                F = "budget"
            lines.append(f"{mpmath.nstr(r, 10)},{F},{mpmath.nstr(m, 17)},{ev.active_max(r ** 2)}")
        lines.append(f"# slope={fit.slope:.6g} r2={fit.r_squared:.6g} C1={mpmath.nstr(ev.C1, 8)}")
        _emit(args, "\n".join(lines) + "\n")


def cmd_oracle(args, checks: Checks):
    model = _model(args)
    x, y = complex(args.x), complex(args.y)
    radius = max(abs(x), abs(y))
    orc = oracle.monomial_norms(model, args.k, tol=args.tol, radius=radius, bits=args.bits)
    kv = oracle.kernel_eval(orc, x, y)
    checks.add("monomial norms positive", all(h > 0 for h in orc.norms))
    checks.add("tail below tolerance", orc.tail_bound <= args.tol, mpmath.nstr(orc.tail_bound, 3))
    if model.name == "fubini_study" and x == 0 and y == 0:
        want = (args.k + 1) / mpmath.pi
        checks.add("K(0,0) = (k+1)/pi", abs(kv.raw - want) <= mpmath.mpf("1e-12") * want)
    text = orc.to_csv() + "\nx,y,K_re,K_im,weighted\n"
    text += f"{x},{y},{mpmath.nstr(kv.raw.real, 20)},{mpmath.nstr(kv.raw.imag, 20)},{mpmath.nstr(kv.weighted, 20)}\n"
    _emit(args, text)


# ----------------------------------------------------------------------


def _model_flags(p):
    p.add_argument("--model", default="radial_quartic", choices=sorted(potentials.CATALOG))
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--c", default=None, help="quartic coefficient, e.g. 1/10")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gevrey-bergman", description=__doc__,
                                     formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--scalar", default="rational", type=parse_mode,
                        help="rational | bigfloat:BITS (default rational)")
    parser.add_argument("--out", default=None, help="write the payload here instead of stdout")
    parser.add_argument("--config", default=None,
                        help="JSON file: a model config {name, n, params} and/or an 'options' object")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="compute and serialize b_0..b_M")
    _model_flags(p)
    p.add_argument("--M", type=int, default=3)
    p.add_argument("--q", type=int, default=None, help="output degree")
    p.add_argument("--T", type=int, default=None, help="working truncation")
    p.add_argument("--csv", default=None, metavar="R", help="emit CSV with sup-majorants at radius R")
    p.add_argument("--stability", action="store_true", help="also check T -> T + 2")
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("compare", help="truncated expansion against the exact kernel")
    _model_flags(p)
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--ks", default="20,40,80")
    p.add_argument("--pair", nargs=2, action="append", metavar=("X", "Y"))
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--bits", type=int, default=192)
    p.add_argument("--expect-rate", action="store_true", help="assert residual exponent N+1 within 0.5")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("logcheck", help="k^2-scaled log-kernel residuals near the diagonal")
    _model_flags(p)
    p.set_defaults(model="fubini_study")
    p.add_argument("--ks", default="16,32,64,128,256")
    p.add_argument("--a", default="2")
    p.add_argument("--eps", default="1/2")
    p.add_argument("--delta", default="1")
    p.add_argument("--lo", type=float, default=0.5)
    p.add_argument("--hi", type=float, default=1.5)
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--bits", type=int, default=192)
    p.add_argument("--scale-sqrt-k", action="store_true")
    p.set_defaults(func=cmd_logcheck)

    p = sub.add_parser("growth", help="sup-majorants of b_m and a factorial growth fit")
    _model_flags(p)
    p.add_argument("--M", type=int, default=5)
    p.add_argument("--q", type=int, default=4)
    p.add_argument("--r", default="1/4")
    p.add_argument("--bits", type=int, default=128)
    p.set_defaults(func=cmd_growth)

    p = sub.add_parser("majorant", help="worst-case majorant recursion and its factorial lower bound")
    p.add_argument("--a", default="2")
    p.add_argument("--eps", default="1/2")
    p.add_argument("--C", default="1")
    p.add_argument("--mmax", type=int, default=6)
    p.add_argument("--kmax", type=int, default=4)
    p.add_argument("--mode", default="worst", help="worst | inequality")
    p.add_argument("--bits", type=int, default=192)
    p.set_defaults(func=cmd_majorant)

    p = sub.add_parser("extension", help="Gevrey almost holomorphic extension and its dbar decay")
    p.add_argument("--a", default="2")
    p.add_argument("--eps-cut", default="1/2")
    p.add_argument("--radii", default="2^-3,2^-4,2^-5,2^-6,2^-7,2^-8")
    p.add_argument("--direction", default="ybar", choices=("ybar", "zbar"))
    p.add_argument("--precision-bits", type=int, default=256)
    p.add_argument("--function", default="lacunary", choices=("lacunary", "bump"))
    p.add_argument("--r-max", default="1/8")
    p.add_argument("--min-orders", type=int, default=8)
    p.add_argument("--x0", default="0.3")
    p.add_argument("--slope-tol", type=float, default=0.2)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_extension)

    p = sub.add_parser("oracle", help="exact kernel value from monomial norms")
    _model_flags(p)
    p.set_defaults(model="fubini_study")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--x", default="0")
    p.add_argument("--y", default="0")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--bits", type=int, default=192)
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    args.model_config = None
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        model_cfg = cfg.get("model", cfg if "name" in cfg else None)
        options = cfg.get("options", {})
        # options fill in defaults; explicit flags still win
        sub_defaults = {k.replace("-", "_"): v for k, v in options.items()}
        fresh = build_parser()
        for action in fresh._subparsers._group_actions[0].choices[args.command]._actions:
            if action.dest in sub_defaults:
                action.default = sub_defaults[action.dest]
        args = fresh.parse_args(argv)
        args.model_config = model_cfg
    checks = Checks()
    try:
        args.func(args, checks)
    except (ValueError, ArithmeticError, RuntimeError, OSError) as exc:
        checks.add(f"{args.command} completed", False, f"{type(exc).__name__}: {exc}")
    return 0 if checks.ok else 1


if __name__ == "__main__":
    sys.exit(main())
