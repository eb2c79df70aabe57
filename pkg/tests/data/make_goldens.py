"""Regenerate goldens.json. Values are frozen after the first run; rerun only on purpose."""

import json
from fractions import Fraction
from pathlib import Path

import mpmath

from gevrey_bergman import growth, potentials, recursion

OUT = Path(__file__).with_name("goldens.json")


def main():
    quartic = potentials.radial_quartic("1/10")
    d0 = recursion.compute_bm(quartic, 0, T=2, keep_work=True).work["delta0"]
    table = recursion.compute_bm(quartic, 8, q=2)
    sups = recursion.sup_majorant(table, "1/4", bits=192)
    majorant = {}
    for a, eps in (("2", "1/2"), ("3/2", "1/4")):
        t = growth.majorant_recursion(1, Fraction(a), Fraction(eps), 1, M=3, index_cap=2)
        majorant[f"{a},{eps}"] = {
            f"{m},{k}": str(t.entry(m, (0, 0), (0, k)).lo)
            for m in range(1, 4) for k in range(3)
        }
    data = {
        "quartic_c": "1/10",
        "quartic_delta0_T2": d0.to_dict(),
        "quartic_b_at_base": [str(Fraction(int(c.re.numerator), int(c.re.denominator)))
                              for c in (table.value_at_base(m) for m in range(9))],
        "quartic_sup_majorant_r1_4_q2": [mpmath.nstr(s, 30) for s in sups],
        "majorant_worst_case_lo": majorant,
    }
    OUT.write_text(json.dumps(data, indent=1) + "\n")


if __name__ == "__main__":
    main()
