"""Pure-Python reference kernels for truncated multivariate series.

Coefficient dicts map exponent tuples to ring elements (mpq or mpf). Every
function here has a drop-in twin in ``_ckernels.pyx``.
"""


def _pack_items(terms, T, base):
    items = []
    for exps, c in terms.items():
        deg = 0
        key = 0
        mult = 1
        for e in exps:
            deg += e
            key += e * mult
            mult *= base
        if deg <= T:
            items.append((deg, key, c))
    items.sort(key=lambda t: t[0])
    return items


def _unpack(key, d, base):
    exps = []
    for _ in range(d):
        key, r = divmod(key, base)
        exps.append(r)
    return tuple(exps)


def mul_trunc(a, b, d, T):
    """Truncated Cauchy product of two coefficient dicts in ``d`` variables.

    Exponent tuples are packed into integers in base ``T + 1``; because every
    kept product has total degree at most ``T`` no digit ever carries, so
    exponent addition becomes integer addition.
    """
    if not a or not b:
        return {}
    base = T + 1
    ai = _pack_items(a, T, base)
    bi = _pack_items(b, T, base)
    acc = {}
    get = acc.get
    for da, ka, ca in ai:
        room = T - da
        for db, kb, cb in bi:
            if db > room:
                break
            k = ka + kb
            v = get(k)
            acc[k] = ca * cb if v is None else v + ca * cb
    return {_unpack(k, d, base): v for k, v in acc.items() if v}


def apply_laplace_pair(terms, pairs):
    """Apply sum_i d/dv_{p_i} d/dv_{q_i} to a coefficient dict (one pass)."""
    out = {}
    for exps, c in terms.items():
        for p, q in pairs:
            ep = exps[p]
            eq = exps[q]
            if ep == 0 or eq == 0:
                continue
            new = list(exps)
            new[p] = ep - 1
            new[q] = eq - 1
            key = tuple(new)
            v = c * (ep * eq)
            out[key] = out[key] + v if key in out else v
    return {k: v for k, v in out.items() if v}
