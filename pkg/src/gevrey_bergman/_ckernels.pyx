# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of ``_kernels_py``. Coefficients stay Python objects (mpq/mpf);
the speedup comes from typed index arithmetic and a flat accumulator."""

from libc.stdlib cimport malloc, free
from cpython.ref cimport PyObject


cdef long long _pack(tuple exps, long long base, int* deg_out):
    cdef long long key = 0, mult = 1
    cdef int deg = 0, e
    for x in exps:
        e = x
        deg += e
        key += e * mult
        mult *= base
    deg_out[0] = deg
    return key


def mul_trunc(dict a, dict b, int d, int T):
    if not a or not b:
        return {}
    cdef long long base = T + 1
    cdef Py_ssize_t na = len(a), nb = len(b), i, j, n_a = 0, n_b = 0
    cdef long long* ka = <long long*> malloc(na * sizeof(long long))
    cdef long long* kb = <long long*> malloc(nb * sizeof(long long))
    cdef int* da = <int*> malloc(na * sizeof(int))
    cdef int* db = <int*> malloc(nb * sizeof(int))
    cdef int deg, room
    cdef long long key, span = 1
    cdef list ca = []
    cdef list cb = []
    cdef list order
    cdef object c, v, cai
    try:
        for exps, c in a.items():
            key = _pack(exps, base, &deg)
            if deg <= T:
                ka[n_a] = key
                da[n_a] = deg
                ca.append(c)
                n_a += 1
        items_b = []
        for exps, c in b.items():
            key = _pack(exps, base, &deg)
            if deg <= T:
                items_b.append((deg, key, c))
        items_b.sort(key=lambda t: t[0])
        for t in items_b:
            db[n_b] = t[0]
            kb[n_b] = t[1]
            cb.append(t[2])
            n_b += 1
        for i in range(d):
            span *= base
        if span <= (1 << 20):
            return _mul_dense(ka, da, ca, n_a, kb, db, cb, n_b, T, d, base, span)
        acc = {}
        for i in range(n_a):
            room = T - da[i]
            cai = ca[i]
            for j in range(n_b):
                if db[j] > room:
                    break
                key = ka[i] + kb[j]
                v = acc.get(key)
                if v is None:
                    acc[key] = cai * cb[j]
                else:
                    acc[key] = v + cai * cb[j]
        out = {}
        for key, v in acc.items():
            if v:
                out[_unpack(key, d, base)] = v
        return out
    finally:
        free(ka)
        free(kb)
        free(da)
        free(db)


cdef dict _mul_dense(long long* ka, int* da, list ca, Py_ssize_t n_a,
                     long long* kb, int* db, list cb, Py_ssize_t n_b,
                     int T, int d, long long base, long long span):
    cdef list acc = [None] * span
    cdef Py_ssize_t i, j
    cdef long long key
    cdef int room
    cdef object cai, v
    cdef list touched = []
    for i in range(n_a):
        room = T - da[i]
        cai = ca[i]
        for j in range(n_b):
            if db[j] > room:
                break
            key = ka[i] + kb[j]
            v = acc[key]
            if v is None:
                acc[key] = cai * cb[j]
                touched.append(key)
            else:
                acc[key] = v + cai * cb[j]
    cdef dict out = {}
    for key in touched:
        v = acc[key]
        if v:
            out[_unpack(key, d, base)] = v
    return out


cdef tuple _unpack(long long key, int d, long long base):
    cdef list exps = []
    cdef int i
    for i in range(d):
        exps.append(key % base)
        key //= base
    return tuple(exps)


def apply_laplace_pair(dict terms, list pairs):
    cdef dict out = {}
    cdef int p, q, ep, eq
    cdef list new
    for exps, c in terms.items():
        for pq in pairs:
            p = pq[0]
            q = pq[1]
            ep = exps[p]
            eq = exps[q]
            if ep == 0 or eq == 0:
                continue
            new = list(exps)
            new[p] = ep - 1
            new[q] = eq - 1
            key = tuple(new)
            v = c * (ep * eq)
            old = out.get(key)
            out[key] = v if old is None else old + v
    return {k: v for k, v in out.items() if v}
