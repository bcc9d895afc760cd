# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled hot kernels; same surface and site hash as ``_pycore``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport cos, log, sqrt
from libc.stdint cimport int64_t, int8_t, uint64_t

cnp.import_array()

cdef uint64_t GOLDEN = 0x9E3779B97F4A7C15ULL
cdef double INV53 = 1.0 / 9007199254740992.0
cdef double TWO_PI = 6.283185307179586
cdef int MAX_DIM = 16


cdef inline uint64_t mix(uint64_t x) noexcept nogil:
    cdef uint64_t z = x + GOLDEN
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline uint64_t zz(int64_t c) noexcept nogil:
    return <uint64_t>((c << 1) ^ (c >> 63))


cdef inline double draw(uint64_t h, int dist, double p, double a, double b) noexcept nogil:
    cdef double u1, u2
    if dist == 0:
        return 1.0 if (h >> 63) else -1.0
    elif dist == 1:
        u1 = <double>((h >> 11) + 1) * INV53
        u2 = <double>(mix(h) >> 11) * INV53
        return sqrt(-2.0 * log(u1)) * cos(TWO_PI * u2)
    elif dist == 2:
        return <double>((h >> 11) + 1) * INV53
    else:
        u1 = <double>(h >> 11) * INV53
        return a if u1 < p else b


cdef inline uint64_t base_key(uint64_t seed, uint64_t stream) noexcept nogil:
    return mix(seed ^ mix(stream))


def _check_dist(int dist):
    if dist < 0 or dist > 3:
        raise ValueError(f"unknown distribution code {dist}")


def splitmix64(x):
    cdef const uint64_t[::1] flat = np.ascontiguousarray(
        np.atleast_1d(x), dtype=np.uint64).ravel()
    cdef Py_ssize_t i
    out = np.empty(flat.shape[0], dtype=np.uint64)
    cdef uint64_t[::1] o = out
    for i in range(flat.shape[0]):
        o[i] = mix(flat[i])
    return out.reshape(np.shape(x))


def site_keys(seed, stream, coords):
    cdef const int64_t[:, ::1] c = np.ascontiguousarray(coords, dtype=np.int64)
    cdef Py_ssize_t n = c.shape[0], d = c.shape[1], i, q
    cdef uint64_t base = base_key(<uint64_t>int(seed), <uint64_t>int(stream)), h
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    with nogil:
        for i in range(n):
            h = base
            for q in range(d):
                h = mix(h ^ zz(c[i, q]))
            o[i] = h
    return out


def draw_sites(seed, stream, coords, int dist, params):
    _check_dist(dist)
    cdef uint64_t[::1] keys = site_keys(seed, stream, coords)
    cdef double p = params[0], a = params[1], b = params[2]
    cdef Py_ssize_t i, n = keys.shape[0]
    out = np.empty(n, dtype=np.float64)
    cdef double[::1] o = out
    with nogil:
        for i in range(n):
            o[i] = draw(keys[i], dist, p, a, b)
    return out


cdef void _box_pass(uint64_t seed, uint64_t stream, const int64_t* lower,
                    const Py_ssize_t* shape, Py_ssize_t d, Py_ssize_t total,
                    int dist, double p, double a, double b,
                    const double* weights, double* values, double* acc) noexcept nogil:
    # Odometer over the box with cached partial keys: pk[q+1] hashes coords 0..q.
    cdef uint64_t pk[17]
    cdef int64_t idx[16]
    cdef Py_ssize_t q, flat
    cdef double v, s = 0.0
    pk[0] = base_key(seed, stream)
    for q in range(d):
        idx[q] = 0
        pk[q + 1] = mix(pk[q] ^ zz(lower[q]))
    for flat in range(total):
        v = draw(pk[d], dist, p, a, b)
        if values != NULL:
            values[flat] = v
        if weights != NULL:
            s += weights[flat] * v
        q = d - 1
        idx[q] += 1
        while idx[q] == shape[q] and q > 0:
            idx[q] = 0
            q -= 1
            idx[q] += 1
        if idx[q] == shape[q]:
            break
        while q < d:
            pk[q + 1] = mix(pk[q] ^ zz(lower[q] + idx[q]))
            q += 1
    if acc != NULL:
        acc[0] = s


def _box_args(seeds, lower, shape):
    cdef cnp.ndarray s = np.ascontiguousarray(np.atleast_1d(seeds), dtype=np.uint64)
    lo = np.ascontiguousarray(lower, dtype=np.int64)
    sh = np.ascontiguousarray(shape, dtype=np.intp)
    if lo.shape[0] != sh.shape[0]:
        raise ValueError("lower and shape dimensions differ")
    if lo.shape[0] > MAX_DIM or lo.shape[0] < 1:
        raise ValueError(f"box dimension must be in 1..{MAX_DIM}")
    return s, lo, sh


def box_draw(seeds, stream, lower, shape, int dist, params):
    _check_dist(dist)
    s, lo, sh = _box_args(seeds, lower, shape)
    cdef const uint64_t[::1] sv = s
    cdef const int64_t[::1] lv = lo
    cdef const Py_ssize_t[::1] shv = sh
    cdef Py_ssize_t d = lo.shape[0], total = int(np.prod(sh)), r
    cdef uint64_t st = <uint64_t>int(stream)
    cdef double p = params[0], a = params[1], b = params[2]
    out = np.empty((sv.shape[0], total), dtype=np.float64)
    cdef double[:, ::1] o = out
    if total > 0:
        with nogil:
            for r in range(sv.shape[0]):
                _box_pass(sv[r], st, &lv[0], &shv[0], d, total, dist, p, a, b,
                          NULL, &o[r, 0], NULL)
    return out.reshape((sv.shape[0],) + tuple(int(x) for x in sh))


def box_weighted_sums(seeds, stream, lower, weights, int dist, params):
    _check_dist(dist)
    w = np.ascontiguousarray(weights, dtype=np.float64)
    s, lo, sh = _box_args(seeds, lower, w.shape)
    cdef const uint64_t[::1] sv = s
    cdef const int64_t[::1] lv = lo
    cdef const Py_ssize_t[::1] shv = sh
    cdef const double[::1] wv = w.ravel()
    cdef Py_ssize_t d = lo.shape[0], total = w.size, r
    cdef uint64_t st = <uint64_t>int(stream)
    cdef double p = params[0], a = params[1], b = params[2]
    out = np.zeros(sv.shape[0], dtype=np.float64)
    cdef double[::1] o = out
    if total > 0:
        with nogil:
            for r in range(sv.shape[0]):
                _box_pass(sv[r], st, &lv[0], &shv[0], d, total, dist, p, a, b,
                          &wv[0], NULL, &o[r])
    return out


def example1_labels(omega, d_seq):
    om = np.asarray(omega, dtype=np.float64)
    cdef const double[::1] w = np.ascontiguousarray(om.ravel())
    cdef const double[::1] dv = np.ascontiguousarray(d_seq, dtype=np.float64)
    cdef Py_ssize_t n = w.shape[0], K = dv.shape[0], i, k
    out = np.empty((n, K), dtype=np.int8)
    cdef int8_t[:, ::1] o = out
    cdef double r, d, half
    with nogil:
        for i in range(n):
            r = w[i]
            for k in range(K):
                d = dv[k]
                half = 0.5 * d
                if r <= half:
                    o[i, k] = 1
                    r = r / half
                elif r <= d:
                    o[i, k] = -1
                    r = (r - half) / half
                else:
                    o[i, k] = 0
                    r = (r - d) / (1.0 - d)
    return out.reshape(om.shape + (K,))
