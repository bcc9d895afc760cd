"""Numpy implementation of the hot kernels.

This module is the reference for the compiled ``_core`` extension: both
expose the same functions with the same signatures and produce identical
integer site keys.  Floating results agree exactly for the Rademacher,
uniform and two-point laws and to the last ulp or so for the Gaussian law
(libm vs numpy transcendental functions).

Site hash
---------
``base = splitmix64(seed ^ splitmix64(stream))`` and then, for every
coordinate ``c`` of the site in order, ``h = splitmix64(h ^ zigzag(c))``
with ``zigzag(c) = (c << 1) ^ (c >> 63)`` on two's complement int64.  All
arithmetic is modulo 2**64.
"""

import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_S63 = np.uint64(63)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53
_TWO_PI = 6.283185307179586

DIST_RADEMACHER = 0
DIST_GAUSSIAN = 1
DIST_UNIFORM = 2
DIST_TWO_POINT = 3

# elements per chunk when materialising draws
_CHUNK = 1 << 21


def splitmix64(x):
    x = np.asarray(x, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = x + GOLDEN
        z = (z ^ (z >> _S30)) * _M1
        z = (z ^ (z >> _S27)) * _M2
    return z ^ (z >> _S31)


def zigzag(c):
    c = np.asarray(c, dtype=np.int64)
    with np.errstate(over="ignore"):
        return ((c << np.int64(1)) ^ (c >> np.int64(63))).view(np.uint64)


def base_keys(seeds, stream):
    seeds = np.asarray(seeds, dtype=np.uint64)
    return splitmix64(seeds ^ splitmix64(np.uint64(stream)))


def site_keys(seed, stream, coords):
    coords = np.ascontiguousarray(coords, dtype=np.int64)
    h = np.broadcast_to(base_keys(np.uint64(seed), stream), coords.shape[:1])
    for q in range(coords.shape[1]):
        h = splitmix64(h ^ zigzag(coords[:, q]))
    return np.asarray(h, dtype=np.uint64)


def transform(h, dist, params):
    """Map 64-bit keys to draws from the law ``dist``."""
    if dist == DIST_RADEMACHER:
        return np.where((h >> _S63) == 1, 1.0, -1.0)
    if dist == DIST_UNIFORM:
        return ((h >> _S11) + np.uint64(1)).astype(np.float64) * _INV53
    if dist == DIST_GAUSSIAN:
        u1 = ((h >> _S11) + np.uint64(1)).astype(np.float64) * _INV53
        u2 = (splitmix64(h) >> _S11).astype(np.float64) * _INV53
        return np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
    if dist == DIST_TWO_POINT:
        p, a, b = params[0], params[1], params[2]
        u = (h >> _S11).astype(np.float64) * _INV53
        return np.where(u < p, a, b)
    raise ValueError(f"unknown distribution code {dist}")


def draw_sites(seed, stream, coords, dist, params):
    return transform(site_keys(seed, stream, coords), dist, params)


def box_keys(seeds, stream, lower, shape):
    h = base_keys(seeds, stream)
    for q, (lo, size) in enumerate(zip(lower, shape)):
        zz = zigzag(np.arange(size, dtype=np.int64) + np.int64(lo))
        h = splitmix64(h[..., np.newaxis] ^ zz)
    return h


def box_draw(seeds, stream, lower, shape, dist, params):
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    shape = tuple(int(s) for s in shape)
    return transform(box_keys(seeds, stream, lower, shape), dist, params)


def box_weighted_sums(seeds, stream, lower, weights, dist, params):
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    flat = weights.ravel()
    out = np.zeros(seeds.shape[0])
    if flat.size == 0:
        return out
    step = max(1, _CHUNK // flat.size)
    for start in range(0, seeds.shape[0], step):
        chunk = seeds[start:start + step]
        draws = box_draw(chunk, stream, lower, weights.shape, dist, params)
        out[start:start + step] = draws.reshape(chunk.shape[0], -1) @ flat
    return out


def example1_labels(omega, d_seq):
    omega = np.asarray(omega, dtype=np.float64)
    d_seq = np.asarray(d_seq, dtype=np.float64)
    labels = np.empty(omega.shape + (d_seq.size,), dtype=np.int8)
    r = omega.copy()
    for k, d in enumerate(d_seq):
        half = 0.5 * d
        plus = r <= half
        minus = ~plus & (r <= d)
        labels[..., k] = np.where(plus, 1, np.where(minus, -1, 0))
        rest = (r - half) / half
        if d < 1.0:
            rest = np.where(minus, rest, (r - d) / (1.0 - d))
        r = np.where(plus, r / half, rest)
    return labels
