"""Coefficient families ``{b_{n,j}}`` and diagnostics of their regularity.

Every scheme has finite support and is stored densely on the bounding box
of that support: ``scheme.lower`` is the lattice point of the box corner and
``scheme.values`` the coefficients.  Diagnostics work on that dense form.
"""

from dataclasses import dataclass, field
from functools import cached_property
from itertools import product

import numpy as np
from scipy import ndimage

from bernfield.errors import ConfigurationError, DegenerateSchemeError

__all__ = [
    "RectangleWeights", "IndexSetWeights", "SetIndexedWeights", "ProductLinearWeights",
    "DenseWeights", "MeasureSpec", "Region", "coefficient", "norm", "check_negligibility",
    "check_shift_condition", "shift_distance", "overlap", "shift_variation",
    "boundary_ratio", "hurst_scaling_profile", "fractional_kernel", "contiguous",
    "example2_gamma", "example2_blocks",
]

_SNAP = 1e-12


class WeightScheme:
    """Dense finite-support weights; subclasses build ``lower``/``values``."""

    @property
    def dim(self):
        return len(self.lower)

    @cached_property
    def dense(self):
        lower, values = self._build()
        return np.asarray(lower, dtype=np.int64), np.asarray(values, dtype=np.float64)

    @property
    def lower(self):
        return self.dense[0]

    @property
    def values(self):
        return self.dense[1]

    @property
    def upper(self):
        """Inclusive upper corner of the support box."""
        return self.lower + np.array(self.values.shape) - 1

    def coefficient(self, j):
        idx = np.asarray(j, dtype=np.int64) - self.lower
        if idx.shape != self.lower.shape:
            raise ConfigurationError(f"site {tuple(j)} has wrong dimension for this scheme")
        if np.any(idx < 0) or np.any(idx >= self.values.shape):
            return 0.0
        return float(self.values[tuple(idx)])

    def items(self):
        """Yield ``(site, coefficient)`` for every nonzero coefficient."""
        for idx in zip(*np.nonzero(self.values)):
            yield tuple(int(c) for c in self.lower + np.array(idx)), float(self.values[idx])

    def norm(self):
        return float(np.sqrt(np.sum(self.values ** 2)))

    def describe(self):
        return {"type": type(self).__name__}


@dataclass(frozen=True, eq=False)
class DenseWeights(WeightScheme):
    """Arbitrary weights given on a box; used for linear combinations."""

    lower_corner: tuple
    array: np.ndarray = field(repr=False)

    def _build(self):
        return self.lower_corner, self.array

    @classmethod
    def combine(cls, schemes, coefs):
        """``sum_r coefs[r] * schemes[r]`` on the union of their boxes."""
        schemes = list(schemes)
        lo = np.min([s.lower for s in schemes], axis=0)
        hi = np.max([s.upper for s in schemes], axis=0)
        out = np.zeros(tuple(hi - lo + 1))
        for s, c in zip(schemes, coefs):
            if s.values.size:
                out[_box_slice(s.lower - lo, s.values.shape)] += c * s.values
        return cls(tuple(int(x) for x in lo), out)


def _box_slice(start, shape):
    return tuple(slice(int(a), int(a) + int(n)) for a, n in zip(start, shape))


@dataclass(frozen=True, eq=False)
class RectangleWeights(WeightScheme):
    """Indicator of ``1 <= j_q <= n t_q`` for every axis."""

    n: int
    t: tuple

    def _build(self):
        counts = [int(np.floor(self.n * float(tq) + _SNAP)) for tq in self.t]
        if any(c < 0 for c in counts):
            raise ConfigurationError("rectangle weights need t in [0, 1]^d")
        return [1] * len(counts), np.ones(counts)

    def with_n(self, n):
        return RectangleWeights(n, self.t)

    def describe(self):
        return {"type": "rectangle", "n": self.n, "t": list(self.t)}


@dataclass(frozen=True, eq=False)
class IndexSetWeights(WeightScheme):
    """Indicator of an explicit finite set ``Gamma`` of lattice points."""

    points: np.ndarray = field(repr=False)
    label: str = "index_set"

    def __post_init__(self):
        pts = np.unique(np.atleast_2d(np.asarray(self.points, dtype=np.int64)), axis=0)
        if pts.size == 0:
            raise ConfigurationError("index set is empty")
        object.__setattr__(self, "points", pts)

    def _build(self):
        lo = self.points.min(axis=0)
        shape = self.points.max(axis=0) - lo + 1
        occ = np.zeros(tuple(shape))
        occ[tuple((self.points - lo).T)] = 1.0
        return lo, occ

    def __len__(self):
        return len(self.points)

    def describe(self):
        return {"type": "index_set", "label": self.label, "size": len(self)}


def contiguous(n, start=0):
    """``Gamma = {start, ..., start + n - 1}`` on Z."""
    return IndexSetWeights(np.arange(start, start + n).reshape(-1, 1), label=f"contiguous_{n}")


def example2_blocks(n):
    """Blocks ``B_1, ..., B_{n-1}`` of the alternating-density recursion.

    ``Gamma_1 = {0, 1}``; ``B_m`` starts two sites after ``max Gamma_m`` and
    holds ``2^m`` sites, contiguous for even m and spaced by 2 for odd m.
    """
    blocks = []
    a = 1
    for m in range(1, n):
        size = 2 ** m
        if m % 2 == 0:
            block = a + 2 + np.arange(size)
        else:
            block = a + 2 + 2 * np.arange(size)
        blocks.append(block)
        a = int(block[-1])
    return blocks


def example2_gamma(n):
    """``Gamma_n`` of the recursion as an :class:`IndexSetWeights`."""
    if n < 1:
        raise ConfigurationError("alternating-density sets are indexed by n >= 1")
    pts = np.concatenate([np.array([0, 1])] + example2_blocks(n))
    return IndexSetWeights(pts.reshape(-1, 1), label=f"example2_{n}")


@dataclass(frozen=True)
class MeasureSpec:
    """Product power measure with density ``prod_q |x_q|^gamma_q``."""

    gammas: tuple

    def __post_init__(self):
        if any(g <= -1 for g in self.gammas):
            raise ConfigurationError("power-density exponents must exceed -1")

    @property
    def dim(self):
        return len(self.gammas)

    @property
    def beta(self):
        return float(sum(g + 1 for g in self.gammas))

    def antiderivative(self, q, x):
        g = self.gammas[q]
        x = np.asarray(x, dtype=np.float64)
        return np.sign(x) * np.abs(x) ** (g + 1) / (g + 1)

    def interval(self, q, a, b):
        return self.antiderivative(q, b) - self.antiderivative(q, a)

    def box(self, lo, hi):
        return float(np.prod([self.interval(q, lo[q], hi[q]) for q in range(self.dim)]))

    @classmethod
    def lebesgue(cls, d):
        return cls((0.0,) * d)


def _snap(x):
    r = np.round(x)
    return np.where(np.abs(x - r) < _SNAP * np.maximum(1.0, np.abs(x)), r, x)


@dataclass(frozen=True)
class Region:
    """Finite union of closed axis-aligned boxes ``[lo, hi]`` in R^d."""

    boxes: tuple

    def __post_init__(self):
        boxes = []
        for lo, hi in self.boxes:
            lo, hi = tuple(float(v) for v in lo), tuple(float(v) for v in hi)
            if len(lo) != len(hi) or any(b < a for a, b in zip(lo, hi)):
                raise ConfigurationError(f"box {lo}..{hi} is malformed")
            boxes.append((lo, hi))
        if not boxes:
            raise ConfigurationError("region has no boxes")
        if len({len(b[0]) for b in boxes}) != 1:
            raise ConfigurationError("region boxes differ in dimension")
        object.__setattr__(self, "boxes", tuple(boxes))

    @property
    def dim(self):
        return len(self.boxes[0][0])

    def cells(self):
        """Disjoint boxes (up to boundaries) whose union is the region."""
        edges = [sorted({b[0][q] for b in self.boxes} | {b[1][q] for b in self.boxes})
                 for q in range(self.dim)]
        out = []
        for idx in product(*[range(len(e) - 1) for e in edges]):
            lo = tuple(edges[q][i] for q, i in enumerate(idx))
            hi = tuple(edges[q][i + 1] for q, i in enumerate(idx))
            mid = [(a + b) / 2 for a, b in zip(lo, hi)]
            if any(all(bl[q] <= mid[q] <= bh[q] for q in range(self.dim))
                   for bl, bh in self.boxes):
                out.append((lo, hi))
        return out

    def intersection(self, other):
        boxes = []
        for alo, ahi in self.boxes:
            for blo, bhi in other.boxes:
                lo = tuple(max(a, b) for a, b in zip(alo, blo))
                hi = tuple(min(a, b) for a, b in zip(ahi, bhi))
                if all(b > a for a, b in zip(lo, hi)):
                    boxes.append((lo, hi))
        return Region(boxes) if boxes else None

    def measure(self, mu):
        return float(sum(mu.box(lo, hi) for lo, hi in self.cells()))


@dataclass(frozen=True, eq=False)
class SetIndexedWeights(WeightScheme):
    """``b_{n,j}(A) = mu(nA cap R_j)^(1/2)`` with ``R_j = j + [0, 1)^d``.

    Cube masses are exact products of one-dimensional antiderivatives.
    """

    measure: MeasureSpec
    region: Region
    n: int

    def __post_init__(self):
        if self.measure.dim != self.region.dim:
            raise ConfigurationError("measure and region dimensions differ")

    def _build(self):
        cells = [(_snap(self.n * np.array(lo)), _snap(self.n * np.array(hi)))
                 for lo, hi in self.region.cells()]
        lo_all = np.min([np.floor(c[0]) for c in cells], axis=0).astype(np.int64)
        hi_all = np.max([np.ceil(c[1]) for c in cells], axis=0).astype(np.int64)
        shape = np.maximum(hi_all - lo_all, 0)
        mass = np.zeros(tuple(shape))
        mu = self.measure
        for clo, chi in cells:
            jlo = np.floor(clo).astype(np.int64)
            jhi = np.maximum(np.ceil(chi).astype(np.int64), jlo + 1)
            factors = []
            for q in range(self.dim):
                j = np.arange(jlo[q], jhi[q])
                a = np.maximum(clo[q], j)
                b = np.minimum(chi[q], j + 1)
                factors.append(np.clip(mu.interval(q, a, b), 0.0, None))
            block = factors[0]
            for f in factors[1:]:
                block = np.multiply.outer(block, f)
            mass[_box_slice(jlo - lo_all, block.shape)] += block
        object.__setattr__(self, "mass", mass)
        return lo_all, np.sqrt(mass)

    @property
    def dim(self):
        return self.region.dim

    def norm(self):
        self.dense
        return float(np.sqrt(self.mass.sum()))

    def with_n(self, n):
        return SetIndexedWeights(self.measure, self.region, n)

    def describe(self):
        return {"type": "set_indexed", "n": self.n, "gamma": list(self.measure.gammas),
                "boxes": [[list(lo), list(hi)] for lo, hi in self.region.boxes]}


def _axis_weights(kernel, m):
    """``b_{m,j} = sum_{i=1}^m a_{i-j}`` for a 1-D kernel; returns (lower, values)."""
    keys = sorted(kernel)
    if not keys:
        raise ConfigurationError("per-axis kernel is empty")
    kmin, kmax = keys[0], keys[-1]
    if m <= 0:
        return 1, np.zeros(0)
    dense = np.zeros(kmax - kmin + 1)
    for k in keys:
        dense[k - kmin] = kernel[k]
    # cumulative sums over kernel index: C[x] = sum_{k <= x} a_k
    csum = np.concatenate([[0.0], np.cumsum(dense)])

    def upto(x):
        return csum[np.clip(x - kmin + 1, 0, len(dense))]

    j = np.arange(1 - kmax, m - kmin + 1)
    return int(j[0]), upto(m - j) - upto(-j)


def fractional_kernel(H, L):
    """``a_i = i^(H - 3/2)`` for ``1 <= i <= L``."""
    i = np.arange(1, int(L) + 1)
    return dict(zip(i.tolist(), (i ** (H - 1.5)).tolist()))


@dataclass(frozen=True, eq=False)
class ProductLinearWeights(WeightScheme):
    """``b_{n,j}(t) = prod_q b^(q)_{floor(n t_q), j_q}`` for per-axis kernels."""

    kernels: tuple
    n: int
    t: tuple

    def __post_init__(self):
        kernels = tuple({int(k): float(v) for k, v in dict(kern).items()} for kern in self.kernels)
        if len(kernels) != len(self.t):
            raise ConfigurationError("need one kernel per axis of t")
        object.__setattr__(self, "kernels", kernels)

    def _build(self):
        lower, block = [], None
        for kern, tq in zip(self.kernels, self.t):
            lo, vals = _axis_weights(kern, int(np.floor(self.n * float(tq) + _SNAP)))
            lower.append(lo)
            block = vals if block is None else np.multiply.outer(block, vals)
        return lower, block

    def with_n(self, n):
        return ProductLinearWeights(self.kernels, n, self.t)

    def with_t(self, t):
        return ProductLinearWeights(self.kernels, self.n, tuple(t))

    def describe(self):
        return {"type": "product_linear", "n": self.n, "t": list(self.t),
                "kernel_sizes": [len(k) for k in self.kernels]}


def coefficient(scheme, j):
    return scheme.coefficient(j)


def norm(scheme):
    return scheme.norm()


def _require_norm(scheme):
    bn = scheme.norm()
    if bn == 0.0:
        raise DegenerateSchemeError("weight scheme has zero norm")
    return bn


def check_negligibility(scheme):
    """``sup_j |b_{n,j}| / b_n``."""
    bn = _require_norm(scheme)
    return float(np.abs(scheme.values).max() / bn)


def _padded_pair(values, shift):
    """``(b, T_shift b)`` on a common box, where ``(T_h b)_j = b_{j+h}``."""
    shift = np.asarray(shift, dtype=np.int64)
    pad = [(max(0, int(-h)), max(0, int(h))) for h in shift]
    pad = [(max(a, b), max(a, b)) for a, b in pad]
    big = np.pad(values, pad)
    moved = np.zeros_like(big)
    src, dst = [], []
    for h, size in zip(shift, big.shape):
        h = int(h)
        if h >= 0:
            dst.append(slice(0, size - h))
            src.append(slice(h, size))
        else:
            dst.append(slice(-h, size))
            src.append(slice(0, size + h))
    moved[tuple(dst)] = big[tuple(src)]
    return big, moved


def _unit(scheme, q):
    if not 0 <= q < scheme.dim:
        raise ConfigurationError(f"axis {q} outside 0..{scheme.dim - 1}")
    e = np.zeros(scheme.dim, dtype=np.int64)
    e[q] = 1
    return e


def shift_distance(scheme, shift):
    """``||T_shift b - b||_{l2}`` computed from the explicit difference."""
    b, moved = _padded_pair(scheme.values, shift)
    return float(np.sqrt(np.sum((moved - b) ** 2)))


def overlap(scheme, shift):
    """``sum_k b_k b_{k+shift}``."""
    b, moved = _padded_pair(scheme.values, shift)
    return float(np.sum(b * moved))


def check_shift_condition(scheme, q):
    """``||T_{e_q} b - b||_{l2} / b_n`` for axis ``q`` (0-based)."""
    bn = _require_norm(scheme)
    return shift_distance(scheme, _unit(scheme, q)) / bn


def shift_variation(scheme, q):
    """``(1 / b_n^2) sum_j |b_{j+e_q}^2 - b_j^2|``."""
    bn = _require_norm(scheme)
    b, moved = _padded_pair(scheme.values, _unit(scheme, q))
    return float(np.sum(np.abs(moved ** 2 - b ** 2)) / bn ** 2)


def boundary_ratio(gamma_set):
    """``|boundary(Gamma)| / |Gamma|`` with the l-infinity neighbourhood."""
    if isinstance(gamma_set, WeightScheme):
        occ = gamma_set.values != 0
    else:
        pts = np.atleast_2d(np.asarray(gamma_set, dtype=np.int64))
        if pts.size == 0:
            raise ConfigurationError("boundary of an empty set is undefined")
        occ = IndexSetWeights(pts).values != 0
    size = int(occ.sum())
    if size == 0:
        raise ConfigurationError("boundary of an empty set is undefined")
    occ = np.pad(occ, 1)
    interior = ndimage.binary_erosion(occ, structure=np.ones((3,) * occ.ndim), border_value=0)
    return float((occ & ~interior).sum() / size)


@dataclass(frozen=True)
class HurstProfile:
    s: np.ndarray
    ratio: np.ndarray
    two_h: float

    @property
    def hurst(self):
        return self.two_h / 2


DEFAULT_S_GRID = tuple(np.arange(1, 8) / 8)


def hurst_scaling_profile(kernels, q, n, s_grid=DEFAULT_S_GRID):
    """Profile ``b^2_{floor(ns)}(q) / b^2_n(q)`` and a log-log fit of ``2 H_q``.

    The slope comes from ordinary least squares of ``log ratio`` on
    ``log s`` (with intercept).
    """
    kern = dict(kernels[q]) if isinstance(kernels, (list, tuple)) else dict(kernels)
    kern = {int(k): float(v) for k, v in kern.items()}
    s = np.asarray(s_grid, dtype=np.float64)

    def b2(m):
        return float(np.sum(_axis_weights(kern, m)[1] ** 2))

    ref = b2(n)
    if ref == 0.0:
        raise DegenerateSchemeError("axis weights vanish at scale n")
    ratio = np.array([b2(int(np.floor(n * x + _SNAP))) for x in s]) / ref
    slope = np.polyfit(np.log(s), np.log(ratio), 1)[0]
    return HurstProfile(s, ratio, float(slope))
