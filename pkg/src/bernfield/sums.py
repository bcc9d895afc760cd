"""Weighted partial sums ``S_n = sum_j b_{n,j} X_j`` and their exact variances."""

from dataclasses import dataclass, field

import numpy as np

from bernfield import backend
from bernfield.errors import ConfigurationError, UnsupportedOperationError
from bernfield.fields import Example1Model, KernelFieldModel, ZeroFieldModel, example1_labels
from bernfield.innovations import BASE_STREAM
from bernfield.weights import RectangleWeights

__all__ = [
    "SumSample", "effective_weights", "sample_sum", "sample_sums", "exact_variance",
    "example1_exact_variance", "example1_sums",
]

# target number of doubles materialised per chunk on the direct path
_CHUNK = 1 << 22
METHODS = ("auto", "effective", "direct")


@dataclass(frozen=True)
class SumSample:
    value: float
    scheme: dict
    model: str
    seed: int
    m: int = None
    extra: dict = field(default_factory=dict)


def _correlate(model, scheme):
    """``w_u = sum_k a_k b_{u+k}`` by shifting the dense weights once per kernel entry."""
    b = scheme.values
    kmin = model.offsets.min(axis=0)
    kmax = model.offsets.max(axis=0)
    out = np.zeros(tuple(np.array(b.shape) + kmax - kmin))
    for k, a in zip(model.offsets, model.coefs):
        start = kmax - k
        out[tuple(slice(s, s + n) for s, n in zip(start, b.shape))] += a * b
    return scheme.lower - kmax, out


def _rectangle_prefix(model, scheme):
    """Effective weights for a box indicator from a summed-area table of the kernel.

    With ``b`` the indicator of ``[1, N]``, ``w_u`` is the kernel mass on
    ``[1 - u, N - u]``, read off the table with 2^d corner lookups.
    """
    lo_k, dense = model.dense_kernel()
    d = dense.ndim
    sat = dense
    for q in range(d):
        sat = np.cumsum(sat, axis=q)
    sat = np.pad(sat, [(1, 0)] * d)
    counts = np.array(scheme.values.shape)
    hi_k = lo_k + np.array(dense.shape) - 1
    axes_lo, axes_hi = [], []
    for q in range(d):
        u = np.arange(1 - hi_k[q], counts[q] - lo_k[q] + 1)
        a = np.maximum(1 - u, lo_k[q]) - lo_k[q]
        b = np.minimum(counts[q] - u, hi_k[q]) - lo_k[q] + 1
        b = np.maximum(a, b)
        axes_lo.append(a)
        axes_hi.append(b)
    out = 0.0
    for corner in np.ndindex(*(2,) * d):
        idx = [axes_hi[q] if c else axes_lo[q] for q, c in enumerate(corner)]
        sign = (-1) ** (d - sum(corner))
        out = out + sign * sat[np.ix_(*idx)]
    return 1 - hi_k, np.asarray(out, dtype=np.float64)


def effective_weights(model, scheme, method="auto"):
    """Weights ``w`` with ``S_n = sum_u w_u eps_u`` for a kernel field.

    Rectangles use prefix sums of the kernel unless ``method="correlate"``.
    """
    if not isinstance(model, KernelFieldModel):
        raise UnsupportedOperationError("effective innovation weights need a kernel field")
    if scheme.dim != model.dim:
        raise ConfigurationError("scheme and model dimensions differ")
    if scheme.values.size == 0:
        return scheme.lower, np.zeros((0,) * model.dim)
    if isinstance(scheme, RectangleWeights) and method == "auto":
        return _rectangle_prefix(model, scheme)
    return _correlate(model, scheme)


def _override_correction(model, lower, w, seeds):
    fld = model.innovation
    corr = np.zeros(len(seeds))
    for site, v in fld.overrides.items():
        idx = np.array(site) - lower
        if np.any(idx < 0) or np.any(idx >= w.shape):
            continue
        coef = w[tuple(idx)]
        coords = np.array([site], dtype=np.int64)
        for r, s in enumerate(seeds):
            drawn = backend.draw_sites(int(s), BASE_STREAM, coords, fld.spec.code, fld.spec.params)[0]
            corr[r] += coef * (v - drawn)
    return corr


def sample_sums(model, scheme, seeds, m=None, method="auto"):
    """``S_n`` (or ``S_n^(m)``) for each innovation seed in ``seeds``.

    ``method="auto"`` sums effective innovation weights for kernel fields
    (prefix sums for rectangles) and evaluates ``X_j`` directly otherwise;
    ``"direct"`` forces site-by-site evaluation for cross-validation.
    """
    if method not in METHODS:
        raise ConfigurationError(f"unknown summation method {method!r}; expected one of {METHODS}")
    if scheme.dim != model.dim:
        raise ConfigurationError("scheme and model dimensions differ")
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    if m is not None:
        model = model.m_truncate(m)
    b = scheme.values
    if isinstance(model, ZeroFieldModel) or b.size == 0 or not np.any(b):
        return np.zeros(seeds.size)
    if isinstance(model, KernelFieldModel) and method != "direct":
        lower, w = effective_weights(model, scheme)
        spec = model.innovation.spec
        out = backend.box_weighted_sums(seeds, BASE_STREAM, lower, w, spec.code, spec.params)
        if model.innovation.overrides:
            out = out + _override_correction(model, lower, w, seeds)
        return out
    per_seed = b.size * max(1, len(model.offsets))
    step = max(1, _CHUNK // per_seed)
    out = np.empty(seeds.size)
    flat = b.ravel()
    for start in range(0, seeds.size, step):
        chunk = seeds[start:start + step]
        x = model.evaluate_box(scheme.lower, b.shape, seeds=chunk)
        out[start:start + step] = x.reshape(chunk.size, -1) @ flat
    return out


def sample_sum(model, scheme, seed, m=None, method="auto"):
    """Single ``S_n`` with the model's innovations reseeded to ``seed``."""
    return float(sample_sums(model, scheme, [seed], m=m, method=method)[0])


def exact_variance(model, scheme):
    """``Var(S_n) = m_2 sum_u w_u^2`` for kernel fields."""
    if isinstance(model, ZeroFieldModel):
        return 0.0
    if not isinstance(model, KernelFieldModel):
        raise UnsupportedOperationError(
            f"exact variance needs a kernel field, got {type(model).__name__}")
    if scheme.values.size == 0:
        return 0.0
    _, w = effective_weights(model, scheme)
    return float(model.m2 * np.sum(w * w))


def exact_covariance(model, scheme_a, scheme_b):
    """``Cov(S_n(a), S_n(b))`` for a kernel field, from effective weights."""
    if not isinstance(model, KernelFieldModel):
        raise UnsupportedOperationError("exact covariance needs a kernel field")
    if scheme_a.values.size == 0 or scheme_b.values.size == 0:
        return 0.0
    la, wa = _correlate(model, scheme_a)
    lb, wb = _correlate(model, scheme_b)
    lo = np.maximum(la, lb)
    hi = np.minimum(la + np.array(wa.shape), lb + np.array(wb.shape))
    if np.any(hi <= lo):
        return 0.0
    sa = tuple(slice(int(a), int(b)) for a, b in zip(lo - la, hi - la))
    sb = tuple(slice(int(a), int(b)) for a, b in zip(lo - lb, hi - lb))
    return float(model.m2 * np.sum(wa[sa] * wb[sb]))


def example1_exact_variance(model, n):
    """``Var(S_n) = sum_l 2 min(n, n_l) alpha_l^2`` over the model's layers."""
    if n < 1:
        raise ConfigurationError("n must be at least 1")
    return float(sum(2 * min(n, nl) * a * a for a, nl in zip(model.alpha, model.n_seq)))


def example1_sums(model, n, seeds, layers=None):
    """Per-layer sums ``S_n(W^(k)) = sum_{i<n} W_i^(k)``, shape (len(seeds), len(layers)).

    ``S_n(W^(k))`` telescopes to ``alpha_k (sum_{0<=i<n} zeta_i -
    sum_{-n_k<=i<n-n_k} zeta_i)``; omega is drawn once per seed on
    ``[-max n_k, n)``.
    """
    if not isinstance(model, Example1Model):
        raise ConfigurationError("example1_sums needs an Example1Model")
    layers = list(range(1, model.k_max + 1)) if layers is None else [int(k) for k in layers]
    if any(not 1 <= k <= model.k_max for k in layers):
        raise ConfigurationError(f"layers must lie in 1..{model.k_max}")
    top = max(layers)
    d_seq = model.d_seq[:top]
    reach = max(model.n_seq[k - 1] for k in layers)
    length = n + reach
    seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
    spec = model.innovation.spec
    out = np.empty((seeds.size, len(layers)))
    step = max(1, _CHUNK // (length * max(1, top // 2 + 1)))
    for start in range(0, seeds.size, step):
        chunk = seeds[start:start + step]
        omega = backend.box_draw(chunk, BASE_STREAM, [-reach], (length,), spec.code, spec.params)
        labels = example1_labels(omega, d_seq)
        csum = np.concatenate([np.zeros((chunk.size, 1, top)),
                               np.cumsum(labels, axis=1, dtype=np.float64)], axis=1)
        # site i sits at column i + reach; csum[:, c] sums columns < c
        for col, k in enumerate(layers):
            nk = model.n_seq[k - 1]
            head = csum[:, reach + n, k - 1] - csum[:, reach, k - 1]
            tail = csum[:, reach - nk + n, k - 1] - csum[:, reach - nk, k - 1]
            out[start:start + step, col] = model.alpha[k - 1] * model.scale[k - 1] * (head - tail)
    return out
