"""Bernoulli field models ``X_j = f(eps_{j - k} : k in offsets)``.

Every model is local: ``X_j`` depends on the innovations at ``j - k`` for
the finitely many ``k`` in ``model.offsets`` through a vectorised function
``model.local(eps)`` whose last axis is indexed like ``offsets``.  The
dependence estimators and the exact oracle only ever use this pair, so
they apply to every model family alike.
"""

from dataclasses import dataclass, replace
from math import log2, sqrt

import numpy as np

from bernfield import backend
from bernfield.errors import ConfigurationError, DomainError, UnsupportedOperationError
from bernfield.innovations import BASE_STREAM, InnovationField, InnovationSpec, star_copy

__all__ = [
    "KernelFieldModel", "VolterraFieldModel", "DifferenceFieldModel", "Example1Model",
    "example1_labels", "m_truncate", "star_evaluate", "star_model",
]


def _as_site(k, dim=None):
    t = tuple(int(c) for c in np.atleast_1d(k))
    if dim is not None and len(t) != dim:
        raise ConfigurationError(f"offset {t} has dimension {len(t)}, expected {dim}")
    return t


def _kernel_arrays(kernel, dim):
    """Normalise a kernel mapping (or list of pairs) to sorted arrays."""
    items = kernel.items() if hasattr(kernel, "items") else kernel
    merged = {}
    for k, c in items:
        k = _as_site(k, dim)
        merged[k] = merged.get(k, 0.0) + float(c)
    merged = {k: c for k, c in merged.items() if c != 0.0}
    keys = sorted(merged)
    offsets = np.array(keys, dtype=np.int64).reshape(len(keys), dim)
    coefs = np.array([merged[k] for k in keys], dtype=np.float64)
    return offsets, coefs


class FieldModel:
    """Common evaluation machinery; subclasses set offsets and ``local``."""

    innovation: InnovationField
    offsets: np.ndarray

    @property
    def dim(self):
        return self.innovation.dim

    @property
    def radius(self):
        if self.offsets.size == 0:
            return 0
        return int(np.abs(self.offsets).max())

    def local(self, eps):
        raise NotImplementedError

    def _check_site(self, site):
        site = np.asarray(site, dtype=np.int64)
        if site.shape[-1] != self.dim:
            raise ConfigurationError(
                f"site has dimension {site.shape[-1]}, model dimension is {self.dim}")
        return site

    def evaluate(self, site):
        """``X_site`` for a single lattice point."""
        site = self._check_site(_as_site(site))
        return float(self.evaluate_many(site[np.newaxis])[0])

    def evaluate_many(self, sites):
        sites = self._check_site(sites)
        eps = self.innovation.values(sites[..., np.newaxis, :] - self.offsets)
        return self.local(eps)

    def innovation_stack(self, seeds, lower, shape):
        """Innovations ``eps_{j - k}`` for j in a box, per seed and offset.

        Returns an array of shape ``(len(seeds), *shape, len(offsets))``.
        """
        fld = self.innovation
        lower = np.asarray(lower, dtype=np.int64)
        seeds = np.atleast_1d(np.asarray(seeds, dtype=np.uint64))
        out = np.empty((seeds.size,) + tuple(shape) + (len(self.offsets),))
        for i, k in enumerate(self.offsets):
            lo = lower - k
            block = backend.box_draw(seeds, BASE_STREAM, lo, shape, fld.spec.code, fld.spec.params)
            for site, v in fld.overrides.items():
                idx = np.array(site) - lo
                if np.all(idx >= 0) and np.all(idx < np.asarray(shape)):
                    block[(slice(None),) + tuple(idx)] = v
            out[..., i] = block
        return out

    def evaluate_box(self, lower, shape, seeds=None):
        """``X_j`` for j in the box ``lower + [0, shape)``.

        With ``seeds`` the innovation seed is replaced per row and the result
        has a leading replication axis.
        """
        single = seeds is None
        if single:
            seeds = [self.innovation.seed]
        vals = self.local(self.innovation_stack(seeds, lower, shape))
        return vals[0] if single else vals

    def with_innovation(self, innovation):
        return replace(self, innovation=innovation)

    def with_seed(self, seed):
        return self.with_innovation(self.innovation.with_seed(seed))

    def m_truncate(self, m):
        raise UnsupportedOperationError(
            f"{type(self).__name__} has no closed-form m-dependent truncation")


def _check_centered(innovation):
    if not innovation.spec.is_centered:
        raise ConfigurationError(
            f"innovation law {innovation.spec.kind!r} is not centered; "
            "field models need mean-zero innovations")


@dataclass(frozen=True, eq=False)
class KernelFieldModel(FieldModel):
    """Linear field ``X_j = sum_k a_k eps_{j-k}`` with finite kernel support."""

    kernel: object
    innovation: InnovationField

    def __post_init__(self):
        offsets, coefs = _kernel_arrays(self.kernel, self.innovation.dim)
        if coefs.size == 0 or not np.any(coefs != 0):
            raise ConfigurationError("kernel must have at least one nonzero coefficient")
        _check_centered(self.innovation)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "coefs", coefs)
        object.__setattr__(self, "kernel", {tuple(k): c for k, c in zip(offsets.tolist(), coefs)})

    def local(self, eps):
        return eps @ self.coefs

    @property
    def m2(self):
        return self.innovation.spec.abs_moment(2)

    def m_truncate(self, m):
        """``E(X_j | eps_i, |i - j|_inf <= m)``: drop kernel entries beyond ``m``."""
        if m < 0:
            raise DomainError("truncation level m must be nonnegative")
        keep = np.abs(self.offsets).max(axis=1) <= m
        if keep.all():
            return self
        kernel = {tuple(k): c for k, c in zip(self.offsets[keep].tolist(), self.coefs[keep])}
        if not kernel:
            return ZeroFieldModel(self.innovation)
        return KernelFieldModel(kernel, self.innovation)

    def dense_kernel(self):
        """Kernel on its bounding box: ``(lower corner, dense array)``."""
        lo = self.offsets.min(axis=0)
        shape = self.offsets.max(axis=0) - lo + 1
        dense = np.zeros(tuple(shape))
        dense[tuple((self.offsets - lo).T)] = self.coefs
        return lo, dense


@dataclass(frozen=True, eq=False)
class ZeroFieldModel(FieldModel):
    """The identically zero field, the m-truncation of a kernel with no mass near 0."""

    innovation: InnovationField

    def __post_init__(self):
        object.__setattr__(self, "offsets", np.zeros((0, self.innovation.dim), dtype=np.int64))
        object.__setattr__(self, "coefs", np.zeros(0))
        object.__setattr__(self, "kernel", {})

    def local(self, eps):
        return np.zeros(eps.shape[:-1])

    def m_truncate(self, m):
        return self


class DifferenceFieldModel(KernelFieldModel):
    """``X_i = eps_i - eps_{i-1}`` on Z (kernel {0: 1, 1: -1})."""

    def __init__(self, innovation):
        if innovation.dim != 1:
            raise ConfigurationError("the difference field lives on Z (d = 1)")
        super().__init__({(0,): 1.0, (1,): -1.0}, innovation)

    def with_innovation(self, innovation):
        return DifferenceFieldModel(innovation)


@dataclass(frozen=True, eq=False)
class VolterraFieldModel(FieldModel):
    """Second-order Volterra field.

    ``X_j = sum_k a_k eps_{j-k} + sum_{(k, l, c)} c eps_{j-k} eps_{j-l}``
    with ``k != l`` in every pair so each product is centered.
    """

    kernel: object
    pairs: tuple
    innovation: InnovationField

    def __post_init__(self):
        d = self.innovation.dim
        lin_off, lin_coef = _kernel_arrays(self.kernel or {}, d)
        pairs = []
        for k, l, c in self.pairs:
            k, l = _as_site(k, d), _as_site(l, d)
            if k == l:
                raise ConfigurationError(
                    f"Volterra pair {k} repeats an offset; diagonal terms are not centered")
            if float(c) != 0.0:
                pairs.append((k, l, float(c)))
        if lin_coef.size == 0 and not pairs:
            raise ConfigurationError("Volterra model has no nonzero term")
        _check_centered(self.innovation)
        sites = sorted({tuple(k) for k in lin_off.tolist()}
                       | {p[0] for p in pairs} | {p[1] for p in pairs})
        index = {s: i for i, s in enumerate(sites)}
        full = np.zeros(len(sites))
        for k, c in zip(lin_off.tolist(), lin_coef):
            full[index[tuple(k)]] = c
        object.__setattr__(self, "offsets", np.array(sites, dtype=np.int64).reshape(-1, d))
        object.__setattr__(self, "linear", full)
        object.__setattr__(self, "pairs", tuple(pairs))
        object.__setattr__(self, "_pair_index",
                           [(index[k], index[l], c) for k, l, c in pairs])
        object.__setattr__(self, "kernel", {tuple(k): c for k, c in zip(lin_off.tolist(), lin_coef)})

    def local(self, eps):
        out = eps @ self.linear
        for ik, il, c in self._pair_index:
            out = out + c * eps[..., ik] * eps[..., il]
        return out

    def m_truncate(self, m):
        """Conditional expectation on the m-block: terms leaving the block vanish."""
        if m < 0:
            raise DomainError("truncation level m must be nonnegative")

        def inside(k):
            return max(abs(c) for c in k) <= m

        kernel = {k: c for k, c in self.kernel.items() if inside(k)}
        pairs = tuple(p for p in self.pairs if inside(p[0]) and inside(p[1]))
        if len(kernel) == len(self.kernel) and len(pairs) == len(self.pairs):
            return self
        if not kernel and not pairs:
            return ZeroFieldModel(self.innovation)
        return VolterraFieldModel(kernel, pairs, self.innovation)


# Uniform draws carry 53 bits; labels along any path must stay resolvable.
_OMEGA_BITS = 52


def example1_labels(omega, d_seq, K=None):
    """Labels in {+1, -1, 0} of the nested interval partition of (0, 1].

    Level k keeps a relative position ``r`` in its current interval: the
    first ``d_k / 2`` of it is labelled +1, the next ``d_k / 2`` is -1 and
    the remainder 0; ``r`` is then rescaled inside the chosen piece.
    Accepts a scalar or an array of ``omega``; the label axis is last.
    """
    d_seq = np.asarray(d_seq, dtype=np.float64)
    if K is not None:
        d_seq = d_seq[:K]
    if np.any(~(d_seq > 0.0) | (d_seq > 1.0)):
        raise DomainError("every d_k must lie in (0, 1]")
    om = np.asarray(omega, dtype=np.float64)
    if np.any(~(om > 0.0) | (om > 1.0)):
        raise DomainError("omega must lie in (0, 1]")
    return backend.example1_labels(om, d_seq)


@dataclass(frozen=True, eq=False)
class Example1Model(FieldModel):
    """Sum of layers ``alpha_k (zeta^(k)_n - zeta^(k)_{n - n_k})`` on Z.

    ``zeta^(k)_n = label_k(omega_n) / sqrt(d_k)`` for a single uniform
    ``omega_n`` per site, so all layers at a site are measurable with
    respect to that site's innovation and mutually independent.
    """

    alpha: tuple
    n_seq: tuple
    d_seq: tuple
    k_max: int
    innovation: InnovationField

    def __post_init__(self):
        alpha = tuple(float(a) for a in self.alpha[:self.k_max])
        n_seq = tuple(int(n) for n in self.n_seq[:self.k_max])
        d_seq = tuple(float(d) for d in self.d_seq[:self.k_max])
        if self.k_max < 1 or len(alpha) < self.k_max or len(n_seq) < self.k_max \
                or len(d_seq) < self.k_max:
            raise ConfigurationError("the layered construction needs alpha, n_seq and d_seq of length >= k_max >= 1")
        if any(a <= 0 for a in alpha):
            raise ConfigurationError("alpha_k must be positive")
        if any(b <= a for a, b in zip(n_seq, n_seq[1:])) or n_seq[0] < 1:
            raise ConfigurationError("n_k must be increasing positive integers")
        if any(not 0.0 < d <= 1.0 for d in d_seq):
            raise ConfigurationError("d_k must lie in (0, 1]")
        if sum(log2(2.0 / d) for d in d_seq) > _OMEGA_BITS:
            raise ConfigurationError(
                "labels for these d_k need more than 52 bits of omega; lower k_max")
        if self.innovation.dim != 1 or self.innovation.spec.kind != "uniform":
            raise ConfigurationError("the layered construction is driven by a uniform omega field on Z")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "n_seq", n_seq)
        object.__setattr__(self, "d_seq", d_seq)
        object.__setattr__(self, "offsets", np.array([[0]] + [[n] for n in n_seq], dtype=np.int64))
        object.__setattr__(self, "scale", np.array([1.0 / sqrt(d) for d in d_seq]))

    @classmethod
    def preset(cls, name, seed=0, k_max=None):
        """Parameter presets.

        ``full``: alpha_k = 2^(-k^2), n_k = 2^(3k^2) (k_max defaults to 3).
        ``small``: alpha_k = 2^(-k), n_k = 2^(k^2 + k + 1), k_max = 3, so
        n = 8, 128, 8192 and the top layer still carries most of Var(S_{n_k}).
        Both use d_k = 1 for even k and d_k = 1 / n_k for odd k.
        """
        if name == "full":
            k_max = k_max or 3
            ks = range(1, k_max + 1)
            alpha = [2.0 ** -(k * k) for k in ks]
            n_seq = [2 ** (3 * k * k) for k in ks]
        elif name == "small":
            k_max = k_max or 3
            ks = range(1, k_max + 1)
            alpha = [2.0 ** -k for k in ks]
            n_seq = [2 ** (k * k + k + 1) for k in ks]
        else:
            raise ConfigurationError(
                f"unknown layered-construction preset {name!r}; expected 'full' or 'small'")
        d_seq = [1.0 if k % 2 == 0 else 1.0 / n for k, n in zip(ks, n_seq)]
        omega = InnovationField(InnovationSpec.uniform(), seed, dim=1)
        return cls(tuple(alpha), tuple(n_seq), tuple(d_seq), k_max, omega)

    def zeta(self, omega):
        """``zeta^(k)(omega)`` for every layer, layer axis last."""
        return example1_labels(omega, self.d_seq) * self.scale

    def local(self, eps):
        z0 = self.zeta(eps[..., 0])
        out = np.zeros(eps.shape[:-1])
        for k, a in enumerate(self.alpha):
            zk = self.zeta(eps[..., k + 1])[..., k]
            out = out + a * (z0[..., k] - zk)
        return out

    def layer(self, k):
        """Single layer ``W^(k)`` (1-based) as a one-layer model sharing omega.

        Labels of layer k still run through levels 1..k of the partition.
        """
        if not 1 <= k <= self.k_max:
            raise ConfigurationError(f"layer {k} outside 1..{self.k_max}")
        return _Example1Layer(self, k, self.alpha[k - 1])


@dataclass(frozen=True, eq=False)
class _Example1Layer(FieldModel):
    parent: Example1Model
    k: int
    alpha_k: float

    def __post_init__(self):
        object.__setattr__(self, "innovation", self.parent.innovation)
        object.__setattr__(self, "offsets",
                           np.array([[0], [self.parent.n_seq[self.k - 1]]], dtype=np.int64))

    def local(self, eps):
        d = self.parent.d_seq[:self.k]
        s = self.parent.scale[self.k - 1]
        z0 = example1_labels(eps[..., 0], d)[..., -1] * s
        z1 = example1_labels(eps[..., 1], d)[..., -1] * s
        return self.alpha_k * (z0 - z1)

    def with_innovation(self, innovation):
        return _Example1Layer(self.parent.with_innovation(innovation), self.k, self.alpha_k)


def m_truncate(model, m):
    """``X^(m)_j = E(X_j | eps_i : |i - j|_inf <= m)`` for supported models."""
    return model.m_truncate(m)


def star_model(model):
    """Model rebuilt on the star copy of its innovation field."""
    return model.with_innovation(star_copy(model.innovation))


def star_evaluate(model, site):
    """``X*_site``: the field evaluated after redrawing the origin innovation."""
    return star_model(model).evaluate(site)
