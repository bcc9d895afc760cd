"""Site-keyed i.i.d. innovation fields on the integer lattice.

Every innovation is a pure function of ``(seed, stream, site)`` computed by
the counter-based hash documented in :mod:`bernfield._pycore`, so any
site can be evaluated in O(1) without materialising the lattice and two
fields built from the same seed share their innovations exactly.
"""

from dataclasses import dataclass, field, replace
from math import gamma, pi, sqrt
from types import MappingProxyType

import numpy as np

from bernfield import backend
from bernfield.errors import ConfigurationError

BASE_STREAM = 0
# star copies of generation g draw their origin value from stream STAR_STREAM + g
STAR_STREAM = 1 << 20

_MASK64 = (1 << 64) - 1


def parse_seed(text):
    """Parse a seed given as decimal or ``0x`` hexadecimal text (or int)."""
    if isinstance(text, (int, np.integer)):
        value = int(text)
    else:
        s = str(text).strip().lower()
        try:
            value = int(s, 16) if s.startswith("0x") else int(s, 10)
        except ValueError:
            raise ConfigurationError(f"seed {text!r} is not a decimal or 0x-hex integer") from None
    if not 0 <= value <= _MASK64:
        raise ConfigurationError(f"seed {value} does not fit in 64 unsigned bits")
    return value


def replication_seed(seed, index):
    """Seed of replication ``index`` under master ``seed``.

    Streams are keyed by index only, so results do not depend on how the
    replications are split across workers.
    """
    idx = np.asarray(index, dtype=np.uint64)
    base = backend.splitmix64(np.array([seed], dtype=np.uint64))[0]
    with np.errstate(over="ignore"):
        return backend.splitmix64(np.atleast_1d(idx + base))


@dataclass(frozen=True)
class InnovationSpec:
    """Law of a single innovation.

    ``kind`` is one of ``rademacher``, ``gaussian``, ``uniform`` or
    ``two_point``; the two-point law takes value ``a`` with probability
    ``p`` and ``b`` otherwise.
    """

    kind: str = "rademacher"
    p: float = 0.5
    a: float = 1.0
    b: float = -1.0

    _CODES = MappingProxyType({
        "rademacher": backend.DIST_RADEMACHER,
        "gaussian": backend.DIST_GAUSSIAN,
        "uniform": backend.DIST_UNIFORM,
        "two_point": backend.DIST_TWO_POINT,
    })

    def __post_init__(self):
        if self.kind not in self._CODES:
            raise ConfigurationError(
                f"unknown innovation law {self.kind!r}; expected one of {sorted(self._CODES)}")
        if self.kind == "two_point" and not 0.0 < self.p < 1.0:
            raise ConfigurationError("two_point probability p must lie in (0, 1)")

    @classmethod
    def rademacher(cls):
        return cls("rademacher")

    @classmethod
    def gaussian(cls):
        return cls("gaussian")

    @classmethod
    def uniform(cls):
        return cls("uniform")

    @classmethod
    def two_point(cls, p, a, b):
        return cls("two_point", float(p), float(a), float(b))

    @property
    def code(self):
        return self._CODES[self.kind]

    @property
    def params(self):
        return (self.p, self.a, self.b)

    @property
    def mean(self):
        if self.kind == "uniform":
            return 0.5
        if self.kind == "two_point":
            return self.p * self.a + (1 - self.p) * self.b
        return 0.0

    @property
    def is_centered(self):
        return abs(self.mean) < 1e-14

    @property
    def moment_orders(self):
        return (2, 3, 4, 6)

    def abs_moment(self, p):
        """Closed-form ``E|eps|^p`` for p in {2, 3, 4, 6}."""
        if p not in self.moment_orders:
            raise ConfigurationError(
                f"moment order {p} unsupported; supported orders are {self.moment_orders}")
        if self.kind == "rademacher":
            return 1.0
        if self.kind == "gaussian":
            return 2.0 ** (p / 2) * gamma((p + 1) / 2) / sqrt(pi)
        if self.kind == "uniform":
            return 1.0 / (p + 1)
        return self.p * abs(self.a) ** p + (1 - self.p) * abs(self.b) ** p

    @property
    def variance(self):
        return self.abs_moment(2) - self.mean ** 2

    def coupling_abs_moment(self, p):
        """Closed-form ``E|eps - eps*|^p`` for an independent copy ``eps*``."""
        if p not in self.moment_orders:
            raise ConfigurationError(
                f"moment order {p} unsupported; supported orders are {self.moment_orders}")
        if self.kind == "rademacher":
            return 2.0 ** p / 2
        if self.kind == "gaussian":
            return 2.0 ** (p / 2) * self.abs_moment(p)
        if self.kind == "uniform":
            # |U - U'| has density 2(1 - x) on [0, 1]
            return 2.0 / ((p + 1) * (p + 2))
        return 2 * self.p * (1 - self.p) * abs(self.a - self.b) ** p


@dataclass(frozen=True)
class InnovationField:
    """Deterministic i.i.d. field ``{eps_j}`` with optional site overrides."""

    spec: InnovationSpec
    seed: int
    dim: int = 1
    overrides: dict = field(default_factory=dict, hash=False)
    star_generation: int = 0

    def __post_init__(self):
        if self.dim < 1:
            raise ConfigurationError("lattice dimension must be at least 1")
        object.__setattr__(self, "seed", parse_seed(self.seed))
        clean = {}
        for site, value in dict(self.overrides).items():
            clean[self._site(site)] = float(value)
        object.__setattr__(self, "overrides", MappingProxyType(clean))

    def _site(self, site):
        t = tuple(int(c) for c in np.atleast_1d(site))
        if len(t) != self.dim:
            raise ConfigurationError(
                f"site {t} has dimension {len(t)}, field dimension is {self.dim}")
        return t

    @property
    def origin(self):
        return (0,) * self.dim

    def value(self, site):
        site = self._site(site)
        if site in self.overrides:
            return self.overrides[site]
        coords = np.array([site], dtype=np.int64)
        return float(backend.draw_sites(self.seed, BASE_STREAM, coords,
                                        self.spec.code, self.spec.params)[0])

    def values(self, sites):
        """Innovations at an ``(..., d)`` integer array of sites."""
        sites = np.asarray(sites, dtype=np.int64)
        if sites.shape[-1] != self.dim:
            raise ConfigurationError(
                f"sites have dimension {sites.shape[-1]}, field dimension is {self.dim}")
        flat = sites.reshape(-1, self.dim)
        out = backend.draw_sites(self.seed, BASE_STREAM, flat, self.spec.code, self.spec.params)
        if self.overrides:
            self._apply_overrides(flat, out)
        return out.reshape(sites.shape[:-1])

    def _apply_overrides(self, flat, out):
        for site, v in self.overrides.items():
            hit = np.all(flat == np.array(site), axis=1)
            out[hit] = v

    def box(self, lower, shape):
        """Innovations on the box ``lower + [0, shape)`` as a dense array."""
        lower = np.asarray(lower, dtype=np.int64)
        out = backend.box_draw([self.seed], BASE_STREAM, lower, shape,
                               self.spec.code, self.spec.params)[0]
        for site, v in self.overrides.items():
            idx = np.array(site) - lower
            if np.all(idx >= 0) and np.all(idx < np.asarray(shape)):
                out[tuple(idx)] = v
        return out

    def with_seed(self, seed):
        """Same law and overrides, different seed."""
        return replace(self, seed=seed, overrides=dict(self.overrides))

    def with_overrides(self, overrides):
        merged = dict(self.overrides)
        merged.update({self._site(k): v for k, v in overrides.items()})
        return replace(self, overrides=merged)


def star_copy(fld):
    """Field equal to ``fld`` off the origin with an independent origin draw.

    Each call redraws the origin from a fresh stream, so repeated star
    copies are mutually independent at the origin.
    """
    gen = fld.star_generation + 1
    coords = np.zeros((1, fld.dim), dtype=np.int64)
    v = float(backend.draw_sites(fld.seed, STAR_STREAM + gen, coords,
                                 fld.spec.code, fld.spec.params)[0])
    merged = dict(fld.overrides)
    merged[fld.origin] = v
    return replace(fld, overrides=merged, star_generation=gen)
