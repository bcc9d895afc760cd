"""Exact verification by enumerating every outcome of a finite innovation window.

A :class:`FiniteSpace` holds the innovations of a finite set of lattice
sites, each driven by ``bits`` fair coin flips: Rademacher innovations use
one flip, uniform ``omega`` innovations use ``bits`` flips and take the
right endpoint of their dyadic cell, which is exact for every law whose
events are dyadic intervals at that resolution.  Random variables are
arrays with one length-2 axis per flip, so conditional expectations given
any set of sites are means over the remaining axes.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from bernfield.errors import ConfigurationError, UnsupportedOperationError
from bernfield.fields import KernelFieldModel, VolterraFieldModel, ZeroFieldModel
from bernfield.innovations import InnovationField, InnovationSpec

__all__ = [
    "FiniteSpace", "Quadrant", "HalfSpace", "Block", "CheckResult", "conditional_expectation",
    "check_commuting", "check_decomposition", "check_moment_inequality",
    "check_orthogonality", "check_truncation_identity", "check_covariance_bound",
    "projection_norm_exact", "delta_p_exact", "run_suite",
]

MAX_BITS = 20
TOL = 1e-12


@dataclass(frozen=True)
class Quadrant:
    """``F_i = sigma(eps_j : j <= i)`` (componentwise)."""

    index: tuple


@dataclass(frozen=True)
class HalfSpace:
    """``F^(q)_c = sigma(eps_j : j_q <= c)``."""

    axis: int
    level: int


@dataclass(frozen=True)
class Block:
    """``G_j^(m) = sigma(eps_i : |i - j|_inf <= m)``."""

    centre: tuple
    m: int


class FiniteSpace:
    """Uniform probability on all flip assignments of a finite site window.

    Parameters
    ----------
    sites : array_like, shape (N, d)
        Window sites (distinct).
    law : {"rademacher", "uniform"}
        Innovation law realised at each site.
    bits : int
        Flips per site; must be 1 for Rademacher.
    """

    def __init__(self, sites, law="rademacher", bits=1):
        sites = np.atleast_2d(np.asarray(sites, dtype=np.int64))
        if len({tuple(s) for s in sites.tolist()}) != len(sites):
            raise ConfigurationError("window sites must be distinct")
        if law not in ("rademacher", "uniform"):
            raise UnsupportedOperationError(f"enumeration supports rademacher and uniform, not {law!r}")
        if law == "rademacher" and bits != 1:
            raise ConfigurationError("Rademacher innovations use one flip per site")
        if len(sites) * bits > MAX_BITS:
            raise ConfigurationError(
                f"window needs {len(sites) * bits} flips; at most {MAX_BITS} are enumerated")
        self.sites = sites
        self.law = law
        self.bits = bits
        self.index = {tuple(s): r for r, s in enumerate(sites.tolist())}
        self.shape = (2,) * (len(sites) * bits)
        self.lo = sites.min(axis=0)
        self.hi = sites.max(axis=0)

    @classmethod
    def box(cls, lower, shape, law="rademacher", bits=1):
        """Window of all sites in ``lower + [0, shape)``."""
        ranges = [range(a, a + n) for a, n in zip(lower, shape)]
        return cls(list(product(*ranges)), law, bits)

    @property
    def dim(self):
        return self.sites.shape[1]

    @property
    def n_outcomes(self):
        return 2 ** len(self.shape)

    def probabilities(self):
        return np.full(self.shape, 1.0 / self.n_outcomes)

    def _axes(self, r):
        return tuple(range(r * self.bits, (r + 1) * self.bits))

    def innovation(self, site):
        """The innovation at ``site`` as a random variable on the space."""
        site = tuple(int(c) for c in np.atleast_1d(site))
        if site not in self.index:
            raise ConfigurationError(f"site {site} is outside the window")
        r = self.index[site]
        local = np.indices((2,) * self.bits).reshape(self.bits, -1).T
        if self.law == "rademacher":
            vals = 2.0 * local[:, 0] - 1.0
        else:
            weights = 2.0 ** np.arange(self.bits - 1, -1, -1)
            vals = (local @ weights + 1.0) / 2.0 ** self.bits
        shape = [1] * len(self.shape)
        for ax in self._axes(r):
            shape[ax] = 2
        return np.broadcast_to(vals.reshape(shape), self.shape)

    def evaluate(self, model, j):
        """``X_j`` for a model whose window at ``j`` lies inside the space."""
        if isinstance(model, ZeroFieldModel):
            return np.zeros(self.shape)
        if model.innovation.spec.kind != self.law:
            raise ConfigurationError(
                f"model innovations are {model.innovation.spec.kind}, space is {self.law}")
        j = np.asarray(j, dtype=np.int64)
        fld = model.innovation
        stack = []
        for k in model.offsets:
            s = tuple(int(c) for c in j - k)
            if s in fld.overrides:
                stack.append(np.full(self.shape, fld.overrides[s]))
            else:
                stack.append(self.innovation(s))
        return np.asarray(model.local(np.stack(stack, axis=-1)), dtype=np.float64)

    def expectation(self, y):
        return float(np.mean(y))

    def norm(self, y, p):
        return float(np.mean(np.abs(y) ** p) ** (1.0 / p))

    def _check_index(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        if idx.shape != (self.dim,):
            raise ConfigurationError(f"selector index {tuple(idx)} has the wrong dimension")
        if np.any(idx < self.lo - 1) or np.any(idx > self.hi + 1):
            raise ConfigurationError(f"selector index {tuple(idx)} lies outside the window span")
        return idx

    def kept_sites(self, selector):
        """Boolean mask over window sites measurable for ``selector``."""
        if isinstance(selector, Quadrant):
            idx = self._check_index(selector.index)
            return np.all(self.sites <= idx, axis=1)
        if isinstance(selector, HalfSpace):
            if not 0 <= selector.axis < self.dim:
                raise ConfigurationError(f"axis {selector.axis} outside 0..{self.dim - 1}")
            if not self.lo[selector.axis] - 1 <= selector.level <= self.hi[selector.axis] + 1:
                raise ConfigurationError(f"half-space level {selector.level} lies outside the window")
            return self.sites[:, selector.axis] <= selector.level
        if isinstance(selector, Block):
            centre = self._check_index(selector.centre)
            if selector.m < 0:
                raise ConfigurationError("block radius must be nonnegative")
            return np.abs(self.sites - centre).max(axis=1) <= selector.m
        raise ConfigurationError(f"unknown selector {selector!r}")

    def condition(self, y, selector):
        keep = self.kept_sites(selector)
        axes = tuple(ax for r in np.flatnonzero(~keep) for ax in self._axes(r))
        y = np.broadcast_to(y, self.shape)
        if not axes:
            return np.array(y, dtype=np.float64)
        return np.broadcast_to(y.mean(axis=axes, keepdims=True), self.shape).copy()

    def projection(self, y, i):
        """``P_i y = sum_delta (-1)^|delta| E(y | F_{i - delta})``."""
        i = np.asarray(i, dtype=np.int64)
        out = np.zeros(self.shape)
        for delta in product((0, 1), repeat=self.dim):
            sign = (-1) ** sum(delta)
            out += sign * self.condition(y, Quadrant(tuple(i - np.array(delta))))
        return out

    def span(self):
        """Lattice points of the window's bounding box."""
        return list(product(*[range(a, b + 1) for a, b in zip(self.lo, self.hi)]))


def conditional_expectation(space, variable, selector):
    """Exact ``E(variable | selector)`` by averaging over the selector's atoms."""
    return space.condition(variable, selector)


def check_commuting(space, variable, i, k):
    """``max |E[E(Y | F_i) | F_k] - E(Y | F_{i ^ k})|`` over outcomes."""
    meet = tuple(np.minimum(i, k))
    lhs = space.condition(space.condition(variable, Quadrant(tuple(i))), Quadrant(tuple(k)))
    return float(np.abs(lhs - space.condition(variable, Quadrant(meet))).max())


def check_decomposition(space, variable):
    """``max |Y - sum_j P_j Y|`` over the bounding box of the window."""
    if abs(space.expectation(variable)) > TOL:
        raise ConfigurationError("decomposition needs a centered variable")
    total = np.zeros(space.shape)
    for j in space.span():
        total += space.projection(variable, j)
    return float(np.abs(np.broadcast_to(variable, space.shape) - total).max())


def check_orthogonality(space, y, z=None):
    """``max_{j != k} |E[(P_j Y)(P_k Z)]|`` over the bounding box."""
    z = y if z is None else z
    span = space.span()
    py = {j: space.projection(y, j) for j in span}
    pz = py if z is y else {j: space.projection(z, j) for j in span}
    worst = 0.0
    for j in span:
        for k in span:
            if j != k:
                worst = max(worst, abs(float(np.mean(py[j] * pz[k]))))
    return worst


def _model_space(model, points, extra=()):
    """Smallest space carrying ``X_j`` for every ``j`` in ``points`` plus ``extra`` sites."""
    sites = {tuple(int(c) for c in e) for e in extra}
    for j in points:
        for k in model.offsets:
            sites.add(tuple(int(c) for c in np.asarray(j) - k))
    law = model.innovation.spec.kind
    bits = 1
    if law == "uniform":
        d_seq = getattr(model, "d_seq", None)
        if d_seq is None:
            raise UnsupportedOperationError("uniform innovations need a dyadic label model")
        bits = int(round(sum(np.log2(2.0 / d) for d in d_seq)))
    return FiniteSpace(sorted(sites), law, bits)


def projection_norm_exact(model, i, p):
    """``||P_0 X_i||_p`` by enumeration on the window of ``X_i`` plus the origin."""
    origin = (0,) * model.dim
    space = _model_space(model, [i], extra=[origin])
    return space.norm(space.projection(space.evaluate(model, i), origin), p)


def delta_p_exact(model, p, window_radius=None):
    """``Delta_p`` summed over ``|i|_inf <= window_radius`` (default: model radius)."""
    radius = model.radius if window_radius is None else int(window_radius)
    pts = product(range(-radius, radius + 1), repeat=model.dim)
    return float(sum(projection_norm_exact(model, i, p) for i in pts))


def check_moment_inequality(space, model, weights, p, delta_p=None):
    """Both sides of ``||sum a_i X_i||_p <= (p - 1)^(d/2) ||a||_2 Delta_p(X)``.

    ``weights`` maps sites to coefficients; every ``X_i`` must be carried by
    the space.  Returns ``(lhs, rhs)``.
    """
    if p not in (2, 4, 6):
        raise ConfigurationError("moment inequality is checked for p in {2, 4, 6}")
    total = np.zeros(space.shape)
    sq = 0.0
    for site, a in dict(weights).items():
        total += a * space.evaluate(model, site)
        sq += a * a
    lhs = space.norm(total, p)
    dp = delta_p_exact(model, p) if delta_p is None else delta_p
    rhs = (p - 1) ** (model.dim / 2) * np.sqrt(sq) * dp
    return lhs, float(rhs)


def check_truncation_identity(model, j, m):
    """``max |P_0 X_j^(m) - E(P_0 X_j | G_j^(m))|`` over outcomes."""
    origin = (0,) * model.dim
    space = _model_space(model, [j], extra=[origin])
    lhs = space.projection(space.evaluate(model.m_truncate(m), j), origin)
    p0 = space.projection(space.evaluate(model, j), origin)
    rhs = space.condition(p0, Block(tuple(int(c) for c in np.atleast_1d(j)), m))
    return float(np.abs(lhs - rhs).max())


def check_covariance_bound(model, window_radius=None):
    """``(sum_j |Cov(X_0, X_j)|, Delta_2^2)`` computed exactly."""
    radius = 2 * model.radius if window_radius is None else int(window_radius)
    origin = (0,) * model.dim
    cov = 0.0
    for j in product(range(-radius, radius + 1), repeat=model.dim):
        space = _model_space(model, [origin, j])
        x0 = space.evaluate(model, origin)
        xj = space.evaluate(model, j)
        cov += abs(float(np.mean(x0 * xj) - np.mean(x0) * np.mean(xj)))
    return cov, delta_p_exact(model, 2) ** 2


@dataclass(frozen=True)
class CheckResult:
    name: str
    value: float
    bound: float
    passed: bool

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: {self.value:.3e} (bound {self.bound:.3e})"


def _suite_models():
    rad1 = InnovationField(InnovationSpec.rademacher(), 0, dim=1)
    rad2 = InnovationField(InnovationSpec.rademacher(), 0, dim=2)
    return [
        ("iid_d1", KernelFieldModel({0: 1.0}, rad1)),
        ("kernel_d1", KernelFieldModel({0: 1.0, 1: -0.5, 2: 0.25}, rad1)),
        ("volterra_d1", VolterraFieldModel({0: 1.0}, [(0, 1, 0.5)], rad1)),
        ("iid_d2", KernelFieldModel({(0, 0): 1.0}, rad2)),
        ("kernel_d2", KernelFieldModel({(0, 0): 1.0, (1, 0): 0.5, (0, 1): -0.5, (1, 1): 0.25}, rad2)),
        ("volterra_d2", VolterraFieldModel({(0, 0): 1.0}, [((0, 0), (1, 1), 0.5)], rad2)),
    ]


def run_suite(seed=0, n_weights=100, moment_orders=(2, 4)):
    """Run the identity suite on a 6-site line and a 3x3 square.

    Returns a list of :class:`CheckResult`; every identity is checked to
    ``1e-12`` and the moment inequality for each random weight vector.
    """
    rng = np.random.default_rng(seed)
    line = FiniteSpace.box((0,), (6,))
    square = FiniteSpace.box((0, 0), (3, 3))
    results = []

    def record(name, value, bound=TOL):
        results.append(CheckResult(name, float(value), float(bound), bool(value <= bound)))

    for label, space in (("d1", line), ("d2", square)):
        eps = [space.innovation(s) for s in space.sites]
        variables = {
            "single": eps[0] if space.dim == 1 else space.innovation((1, 1)),
            "product_all": np.prod(eps, axis=0),
            "pair_sum": eps[1] * eps[2] + eps[-1],
            "volterra_mix": eps[0] + 0.5 * eps[-1] * eps[len(eps) // 2],
        }
        worst_c = worst_d = worst_o = 0.0
        span = space.span()
        for y in variables.values():
            for i in span:
                for k in span:
                    worst_c = max(worst_c, check_commuting(space, y, i, k))
            worst_d = max(worst_d, check_decomposition(space, y))
            worst_o = max(worst_o, check_orthogonality(space, y, variables["pair_sum"]))
        record(f"commuting_{label}", worst_c)
        record(f"decomposition_{label}", worst_d)
        record(f"orthogonality_{label}", worst_o)

    for name, model in _suite_models():
        worst = 0.0
        pts = list(product(range(-1, 2), repeat=model.dim))
        for j in pts:
            for m in range(0, model.radius + 1):
                worst = max(worst, check_truncation_identity(model, j, m))
        record(f"truncation_{name}", worst)
        cov, bound = check_covariance_bound(model)
        record(f"covariance_bound_{name}", cov, bound + TOL)

    for name, model in _suite_models():
        space = line if model.dim == 1 else square
        carried = [tuple(int(c) for c in s) for s in space.sites
                   if all(tuple(int(c) for c in s - k) in space.index for k in model.offsets)]
        for p in moment_orders:
            dp = delta_p_exact(model, p)
            worst = 0.0
            for _ in range(n_weights):
                a = rng.standard_normal(len(carried))
                lhs, rhs = check_moment_inequality(space, model, dict(zip(carried, a)), p, dp)
                worst = max(worst, lhs / rhs)
            # largest lhs / rhs over the weight vectors
            record(f"moment_p{p}_{name}", worst, 1.0 + TOL)
    return results
