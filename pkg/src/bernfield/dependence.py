"""Hannan and Wu dependence coefficients, covariance sums and ``sigma^2``.

Kernel fields get closed forms.  Any other model is handled by Monte Carlo
through its ``offsets``/``local`` pair: ``P_0 X_i`` is expanded as the
alternating sum over ``delta in {0, 1}^d`` of ``E(X_i | F_{-delta})`` and
every conditional expectation is a nested average in which innovations
outside the conditioning quadrant are redrawn.  All draws come from the
site-keyed generator on dedicated streams, so estimates depend only on the
seed.
"""

import json
from dataclasses import asdict, dataclass, field
from itertools import product

import numpy as np
from scipy import signal

from bernfield import backend
from bernfield.errors import ConfigurationError, UnsupportedOperationError
from bernfield.fields import KernelFieldModel, ZeroFieldModel
from bernfield.innovations import replication_seed

__all__ = [
    "Estimate", "DeltaEstimate", "DependenceReport", "delta_p_analytic", "delta_p_monte_carlo",
    "projection_norm_analytic", "sigma2", "wu_coefficient", "cov_sum_abs", "dependence_report",
]

_OUTER_STREAM = 2 << 20
_INNER_STREAM = 3 << 20
_COV_STREAM = 4 << 20
_WU_STREAM = 5 << 20
_BOOT_STREAM = 6 << 20
TAIL_FRACTION = 0.10


@dataclass(frozen=True)
class Estimate:
    """A value with its Monte Carlo standard error (0 for closed forms)."""

    value: float
    stderr: float = 0.0
    method: str = "analytic"

    def __float__(self):
        return float(self.value)

    def __iter__(self):
        yield self.value
        yield self.stderr


@dataclass(frozen=True)
class DeltaEstimate(Estimate):
    """Monte Carlo ``Delta_p`` with per-site terms and a tail diagnostic."""

    terms: dict = field(default_factory=dict)
    tail_fraction: float = 0.0
    tail_warning: bool = False


@dataclass
class DependenceReport:
    delta_p: dict
    wu_p: dict
    cov_sum_abs: float
    sigma2: float
    method: str
    error_bars: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    def covariance_bound_holds(self, n_se=3.0):
        """``sum_j |Cov(X_0, X_j)| <= Delta_2^2`` up to ``n_se`` standard errors."""
        if 2 not in self.delta_p:
            raise ConfigurationError("report has no Delta_2 entry")
        d2 = self.delta_p[2]
        slack = 1e-12 * max(1.0, d2 * d2)
        if self.method == "monte_carlo":
            se_cov = self.error_bars.get("cov_sum_abs", 0.0)
            se_d = self.error_bars.get("delta_p", {}).get(2, 0.0)
            slack += n_se * float(np.hypot(se_cov, 2 * d2 * se_d))
        return self.cov_sum_abs <= d2 * d2 + slack

    def to_dict(self):
        out = asdict(self)
        out["delta_p"] = {str(k): v for k, v in self.delta_p.items()}
        out["wu_p"] = {str(k): v for k, v in self.wu_p.items()}
        bars = dict(self.error_bars)
        for key in ("delta_p", "wu_p"):
            if key in bars:
                bars[key] = {str(k): v for k, v in bars[key].items()}
        out["error_bars"] = bars
        return out

    def to_json(self, **kwargs):
        return json.dumps(self.to_dict(), sort_keys=True, **kwargs)


def _require_kernel(model, what):
    if not isinstance(model, (KernelFieldModel, ZeroFieldModel)):
        raise UnsupportedOperationError(f"{what} has a closed form only for kernel fields")


def projection_norm_analytic(model, i, p):
    """``||P_0 X_i||_p = |a_i| m_p^(1/p)`` for a kernel field."""
    _require_kernel(model, "the projection norm")
    a = model.kernel.get(tuple(int(c) for c in np.atleast_1d(i)), 0.0)
    return abs(a) * model.innovation.spec.abs_moment(p) ** (1.0 / p)


def delta_p_analytic(model, p):
    """``Delta_p = m_p^(1/p) sum_i |a_i|`` for a kernel field."""
    _require_kernel(model, "Delta_p")
    mp = model.innovation.spec.abs_moment(p)
    return float(mp ** (1.0 / p) * np.abs(model.coefs).sum())


def _draws(model, seed, stream, shape):
    spec = model.innovation.spec
    lower = [0] * len(shape)
    return backend.box_draw([seed], stream, lower, shape, spec.code, spec.params)[0]


def _window(d, radius):
    r = np.arange(-radius, radius + 1)
    return np.array(list(product(r, repeat=d)), dtype=np.int64).reshape(-1, d)


def _elementary_symmetric(x, p):
    """``e_p`` of the last axis, vectorised over the leading axes."""
    e = [np.ones(x.shape[:-1])] + [np.zeros(x.shape[:-1]) for _ in range(p)]
    for j in range(x.shape[-1]):
        v = x[..., j]
        for k in range(p, 0, -1):
            e[k] = e[k] + v * e[k - 1]
    return e[p]


def _power_moment(diff, p):
    """Per-outer-sample estimate of ``(P_0 X_i)^p`` (or its absolute value).

    For even p the product of p distinct inner samples is unbiased; with
    fewer inner samples than p (or odd p) the inner mean is plugged in.
    """
    n_inner = diff.shape[-1]
    if p % 2 == 0 and n_inner >= p:
        count = np.prod([(n_inner - r) / (r + 1) for r in range(p)])
        return _elementary_symmetric(diff, p) / count
    return np.abs(diff.mean(axis=-1)) ** p


def delta_p_monte_carlo(model, p, window_radius=None, n_outer=2000, n_inner=8, seed=0,
                        n_boot=200):
    """Nested Monte Carlo estimate of ``Delta_p = sum_i ||P_0 X_i||_p``.

    Parameters
    ----------
    model : FieldModel
        Any model exposing ``offsets`` and ``local``.
    p : int
        Moment order.
    window_radius : int, optional
        Sites ``|i|_inf <= window_radius`` are summed; defaults to the model
        radius, beyond which every term vanishes.
    n_outer, n_inner : int
        Outer draws of the conditioning innovations and inner redraws of
        the complement per outer draw.  Inner redraws are shared by all
        ``2^d`` conditional expectations of one outer draw.
    seed : int
        Seed of the estimator streams (independent of the model's seed).
    n_boot : int
        Bootstrap resamples of the outer draws for the standard error.

    Returns
    -------
    DeltaEstimate
        Unpacks as ``(value, stderr)``; ``terms`` maps each site to its
        estimated ``||P_0 X_i||_p`` and ``tail_warning`` flags a last shell
        carrying more than 10% of the total.
    """
    if n_inner < 2:
        raise ConfigurationError("n_inner must be at least 2 for nested conditional expectations")
    if n_outer < 2:
        raise ConfigurationError("n_outer must be at least 2")
    if p < 1:
        raise ConfigurationError("p must be a positive integer")
    d = model.dim
    radius = model.radius if window_radius is None else int(window_radius)
    offsets = model.offsets
    K = len(offsets)
    sites = _window(d, radius)
    deltas = np.array(list(product((0, 1), repeat=d)), dtype=np.int64)
    per_site = np.zeros((len(sites), n_outer))
    for idx, i in enumerate(sites):
        if K == 0:
            continue
        src = i - offsets
        if not np.any(np.all(src <= 0, axis=1)):
            # every conditional expectation equals E X_i, so P_0 X_i = 0
            continue
        outer = _draws(model, seed, _OUTER_STREAM + idx, (n_outer, K))
        inner = _draws(model, seed, _INNER_STREAM + idx, (n_outer, n_inner, K))
        diff = np.zeros((n_outer, n_inner))
        for delta in deltas:
            keep = np.all(src <= -delta, axis=1)
            eps = np.where(keep, outer[:, np.newaxis, :], inner)
            diff += (-1) ** int(delta.sum()) * model.local(eps)
        per_site[idx] = _power_moment(diff, p)

    def total(rows):
        means = np.clip(per_site[:, rows].mean(axis=1), 0.0, None)
        return means ** (1.0 / p)

    terms = total(slice(None))
    value = float(terms.sum())
    rng = np.random.default_rng(int(backend.splitmix64(np.array([seed ^ _BOOT_STREAM],
                                                                 dtype=np.uint64))[0]))
    boot = [total(rng.integers(0, n_outer, n_outer)).sum() for _ in range(n_boot)]
    stderr = float(np.std(boot, ddof=1)) if n_boot > 1 else 0.0
    shell = np.abs(sites).max(axis=1) == radius
    tail = float(terms[shell].sum() / value) if value > 0 else 0.0
    return DeltaEstimate(
        value, stderr, "monte_carlo",
        terms={tuple(int(c) for c in s): float(t) for s, t in zip(sites, terms) if t != 0.0},
        tail_fraction=tail, tail_warning=radius > 0 and tail > TAIL_FRACTION)


def sigma2(model, window_radius=None, n_samples=20000, seed=0):
    """``sigma^2 = sum_j Cov(X_0, X_j)``.

    Exact ``m_2 (sum_k a_k)^2`` for kernel fields; otherwise the sample mean
    of ``X_0 sum_{|j|_inf <= R} X_j`` with ``R`` defaulting to twice the
    model radius (the covariance support of a local model).
    """
    if isinstance(model, ZeroFieldModel):
        return Estimate(0.0)
    if isinstance(model, KernelFieldModel):
        return Estimate(float(model.m2 * model.coefs.sum() ** 2))
    prod = _window_products(model, window_radius, n_samples, seed).sum(axis=1)
    return Estimate(float(prod.mean()), float(prod.std(ddof=1) / np.sqrt(prod.size)), "monte_carlo")


def _window_products(model, window_radius, n_samples, seed):
    """Samples of ``X_0 X_j`` over the window, shape (n_samples, window size)."""
    radius = 2 * model.radius if window_radius is None else int(window_radius)
    d = model.dim
    shape = (2 * radius + 1,) * d
    seeds = replication_seed(seed ^ _COV_STREAM, np.arange(n_samples))
    x = model.evaluate_box([-radius] * d, shape, seeds=seeds).reshape(n_samples, -1)
    centre = x[:, x.shape[1] // 2]
    return centre[:, np.newaxis] * x


def cov_sum_abs(model, window_radius=None, n_samples=20000, seed=0):
    """``sum_j |Cov(X_0, X_j)|``; exact kernel autocorrelation for kernel fields."""
    if isinstance(model, ZeroFieldModel):
        return Estimate(0.0)
    if isinstance(model, KernelFieldModel):
        _, dense = model.dense_kernel()
        acf = signal.correlate(dense, dense, mode="full", method="direct")
        return Estimate(float(model.m2 * np.abs(acf).sum()))
    prod = _window_products(model, window_radius, n_samples, seed)
    cov = prod.mean(axis=0)
    se = prod.std(axis=0, ddof=1) / np.sqrt(prod.shape[0])
    return Estimate(float(np.abs(cov).sum()), float(np.sqrt(np.sum(se ** 2))), "monte_carlo")


def wu_coefficient(model, p, window_radius=None, n_samples=20000, seed=0):
    """``sum_j ||X_j - X_j*||_p`` under the star coupling at the origin.

    Exact ``||eps_0 - eps_0*||_p sum_j |a_j|`` for kernel fields.  Otherwise
    each ``j`` whose window contains the origin (``j`` in ``offsets``) is
    estimated from ``n_samples`` coupled draws; other sites contribute 0.
    """
    spec = model.innovation.spec
    if isinstance(model, (KernelFieldModel, ZeroFieldModel)):
        return Estimate(float(spec.coupling_abs_moment(p) ** (1.0 / p) * np.abs(model.coefs).sum()))
    offsets = model.offsets
    K = len(offsets)
    radius = model.radius if window_radius is None else int(window_radius)
    total, var = 0.0, 0.0
    for idx, j in enumerate(offsets):
        if np.abs(j).max() > radius:
            continue
        at_origin = np.all(offsets == j, axis=1)
        eps = _draws(model, seed, _WU_STREAM + 2 * idx, (n_samples, K))
        star = _draws(model, seed, _WU_STREAM + 2 * idx + 1, (n_samples,))
        moved = eps.copy()
        moved[:, at_origin] = star[:, np.newaxis]
        dev = np.abs(model.local(eps) - model.local(moved)) ** p
        mean = dev.mean()
        if mean <= 0:
            continue
        norm = mean ** (1.0 / p)
        se_mean = dev.std(ddof=1) / np.sqrt(n_samples)
        total += norm
        var += (se_mean / (p * mean ** ((p - 1) / p))) ** 2
    return Estimate(float(total), float(np.sqrt(var)), "monte_carlo")


def dependence_report(model, ps=(2,), method="auto", window_radius=None, n_outer=2000,
                      n_inner=8, n_samples=20000, seed=0):
    """Collect ``Delta_p``, Wu coefficients, ``sum |Cov|`` and ``sigma^2`` for a model."""
    if method not in ("auto", "analytic", "monte_carlo"):
        raise ConfigurationError(f"unknown method {method!r}")
    analytic = isinstance(model, (KernelFieldModel, ZeroFieldModel))
    if method == "analytic" and not analytic:
        raise UnsupportedOperationError("analytic dependence coefficients need a kernel field")
    if method == "auto":
        method = "analytic" if analytic else "monte_carlo"
    ps = sorted({int(p) for p in ps})
    if method == "analytic":
        return DependenceReport(
            delta_p={p: delta_p_analytic(model, p) for p in ps},
            wu_p={p: float(wu_coefficient(model, p)) for p in ps},
            cov_sum_abs=float(cov_sum_abs(model)),
            sigma2=float(sigma2(model)),
            method="analytic")
    deltas = {p: delta_p_monte_carlo(model, p, window_radius, n_outer, n_inner, seed) for p in ps}
    wus = {p: wu_coefficient(model, p, window_radius, n_samples, seed) for p in ps}
    cov = cov_sum_abs(model, None, n_samples, seed)
    sig = sigma2(model, None, n_samples, seed)
    warnings = [f"Delta_{p}: last shell carries {d.tail_fraction:.1%} of the sum"
                for p, d in deltas.items() if d.tail_warning]
    return DependenceReport(
        delta_p={p: d.value for p, d in deltas.items()},
        wu_p={p: w.value for p, w in wus.items()},
        cov_sum_abs=cov.value,
        sigma2=sig.value,
        method="monte_carlo",
        error_bars={"delta_p": {p: d.stderr for p, d in deltas.items()},
                    "wu_p": {p: w.stderr for p, w in wus.items()},
                    "cov_sum_abs": cov.stderr, "sigma2": sig.stderr},
        warnings=warnings)
