"""Replicated Monte Carlo experiments with calibrated pass/fail tests.

Replication ``i`` always uses innovation seed ``replication_seed(seed, i)``,
so a sample depends only on its index.  Workers receive contiguous index
shards and results are reassembled in index order, which makes every
statistic independent of the worker count.
"""

import hashlib
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from math import sqrt

import numpy as np
from scipy import stats
from scipy.special import gammaln

from bernfield.dependence import sigma2 as sigma2_of
from bernfield.errors import ConfigurationError, DegenerateSchemeError
from bernfield.fields import DifferenceFieldModel, Example1Model, KernelFieldModel
from bernfield.innovations import InnovationField, InnovationSpec, replication_seed
from bernfield.sums import example1_sums, exact_covariance, exact_variance, sample_sums
from bernfield.weights import (
    IndexSetWeights, ProductLinearWeights, RectangleWeights, SetIndexedWeights,
    check_negligibility, example2_blocks, example2_gamma,
)

__all__ = [
    "ExperimentConfig", "ExperimentResult", "TestOutcome", "config_hash", "replicate",
    "ks_critical_value", "run_clt", "run_counterexample1", "run_counterexample2",
    "run_fdd_covariance", "run_path_export", "lindeberg_profile", "fbs_covariance",
]

MIN_REPS = 100
MIN_REPS_EXAMPLE1 = 2000
TESTS = ("ks_normal", "variance_ratio", "covariance_match", "two_sample_ks")
NORMALIZATIONS = ("by_sigma_n", "by_b_n")
DEFAULT_TESTS = {"clt": ("ks_normal", "variance_ratio"), "fdd": ("covariance_match",)}
# offsets separating the seed families of one experiment
_ODD_SEEDS = 0x6F64640000000000
_COUNT_SEEDS = 0x636F756E74000000


def config_hash(descriptor):
    """SHA-256 of the canonical JSON form of a configuration descriptor."""
    text = json.dumps(descriptor, sort_keys=True, separators=(",", ":"), ensure_ascii=True)
    return hashlib.sha256(text.encode("ascii")).hexdigest()


@dataclass
class ExperimentConfig:
    """Everything needed to run one experiment.

    ``descriptor`` is the validated JSON form the objects were built from;
    it is what the config hash covers.
    """

    experiment: str = "clt"
    model: object = None
    scheme: object = None
    reps: int = 10000
    seed: int = 0
    normalization: str = "by_b_n"
    tests: tuple = None
    m: int = None
    method: str = "auto"
    workers: int = 1
    level: float = 0.01
    variance_tol: float = 0.05
    covariance_tol: float = 0.10
    sigma_floor: float = 1e-3
    degenerate_tol: float = 0.01
    points: tuple = ()
    reference: object = None
    target: str = "limit"
    hurst: tuple = None
    grid: tuple = ()
    options: dict = field(default_factory=dict)
    descriptor: dict = field(default_factory=dict)

    def __post_init__(self):
        if int(self.reps) < MIN_REPS:
            raise ConfigurationError(f"reps must be at least {MIN_REPS}, got {self.reps}")
        if self.normalization not in NORMALIZATIONS:
            raise ConfigurationError(
                f"normalization must be one of {NORMALIZATIONS}, got {self.normalization!r}")
        if self.tests is None:
            self.tests = DEFAULT_TESTS.get(self.experiment, ())
        unknown = set(self.tests) - set(TESTS)
        if unknown:
            raise ConfigurationError(f"unknown tests {sorted(unknown)}; expected a subset of {TESTS}")
        if int(self.workers) < 1:
            raise ConfigurationError("workers must be at least 1")
        self.tests = tuple(self.tests)

    @property
    def hash(self):
        return config_hash(self.descriptor)


@dataclass
class TestOutcome:
    """One calibrated check: ``passed`` means the expected behaviour was observed."""

    name: str
    statistic: float
    threshold: float
    passed: bool
    details: dict = field(default_factory=dict)

    def __post_init__(self):
        self.passed = bool(self.passed)

    def to_dict(self):
        return {"name": self.name, "statistic": _clean(self.statistic),
                "threshold": _clean(self.threshold), "passed": bool(self.passed),
                "details": _clean(self.details)}


@dataclass
class ExperimentResult:
    experiment: str
    seed: int
    reps: int
    config_hash: str
    statistics: dict = field(default_factory=dict)
    tests: list = field(default_factory=list)
    samples: np.ndarray = None
    columns: tuple = ("value",)
    diagnostics: dict = field(default_factory=dict)
    runtime: float = 0.0

    @property
    def passed(self):
        return all(t.passed for t in self.tests)

    def test(self, name):
        for t in self.tests:
            if t.name == name:
                return t
        raise KeyError(name)

    def to_dict(self):
        """JSON-ready summary; runtime is excluded so reruns are byte-identical."""
        return {
            "experiment": self.experiment,
            "seed": int(self.seed),
            "reps": int(self.reps),
            "config_hash": self.config_hash,
            "passed": self.passed,
            "statistics": _clean(self.statistics),
            "tests": [t.to_dict() for t in self.tests],
            "diagnostics": _clean(self.diagnostics),
        }


def _clean(obj):
    """Convert numpy scalars/arrays and tuple keys to plain JSON types."""
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, str) else k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    return obj


def replicate(fn, reps, seed, workers=1):
    """Evaluate ``fn(seeds)`` over replication seeds, sharded across threads.

    ``fn`` maps a 1-d array of seeds to an array whose first axis matches.
    """
    seeds = replication_seed(seed, np.arange(reps, dtype=np.uint64))
    if workers <= 1:
        return np.asarray(fn(seeds))
    bounds = np.linspace(0, reps, workers + 1).astype(int)
    shards = [seeds[a:b] for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(fn, shards))
    return np.concatenate([np.asarray(p) for p in parts], axis=0)


def ks_critical_value(n, level=0.01):
    """Exact one-sample KS critical value for ``n`` observations."""
    return float(stats.kstwo.ppf(1.0 - level, n))


def _ks_normal(name, z, sd, level, expect_normal=True, mean=0.0):
    res = stats.kstest(z, "norm", args=(mean, sd))
    crit = ks_critical_value(len(z), level)
    normal = res.statistic < crit
    return TestOutcome(name, float(res.statistic), crit, normal if expect_normal else not normal,
                       {"p_value": float(res.pvalue), "target_sd": float(sd),
                        "target_mean": float(mean)})


def _variance_se(x):
    """Standard error of the sample variance via the fourth central moment."""
    c = x - x.mean()
    m2 = np.mean(c * c)
    m4 = np.mean(c ** 4)
    return float(sqrt(max(m4 - m2 * m2, 0.0) / len(x)))


def _negligibility_trend(scheme):
    if not hasattr(scheme, "with_n") or scheme.n < 4:
        return {}
    ns = [max(1, scheme.n // 4), max(1, scheme.n // 2), scheme.n]
    vals = [check_negligibility(scheme.with_n(n)) for n in ns]
    return {"n": ns, "sup_ratio": vals, "decreasing": bool(np.all(np.diff(vals) < 0))}


def lindeberg_profile(model, scheme, ns=None, tau=0.05, sites=1 << 15, seed=0):
    """Empirical Lindeberg sums ``sum_j E[(b_j X_j)^2 1{|b_j X_j| > tau sigma_n}] / sigma_n^2``.

    ``X_0`` is sampled along a line of ``sites`` lattice points of one
    realisation (stationarity); ``sigma_n`` is exact for kernel fields and
    ``b_n * sd(X_0)`` otherwise.  Diagnostic only.
    """
    d = model.dim
    x = model.with_seed(seed).evaluate_box((0,) * d, (sites,) + (1,) * (d - 1)).ravel()
    x2 = x * x
    ns = ns or ([max(1, scheme.n // 4), max(1, scheme.n // 2), scheme.n]
                if hasattr(scheme, "with_n") else [None])
    out = {}
    for n in ns:
        s = scheme.with_n(n) if n is not None else scheme
        b = np.abs(s.values[s.values != 0])
        if b.size == 0:
            continue
        try:
            var = exact_variance(model, s)
        except Exception:
            var = s.norm() ** 2 * float(np.mean(x2))
        if var <= 0:
            continue
        vals, counts = np.unique(b, return_counts=True)
        total = 0.0
        for bj, c in zip(vals, counts):
            total += c * bj * bj * np.mean(x2 * (np.abs(bj * x) > tau * sqrt(var)))
        out[str(n if n is not None else "n")] = float(total / var)
    return out


def _sums(cfg, scheme, seeds, model=None):
    model = cfg.model if model is None else model
    return sample_sums(model, scheme, seeds, m=cfg.m, method=cfg.method)


def run_clt(cfg):
    """CLT experiment: ``S_n / sigma_n`` against N(0, 1) or ``S_n / b_n`` against N(0, sigma^2)."""
    t0 = time.perf_counter()
    model, scheme = cfg.model, cfg.scheme
    bn = scheme.norm()
    if bn == 0.0:
        raise DegenerateSchemeError("weight scheme has zero norm")
    raw = replicate(lambda s: _sums(cfg, scheme, s), cfg.reps, cfg.seed, cfg.workers)
    exact = True
    try:
        var_n = exact_variance(model if cfg.m is None else model.m_truncate(cfg.m), scheme)
    except Exception:
        exact = False
        var_n = float(np.var(raw, ddof=1))
    ratio = var_n / bn ** 2
    stats_out = {"b_n": bn, "sigma_n2": var_n, "sigma_n2_exact": exact,
                 "sigma_n2_over_b_n2": ratio, "empirical_mean": float(raw.mean()),
                 "empirical_var_raw": float(raw.var(ddof=1))}
    sig = sigma2_of(model if cfg.m is None else model.m_truncate(cfg.m))
    stats_out["sigma2"] = sig.value
    stats_out["sigma2_stderr"] = sig.stderr
    if sig.value > 0:
        stats_out["sigma_n_over_b_n"] = sqrt(var_n) / bn
        stats_out["sigma_n_over_b_n_rel_error"] = sqrt(var_n) / bn / sqrt(sig.value) - 1.0
    if cfg.normalization == "by_sigma_n":
        if ratio < cfg.sigma_floor:
            raise DegenerateSchemeError(
                f"sigma_n^2 / b_n^2 = {ratio:.3g} is below the floor {cfg.sigma_floor:g}; "
                "normalising by sigma_n needs liminf sigma_n^2 / b_n^2 > 0, use by_b_n")
        z = raw / sqrt(var_n)
        target_var = 1.0
    else:
        z = raw / bn
        target_var = sig.value
    stats_out["empirical_var"] = float(z.var(ddof=1))
    stats_out["empirical_var_stderr"] = _variance_se(z)
    tests = []
    degenerate = target_var <= 1e-12
    if "ks_normal" in cfg.tests and not degenerate:
        tests.append(_ks_normal("ks_normal", z, sqrt(target_var), cfg.level))
    if "variance_ratio" in cfg.tests:
        if degenerate:
            v = stats_out["empirical_var"]
            tests.append(TestOutcome("variance_ratio", v, cfg.degenerate_tol, v < cfg.degenerate_tol,
                                     {"degenerate_limit": True}))
        else:
            emp = float(raw.var(ddof=1))
            rel = emp / var_n - 1.0
            tests.append(TestOutcome("variance_ratio", abs(rel), cfg.variance_tol,
                                     abs(rel) <= cfg.variance_tol,
                                     {"empirical_var_raw": emp, "exact_sigma_n2": var_n,
                                      "relative_error": rel}))
    diagnostics = {"negligibility": _negligibility_trend(scheme)}
    if isinstance(model, KernelFieldModel) and hasattr(scheme, "with_n"):
        diagnostics["lindeberg"] = lindeberg_profile(model, scheme, seed=cfg.seed)
    return ExperimentResult("clt", cfg.seed, cfg.reps, cfg.hash, stats_out, tests,
                            z, ("z",), diagnostics, time.perf_counter() - t0)


def _example1_stat(model, k, seeds, statistic):
    n = model.n_seq[k - 1]
    norm = model.alpha[k - 1] * sqrt(n)
    if statistic == "layer":
        z = example1_sums(model, n, seeds, layers=[k])[:, 0] / norm
        if model.d_seq[k - 1] * n == 1.0:
            # labels scale by sqrt(n): z is an integer count up to rounding
            z = np.rint(z)
        return z
    return example1_sums(model, n, seeds).sum(axis=1) / norm


def skellam_count_pmf(n_sites, p, support):
    """``P(N+ - N- = v)`` for a trinomial ``(N+, N-, rest)`` over ``n_sites`` trials."""
    support = np.asarray(support)
    a = np.arange(0, 200)
    out = np.zeros(support.shape)
    lp, lq = np.log(p), np.log1p(-2 * p)
    for idx, v in enumerate(support):
        plus = a[a - v >= 0]
        minus = plus - v
        ok = plus + minus <= n_sites
        plus, minus = plus[ok], minus[ok]
        rest = n_sites - plus - minus
        logs = (gammaln(n_sites + 1) - gammaln(plus + 1) - gammaln(minus + 1) - gammaln(rest + 1)
                + (plus + minus) * lp + rest * lq)
        out[idx] = np.exp(logs).sum()
    return out


def _chi2_discrete(sample, support, probs, min_expected=5.0):
    """Chi-square goodness of fit with adjacent cells pooled to ``min_expected``."""
    n = len(sample)
    counts = np.array([(sample == v).sum() for v in support], dtype=float)
    expected = probs * n
    # outside the listed support goes to the tails
    counts[0] += (sample < support[0]).sum()
    counts[-1] += (sample > support[-1]).sum()
    expected[0] += max(0.0, n * (1 - probs.sum())) / 2
    expected[-1] += max(0.0, n * (1 - probs.sum())) / 2
    pooled_o, pooled_e, acc_o, acc_e = [], [], 0.0, 0.0
    for o, e in zip(counts, expected):
        acc_o += o
        acc_e += e
        if acc_e >= min_expected:
            pooled_o.append(acc_o)
            pooled_e.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 and pooled_e:
        pooled_o[-1] += acc_o
        pooled_e[-1] += acc_e
    pooled_o, pooled_e = np.array(pooled_o), np.array(pooled_e)
    stat = float(np.sum((pooled_o - pooled_e) ** 2 / pooled_e))
    dof = len(pooled_o) - 1
    return stat, dof, float(stats.chi2.sf(stat, dof))


def run_counterexample1(cfg):
    """Even and odd layers of the non-convergence construction.

    ``cfg.options`` may set ``even_model`` / ``odd_model`` (Example1Model
    instances), ``even_k`` (2), ``odd_k`` (3) and ``statistic``
    (``"layer"`` or ``"full"``).  With ``cfg.model`` given it is used for
    both layers.
    """
    t0 = time.perf_counter()
    if cfg.reps < MIN_REPS_EXAMPLE1:
        raise ConfigurationError(
            f"the odd-layer limit is discrete; at least {MIN_REPS_EXAMPLE1} reps are needed, "
            f"got {cfg.reps}")
    opts = dict(cfg.options)
    statistic = opts.get("statistic", "layer")
    if statistic not in ("layer", "full"):
        raise ConfigurationError("statistic must be 'layer' or 'full'")
    even_model = opts.get("even_model") or cfg.model or Example1Model.preset("full", k_max=2)
    odd_model = opts.get("odd_model") or cfg.model or Example1Model.preset("small")
    even_k, odd_k = int(opts.get("even_k", 2)), int(opts.get("odd_k", 3))
    if even_k % 2 or not odd_k % 2:
        raise ConfigurationError("even_k must be even and odd_k odd")
    for mdl, k in ((even_model, even_k), (odd_model, odd_k)):
        if not isinstance(mdl, Example1Model):
            raise ConfigurationError("counterexample 1 needs Example1Model instances")
        if k > mdl.k_max:
            raise ConfigurationError(f"layer {k} exceeds k_max = {mdl.k_max}")

    even = replicate(lambda s: _example1_stat(even_model, even_k, s, statistic),
                     cfg.reps, cfg.seed, cfg.workers)
    odd = replicate(lambda s: _example1_stat(odd_model, odd_k, s, statistic),
                    cfg.reps, cfg.seed ^ _ODD_SEEDS, cfg.workers)
    n_odd = odd_model.n_seq[odd_k - 1]
    p_odd = odd_model.d_seq[odd_k - 1] / 2
    rng = np.random.default_rng(np.uint64(replication_seed(cfg.seed ^ _COUNT_SEEDS, 0)[0]))
    counts = rng.multinomial(2 * n_odd, [p_odd, p_odd, 1 - 2 * p_odd], size=cfg.reps)
    direct = (counts[:, 0] - counts[:, 1]).astype(float)

    tests = [_ks_normal("even_ks_normal", even, sqrt(2.0), cfg.level)]
    odd_fit = _ks_normal("odd_not_normal", odd, float(odd.std(ddof=1)), cfg.level,
                         expect_normal=False, mean=float(odd.mean()))
    tests.append(odd_fit)
    two = stats.ks_2samp(odd, direct)
    tests.append(TestOutcome("odd_matches_count_law", float(two.pvalue), cfg.level,
                             two.pvalue >= cfg.level, {"ks_statistic": float(two.statistic)}))
    support = np.arange(-15, 16)
    if statistic == "layer":
        chi, dof, pval = _chi2_discrete(np.rint(odd), support,
                                        skellam_count_pmf(2 * n_odd, p_odd, support))
        tests.append(TestOutcome("odd_chi2_count_law", pval, cfg.level, pval >= cfg.level,
                                 {"chi2": chi, "dof": dof}))
    diff = stats.ks_2samp(even / sqrt(2.0), odd / sqrt(2.0))
    tests.append(TestOutcome("even_odd_differ", float(diff.pvalue), cfg.level,
                             diff.pvalue < cfg.level, {"ks_statistic": float(diff.statistic)}))
    statistics = {
        "even_k": even_k, "odd_k": odd_k, "statistic": statistic,
        "even_n": even_model.n_seq[even_k - 1], "odd_n": n_odd,
        "even_var": float(even.var(ddof=1)), "odd_var": float(odd.var(ddof=1)),
        "odd_atom_zero": float(np.mean(odd == 0)),
    }
    samples = np.column_stack([even, odd, direct])
    return ExperimentResult("counterexample1", cfg.seed, cfg.reps, cfg.hash, statistics, tests,
                            samples, ("even", "odd", "count_direct"), {},
                            time.perf_counter() - t0)


def example2_variance_recursion(n_max, m2=1.0):
    """``Var(S_{Gamma_n})`` for n = 1..n_max from the block increments."""
    out = [2.0 * m2]
    for m in range(1, n_max):
        out.append(out[-1] + (2.0 * m2 if m % 2 == 0 else 2.0 ** (m + 1) * m2))
    return np.array(out)


def run_counterexample2(cfg=None, n_max=16, mc_n=(6, 7, 8)):
    """Exact variance recursion for the alternating-density sets on Z."""
    t0 = time.perf_counter()
    reps = cfg.reps if cfg is not None else 4000
    seed = cfg.seed if cfg is not None else 0
    workers = cfg.workers if cfg is not None else 1
    opts = dict(cfg.options) if cfg is not None else {}
    n_max = int(opts.get("n_max", n_max))
    mc_n = tuple(opts.get("mc_n", mc_n))
    model = cfg.model if cfg is not None and cfg.model is not None else \
        DifferenceFieldModel(InnovationField(InnovationSpec.rademacher(), seed))
    m2 = model.m2
    recursion = example2_variance_recursion(n_max, m2)
    sizes, exact, blocks_ok = [], [], True
    block_var = {}
    for n in range(1, n_max + 1):
        g = example2_gamma(n)
        sizes.append(len(g))
        exact.append(exact_variance(model, g))
    for m, block in enumerate(example2_blocks(n_max), start=1):
        v = exact_variance(model, IndexSetWeights(block.reshape(-1, 1)))
        want = 2.0 * m2 if m % 2 == 0 else 2.0 ** (m + 1) * m2
        block_var[m] = v
        blocks_ok &= abs(v - want) <= 1e-9 * want
    sizes, exact = np.array(sizes), np.array(exact)
    ratio = exact / sizes
    tail = np.arange(1, n_max + 1) >= 8
    spread = np.maximum(ratio[1:], ratio[:-1]) / np.minimum(ratio[1:], ratio[:-1])
    spread_tail = spread[tail[:-1]]
    tests = [
        TestOutcome("block_variances", float(blocks_ok), 1.0, bool(blocks_ok), {}),
        TestOutcome("sizes_power_of_two", float(np.all(sizes == 2 ** np.arange(1, n_max + 1))), 1.0,
                    bool(np.all(sizes == 2 ** np.arange(1, n_max + 1))), {}),
        TestOutcome("recursion_matches_convolution", float(np.abs(recursion - exact).max()), 1e-9,
                    bool(np.allclose(recursion, exact, rtol=1e-12, atol=1e-9)), {}),
        TestOutcome("liminf_positive", float(ratio[tail].min()), 0.0, bool(ratio[tail].min() > 0), {}),
        TestOutcome("ratio_spread", float(spread_tail.min()), 1.5, bool(spread_tail.min() >= 1.5), {}),
    ]
    mc = {}
    worst = 0.0
    for n in mc_n:
        g = example2_gamma(n)
        x = replicate(lambda s: sample_sums(model, g, s), reps, seed + n, workers)
        v = float(x.var(ddof=1))
        se = _variance_se(x)
        z = abs(v - exact[n - 1]) / se if se > 0 else 0.0
        mc[n] = {"empirical": v, "stderr": se, "exact": float(exact[n - 1]), "z": z}
        worst = max(worst, z)
    if mc_n:
        tests.append(TestOutcome("monte_carlo_crosscheck", worst, 3.0, worst <= 3.0, {}))
    statistics = {
        "n": list(range(1, n_max + 1)), "size": sizes, "variance": exact, "ratio": ratio,
        "adjacent_spread": spread, "block_variance": block_var, "monte_carlo": mc,
    }
    samples = np.column_stack([np.arange(1, n_max + 1), sizes, exact, ratio])
    return ExperimentResult("counterexample2", seed, reps, cfg.hash if cfg else config_hash({}),
                            statistics, tests, samples, ("n", "size", "variance", "ratio"), {},
                            time.perf_counter() - t0)


def fbs_covariance(s, t, hurst):
    """``2^-d prod_q (s_q^(2H_q) + t_q^(2H_q) - |t_q - s_q|^(2H_q))``."""
    s, t, h = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (s, t, hurst))
    return float(np.prod((s ** (2 * h) + t ** (2 * h) - np.abs(t - s) ** (2 * h)) / 2))


def _limit_covariance(cfg, a, b, sig2):
    if isinstance(a, SetIndexedWeights):
        inter = a.region.intersection(b.region)
        return sig2 * (inter.measure(a.measure) if inter is not None else 0.0)
    if isinstance(a, ProductLinearWeights):
        if cfg.hurst is None:
            raise ConfigurationError("fBs covariance needs hurst exponents")
        return sig2 * fbs_covariance(a.t, b.t, cfg.hurst)
    if isinstance(a, RectangleWeights):
        return sig2 * float(np.prod(np.minimum(a.t, b.t)))
    raise ConfigurationError(f"no limit covariance for {type(a).__name__}")


def _scale(cfg, schemes):
    """Normaliser ``b_n`` of the covariance condition."""
    first = schemes[0]
    if cfg.reference is not None:
        return cfg.reference.norm()
    if isinstance(first, SetIndexedWeights):
        return sqrt(first.n ** first.measure.beta)
    if isinstance(first, (RectangleWeights, ProductLinearWeights)):
        ref = first.with_t((1.0,) * first.dim) if isinstance(first, ProductLinearWeights) \
            else RectangleWeights(first.n, (1.0,) * first.dim)
        return ref.norm()
    raise ConfigurationError("cannot infer the normaliser; give a reference scheme")


def run_fdd_covariance(cfg, points=None):
    """Empirical covariance of ``(S_n(t_r) / b_n)_r`` against the limit (or exact) kernel."""
    t0 = time.perf_counter()
    schemes = list(points if points is not None else cfg.points)
    if len(schemes) < 2:
        raise ConfigurationError("fdd covariance needs at least two evaluation points")
    for s in schemes:
        if s.norm() == 0.0:
            raise DegenerateSchemeError(f"evaluation point {s.describe()} has zero mass")
    model = cfg.model if cfg.m is None else cfg.model.m_truncate(cfg.m)
    bn = _scale(cfg, schemes)

    def batch(seeds):
        return np.column_stack([sample_sums(model, s, seeds, method=cfg.method) for s in schemes])

    x = replicate(batch, cfg.reps, cfg.seed, cfg.workers) / bn
    r = len(schemes)
    emp = np.cov(x, rowvar=False, ddof=1)
    c = x - x.mean(axis=0)
    se = np.array([[np.std(c[:, i] * c[:, j], ddof=1) / sqrt(cfg.reps) for j in range(r)]
                   for i in range(r)])
    sig2 = sigma2_of(model).value
    if cfg.target == "exact":
        target = np.array([[exact_covariance(model, a, b) / bn ** 2 for b in schemes] for a in schemes])
    else:
        target = np.array([[_limit_covariance(cfg, a, b, sig2) for b in schemes] for a in schemes])
    scale = np.abs(np.diag(target)).max()
    err = np.where(np.abs(target) > 1e-12 * scale, np.abs(emp - target) / np.abs(target),
                   np.abs(emp - target) / scale)
    tests = []
    if "covariance_match" in cfg.tests:
        tests.append(TestOutcome("covariance_match", float(err.max()), cfg.covariance_tol,
                                 bool(err.max() <= cfg.covariance_tol),
                                 {"relative_errors": err}))
    statistics = {"b_n": bn, "empirical_covariance": emp, "covariance_stderr": se,
                  "target_covariance": target, "target": cfg.target, "sigma2": sig2,
                  "points": [s.describe() for s in schemes]}
    if cfg.target != "exact" and isinstance(model, KernelFieldModel):
        statistics["exact_covariance"] = np.array(
            [[exact_covariance(model, a, b) / bn ** 2 for b in schemes] for a in schemes])
    return ExperimentResult("fdd", cfg.seed, cfg.reps, cfg.hash, statistics, tests, x,
                            tuple(f"point_{i}" for i in range(r)), {}, time.perf_counter() - t0)


def run_path_export(cfg, grid=None):
    """Replicated paths ``t -> S_n(t) / b_n(1)`` on a grid of ``[0, 1]^d``.

    Only finite-dimensional statistics are reported; tightness is not tested.
    """
    t0 = time.perf_counter()
    grid = [tuple(np.atleast_1d(np.asarray(g, dtype=float))) for g in (grid if grid is not None
                                                                      else cfg.grid)]
    if not grid:
        raise ConfigurationError("path export needs a non-empty grid")
    base = cfg.scheme
    if not isinstance(base, (RectangleWeights, ProductLinearWeights)):
        raise ConfigurationError("paths are indexed by t; use rectangle or product-linear weights")
    for g in grid:
        if len(g) != base.dim or min(g) < 0 or max(g) > 1:
            raise ConfigurationError(f"grid point {g} is not in [0, 1]^{base.dim}")
    schemes = [RectangleWeights(base.n, g) if isinstance(base, RectangleWeights) else base.with_t(g)
               for g in grid]
    model = cfg.model if cfg.m is None else cfg.model.m_truncate(cfg.m)
    bn = _scale(cfg, [base])

    def batch(seeds):
        return np.column_stack([sample_sums(model, s, seeds, method=cfg.method) for s in schemes])

    paths = replicate(batch, cfg.reps, cfg.seed, cfg.workers) / bn
    var = paths.var(axis=0, ddof=1)
    statistics = {"b_n": bn, "grid": [list(g) for g in grid], "variance": var}
    inc = np.diff(paths, axis=1)
    if inc.shape[1] >= 2:
        corr = np.corrcoef(inc, rowvar=False)
        statistics["increment_correlation_max"] = float(np.abs(corr - np.eye(len(corr))).max())
        statistics["increment_correlation_stderr"] = 1.0 / sqrt(cfg.reps)
    return ExperimentResult("paths", cfg.seed, cfg.reps, cfg.hash, statistics, [], paths,
                            tuple(f"t{i}" for i in range(len(grid))), {}, time.perf_counter() - t0)
