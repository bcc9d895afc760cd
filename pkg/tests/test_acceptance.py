"""Acceptance criteria 1-9.

Each test prints one ``PASS criterion N`` or ``FAIL criterion N`` line with
the measured values, then asserts.  Runtime budgets are part of the verdict.
"""

import time
from math import sqrt

import numpy as np
import pytest

from bernfield import config as cfgmod
from bernfield.cli import samples_csv
from bernfield.dependence import delta_p_analytic, delta_p_monte_carlo, sigma2
from bernfield.fields import KernelFieldModel, VolterraFieldModel
from bernfield.harness import (
    example2_variance_recursion, fbs_covariance, replicate, run_clt, run_counterexample1,
    run_counterexample2, run_fdd_covariance,
)
from bernfield.innovations import InnovationField, InnovationSpec
from bernfield.oracle import run_suite
from bernfield.sums import exact_variance, sample_sums
from bernfield.weights import RectangleWeights, fractional_kernel, hurst_scaling_profile

TOL = 1e-12


def _report(capsys, number, title, checks, runtime, budget):
    """Print the verdict line for one criterion and assert it.

    ``checks`` is a list of ``(label, ok, detail)``.
    """
    ok = all(c[1] for c in checks) and runtime < budget
    parts = [f"{label} {'ok' if good else 'FAILED'} ({detail})" for label, good, detail in checks]
    parts.append(f"runtime {runtime:.1f}s < {budget:g}s" if runtime < budget
                 else f"runtime {runtime:.1f}s exceeds {budget:g}s")
    line = f"{'PASS' if ok else 'FAIL'} criterion {number} [{title}]: " + "; ".join(parts)
    with capsys.disabled():
        print("\n" + line)
    assert ok, line


def _preset(name, **overrides):
    data = cfgmod.preset(name)
    data.update(overrides)
    return cfgmod.build_config(data)


def _z(estimate, target, se):
    # a zero standard error means the estimate is exact up to rounding
    if se == 0.0:
        return 0.0 if abs(estimate - target) <= TOL * max(1.0, abs(target)) else np.inf
    return abs(estimate - target) / se


def _variance_se(x):
    c = x - x.mean()
    return sqrt(max(np.mean(c ** 4) - np.mean(c * c) ** 2, 0.0) / len(x))


def test_criterion_1_oracle_identity_suite(capsys):
    t0 = time.perf_counter()
    results = run_suite(seed=0, n_weights=100, moment_orders=(2, 4))
    runtime = time.perf_counter() - t0
    identities = [r for r in results if not r.name.startswith("moment_")]
    moments = [r for r in results if r.name.startswith("moment_")]
    worst_identity = max(r.value for r in identities if not r.name.startswith("covariance"))
    bounds = [r for r in identities if r.name.startswith("covariance_bound")]
    orders = {r.name.split("_")[1] for r in moments}
    checks = [
        ("identities to 1e-12", worst_identity <= TOL and all(r.passed for r in identities),
         f"worst residual {worst_identity:.1e} over {len(identities)} checks"),
        ("covariance bound", all(r.passed for r in bounds), f"{len(bounds)} models"),
        ("moment inequality p in {2, 4}", orders == {"p2", "p4"} and all(r.passed for r in moments),
         f"max lhs/rhs {max(r.value for r in moments):.4f} over {len(moments)} model-order pairs"),
    ]
    _report(capsys, 1, "oracle identities", checks, runtime, 30)


def _field(law, d, seed=4):
    spec = InnovationSpec.two_point(0.25, 3.0, -1.0) if law == "two_point" else InnovationSpec(law)
    return InnovationField(spec, seed, dim=d)


# five preset kernels across d = 1 and d = 2
KERNELS = [
    ("iid_d1", {0: 1.0}, 1, "rademacher"),
    ("ma2_d1", {0: 1.0, 1: -0.5, 2: 0.25}, 1, "rademacher"),
    ("gap_d1", {0: 1.0, 2: 0.7}, 1, "gaussian"),
    ("four_point_d2", {(0, 0): 1.0, (1, 0): 0.5, (0, 1): 0.5, (1, 1): -0.25}, 2, "rademacher"),
    ("two_point_d2", {(0, 0): 1.0, (0, 1): -0.5}, 2, "two_point"),
]


def test_criterion_2_kernel_closed_forms(capsys):
    t0 = time.perf_counter()
    reps = 10_000
    checks = []
    for name, kernel, d, law in KERNELS:
        model = KernelFieldModel(kernel, _field(law, d))
        worst = 0.0
        for p in (2, 4):
            value, se = delta_p_monte_carlo(model, p, n_outer=reps, n_inner=8, seed=7)
            worst = max(worst, _z(value, delta_p_analytic(model, p), se))
        # the same linear field through the Monte Carlo sigma^2 estimator
        mc = sigma2(VolterraFieldModel(kernel, [], _field(law, d)), n_samples=reps, seed=7)
        z_sig = _z(mc.value, sigma2(model).value, mc.stderr)
        scheme = RectangleWeights(64 if d == 1 else 12, (1.0,) * d)
        x = replicate(lambda s: sample_sums(model, scheme, s), reps, 11)
        z_var = _z(x.var(ddof=1), exact_variance(model, scheme), _variance_se(x))
        ok = worst <= 3 and z_sig <= 3 and z_var <= 3
        checks.append((name, ok, f"Delta_p z {worst:.2f}, sigma2 z {z_sig:.2f}, "
                                 f"Var z {z_var:.2f}"))
    _report(capsys, 2, "kernel closed forms vs Monte Carlo", checks,
            time.perf_counter() - t0, 120)


def test_criterion_3_clt_kernel_field(capsys):
    t0 = time.perf_counter()
    res = run_clt(_preset("clt_kernel_d2", reps=10_000))
    runtime = time.perf_counter() - t0
    ks, var = res.test("ks_normal"), res.test("variance_ratio")
    rel = res.statistics["sigma_n_over_b_n_rel_error"]
    checks = [
        ("KS to N(0, sigma^2)", ks.passed, f"D = {ks.statistic:.4f} < {ks.threshold:.4f}"),
        ("variance within 5%", var.passed, f"relative error {var.details['relative_error']:+.4f}"),
        ("sigma_n/b_n within 5% of sigma", abs(rel) <= 0.05, f"relative error {rel:+.4f}"),
    ]
    _report(capsys, 3, "CLT, 4-point kernel d = 2, n = 64", checks, runtime, 300)


def test_criterion_4_degenerate_limit(capsys):
    t0 = time.perf_counter()
    by_b = run_clt(_preset("clt_difference", reps=10_000))
    by_sigma = run_clt(_preset("clt_difference_sigma", reps=10_000))
    runtime = time.perf_counter() - t0
    v = by_b.statistics["empirical_var"]
    ks = by_sigma.test("ks_normal")
    checks = [
        ("sigma^2 = 0", by_b.statistics["sigma2"] == 0.0, f"sigma^2 = {by_b.statistics['sigma2']}"),
        ("Var(S_n/b_n) < 0.01", v < 0.01, f"{v:.5f}"),
        ("exact sigma_n^2 = 2 m_2", abs(by_sigma.statistics["sigma_n2"] - 2.0) <= TOL,
         f"{by_sigma.statistics['sigma_n2']}"),
        ("S_n/sigma_n normal", ks.passed, f"D = {ks.statistic:.4f} < {ks.threshold:.4f}"),
    ]
    _report(capsys, 4, "difference field, n = 2^10", checks, runtime, 60)


def test_criterion_5_alternating_density_sets(capsys):
    t0 = time.perf_counter()
    res = run_counterexample2(_preset("counterexample2"))
    runtime = time.perf_counter() - t0
    blocks = res.statistics["block_variance"]
    block_ok = all(v == (2.0 if m % 2 == 0 else 2.0 ** (m + 1)) for m, v in blocks.items())
    n = np.arange(1, 17)
    recursion = example2_variance_recursion(16)
    ratio = res.statistics["ratio"]
    spread = res.test("ratio_spread").statistic
    checks = [
        ("block variances 2 m_2 / 2^(n+1) m_2", block_ok, f"{len(blocks)} blocks"),
        ("|Gamma_n| = 2^n", bool(np.all(res.statistics["size"] == 2 ** n)), "n <= 16"),
        ("recursion = convolution", bool(np.allclose(recursion, res.statistics["variance"],
                                                     rtol=1e-12)), "n <= 16"),
        ("liminf ratio > 0", ratio[7:].min() > 0, f"min ratio {ratio[7:].min():.4f} for n >= 8"),
        ("adjacent spread >= 1.5", spread >= 1.5, f"min spread {spread:.3f} for n >= 8"),
        ("Monte Carlo within 3 SE", res.test("monte_carlo_crosscheck").passed,
         f"worst z {res.test('monte_carlo_crosscheck').statistic:.2f}"),
    ]
    _report(capsys, 5, "alternating-density sets, exact", checks, runtime, 10)


def test_criterion_6_layered_counterexample(capsys):
    t0 = time.perf_counter()
    cfg = _preset("counterexample1", reps=10_000)
    res = run_counterexample1(cfg)
    runtime = time.perf_counter() - t0
    even, odd = res.test("even_ks_normal"), res.test("odd_not_normal")
    count = res.test("odd_matches_count_law")
    checks = [
        ("even layer n_2 = 4096 KS to N(0, 2)", even.passed and res.statistics["even_n"] == 4096,
         f"D = {even.statistic:.4f} < {even.threshold:.4f}"),
        ("odd layer fails normality", odd.passed,
         f"D = {odd.statistic:.4f} >= {odd.threshold:.4f}"),
        ("odd layer matches count law", count.passed,
         f"two-sample KS p = {count.statistic:.3f} >= 0.01"),
    ]
    _report(capsys, 6, "layered counterexample", checks, runtime, 300)


def test_criterion_7_set_indexed(capsys):
    t0 = time.perf_counter()
    checks = []
    for name in ("fdd_set_lebesgue", "fdd_set_power"):
        cfg = _preset(name, reps=10_000)
        worst = 0.0
        for a in cfg.points:
            mu = a.region.measure(a.measure)
            exact = a.n ** a.measure.beta * mu
            worst = max(worst, abs(a.norm() ** 2 - exact) / exact)
        res = run_fdd_covariance(cfg)
        cov = res.test("covariance_match")
        beta = cfg.points[0].measure.beta
        checks.append((f"{name} b_n^2 = n^beta mu (beta = {beta:g})", worst <= 1e-10,
                       f"relative error {worst:.1e}"))
        checks.append((f"{name} covariance within 10%", cov.passed,
                       f"max relative error {cov.statistic:.4f}"))
    _report(capsys, 7, "set-indexed sums, n = 64", checks, time.perf_counter() - t0, 300)


def test_criterion_8_fbs_scaling(capsys):
    t0 = time.perf_counter()
    prof = hurst_scaling_profile(fractional_kernel(0.8, 512), 0, 2048)
    checks = [("fitted 2H within 0.05 of 1.6", abs(prof.two_h - 1.6) <= 0.05,
               f"2H = {prof.two_h:.4f}")]
    for name, hurst, tol, target in (("fdd_fbs_h05", 0.5, 0.10, "limit"),
                                     ("fdd_fbs_h08", 0.8, 0.15, "exact")):
        res = run_fdd_covariance(_preset(name, reps=10_000, covariance_tol=tol))
        emp = res.statistics["empirical_covariance"][0, 1]
        want = res.statistics["target_covariance"][0, 1]
        rel = abs(emp - want) / abs(want)
        detail = f"Cov(0.5, 1) = {emp:.4f} vs {target} {want:.4f}, relative error {rel:.4f}"
        if hurst == 0.5:
            detail += f", fBs kernel {fbs_covariance(0.5, 1.0, 0.5):.4f}"
        checks.append((f"H = {hurst} covariance within {tol:.0%}", rel <= tol, detail))
    _report(capsys, 8, "fBs scaling, fractional kernel L = 512, n = 2048", checks,
            time.perf_counter() - t0, 600)


def _float_stats(stats, prefix=""):
    out = {}
    for k, v in stats.items():
        if isinstance(v, dict):
            out.update(_float_stats(v, f"{prefix}{k}."))
        elif isinstance(v, (float, np.floating)) and not isinstance(v, bool):
            out[prefix + k] = float(v)
        elif isinstance(v, np.ndarray) and v.dtype.kind == "f":
            for idx, x in np.ndenumerate(v):
                out[f"{prefix}{k}{list(idx)}"] = float(x)
    return out


@pytest.mark.parametrize("name", ["clt_kernel_d2", "fdd_set_lebesgue"])
def test_criterion_9_reproducibility(capsys, name):
    t0 = time.perf_counter()
    runner = run_clt if name.startswith("clt") else run_fdd_covariance
    a = runner(_preset(name, reps=10_000))
    b = runner(_preset(name, reps=10_000))
    many = runner(_preset(name, reps=10_000, workers=4))
    runtime = time.perf_counter() - t0
    sa, sm = _float_stats(a.statistics), _float_stats(many.statistics)
    worst = max(abs(sa[k] - sm[k]) for k in sa)
    tests_same = all(abs(x.statistic - y.statistic) <= 1e-10 for x, y in zip(a.tests, many.tests))
    checks = [
        ("byte-identical samples.csv", samples_csv(a) == samples_csv(b),
         f"{len(samples_csv(a))} bytes"),
        ("workers 1 vs 4 within 1e-10", worst <= 1e-10 and tests_same and sa.keys() == sm.keys(),
         f"max difference {worst:.1e} over {len(sa)} statistics"),
    ]
    _report(capsys, 9, f"reproducibility, {name}", checks, runtime, 600)
