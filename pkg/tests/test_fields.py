from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from bernfield.errors import ConfigurationError, DomainError, UnsupportedOperationError
from bernfield.fields import (
    DifferenceFieldModel, Example1Model, KernelFieldModel, VolterraFieldModel, ZeroFieldModel,
    example1_labels, m_truncate, star_evaluate, star_model,
)
from bernfield.innovations import InnovationField, InnovationSpec, replication_seed

from conftest import within_se


def test_identity_kernel_returns_innovation(rad1):
    model = KernelFieldModel({0: 1.0}, rad1)
    for j in range(-5, 6):
        assert model.evaluate(j) == rad1.value(j)
        assert model.evaluate(j) in (-1.0, 1.0)


def test_difference_field_cancels_under_override(gauss1):
    fld = gauss1.with_overrides({4: gauss1.value(3)})
    assert DifferenceFieldModel(fld).evaluate(4) == 0.0


def test_two_term_kernel_d2(gauss2):
    model = KernelFieldModel({(0, 0): 1.0, (1, 0): 1.0}, gauss2)
    for j in [(0, 0), (3, -2), (-7, 5)]:
        expect = gauss2.value(j) + gauss2.value((j[0] - 1, j[1]))
        assert model.evaluate(j) == pytest.approx(expect, abs=1e-15)


def test_uncentered_and_degenerate_models_rejected(rad1):
    with pytest.raises(ConfigurationError):
        KernelFieldModel({0: 1.0}, InnovationField(InnovationSpec.uniform(), 0))
    with pytest.raises(ConfigurationError):
        KernelFieldModel({0: 0.0}, rad1)
    with pytest.raises(ConfigurationError, match="diagonal"):
        VolterraFieldModel({0: 1.0}, [(1, 1, 0.5)], rad1)


def test_truncation_beyond_radius_is_identity(rad2):
    model = KernelFieldModel({(0, 0): 1.0, (1, -1): 0.5}, rad2)
    assert m_truncate(model, 1) is model
    assert m_truncate(model, 7) is model


def test_truncation_drops_far_terms(rad1):
    model = KernelFieldModel({0: 1.0, 2: 1.0}, rad1)
    assert model.m_truncate(1).kernel == {(0,): 1.0}
    far = KernelFieldModel({3: 1.0}, rad1)
    assert isinstance(far.m_truncate(1), ZeroFieldModel)
    with pytest.raises(DomainError):
        model.m_truncate(-1)


def test_truncation_residual_variance(gauss1):
    kernel = {0: 1.0, 1: -0.5, 2: 0.25, 3: 0.8}
    model = KernelFieldModel(kernel, gauss1)
    m = 1
    exact = model.m2 * sum(a * a for k, a in kernel.items() if abs(k) > m)
    x = model.evaluate_box((0,), (200_000,))
    xm = model.m_truncate(m).evaluate_box((0,), (200_000,))
    # residual at far-apart sites is independent; use every 8th site
    r = (x - xm)[::8]
    se = np.sqrt(np.var(r ** 2) / r.size)
    assert within_se(np.mean(r ** 2), exact, se)


def test_volterra_truncation(rad1):
    model = VolterraFieldModel({0: 1.0, 3: 0.5}, [(0, 1, 0.5), (0, 2, 0.25)], rad1)
    t1 = model.m_truncate(1)
    assert t1.kernel == {(0,): 1.0}
    assert t1.pairs == (((0,), (1,), 0.5),)
    assert model.m_truncate(3) is model


def test_example1_truncation_unsupported():
    with pytest.raises(UnsupportedOperationError):
        Example1Model.preset("small", k_max=2).m_truncate(3)


def test_example1_first_level_labels():
    assert example1_labels(0.25, [1.0])[0] == 1
    assert example1_labels(0.75, [1.0])[0] == -1
    assert example1_labels(1.0, [1.0, 1.0]).tolist() == [-1, -1]


def test_example1_label_domain():
    with pytest.raises(DomainError):
        example1_labels(0.0, [0.5])
    with pytest.raises(DomainError):
        example1_labels(1.5, [0.5])
    with pytest.raises(DomainError):
        example1_labels(0.5, [0.0])


def test_example1_label_frequencies_and_independence():
    d = np.array([0.5, 1.0, 0.25])
    omega = InnovationField(InnovationSpec.uniform(), 1, dim=1).box((0,), (1_000_000,))
    labels = example1_labels(omega, d)
    assert not np.any(labels[:, 1] == 0)
    # joint cell counts against the product law
    codes = np.zeros(len(omega), dtype=np.int64)
    probs = np.ones(1)
    for k, dk in enumerate(d):
        codes = codes * 3 + (labels[:, k] + 1)
        probs = np.multiply.outer(probs, [dk / 2, 1 - dk, dk / 2]).ravel()
    counts = np.bincount(codes, minlength=3 ** len(d))
    keep = probs > 0
    assert counts[~keep].sum() == 0
    res = stats.chisquare(counts[keep], probs[keep] * len(omega))
    assert res.pvalue > 0.01


def _single_layer(alpha=0.5, n1=4):
    omega = InnovationField(InnovationSpec.uniform(), 3, dim=1)
    return Example1Model((alpha,), (n1,), (1.0,), 1, omega)


def test_example1_single_layer_support():
    model = _single_layer(0.5)
    x = model.evaluate_box((0,), (10_000,))
    assert set(np.unique(x)) <= {-1.0, 0.0, 1.0}


def test_example1_mean_and_variance():
    model = Example1Model.preset("small", seed=8, k_max=2)
    x = model.evaluate_box((0,), (100_000,))
    assert within_se(x.mean(), 0.0, x.std() / np.sqrt(x.size))
    exact = sum(2 * a * a for a in model.alpha)
    # X_i and X_j share innovations only at lag n_k; subsample at a stride avoiding all lags
    y = x[::257] ** 2
    assert within_se(y.mean(), exact, y.std() / np.sqrt(y.size))


def test_example1_preset_parameters():
    full = Example1Model.preset("full", k_max=2)
    assert full.alpha == (0.5, 2.0 ** -4)
    assert full.n_seq == (8, 4096)
    assert full.d_seq == (1 / 8, 1.0)
    with pytest.raises(ConfigurationError):
        Example1Model.preset("huge")


def test_star_evaluate_outside_window(gauss1):
    model = KernelFieldModel({0: 1.0, 1: 0.5}, gauss1)
    assert star_evaluate(model, 5) == model.evaluate(5)
    assert star_evaluate(model, -1) == model.evaluate(-1)


def test_star_difference_identity(gauss2):
    kernel = {(0, 0): 1.0, (1, 0): -0.5, (0, 2): 0.25}
    model = KernelFieldModel(kernel, gauss2)
    star = star_model(model)
    d = gauss2.value((0, 0)) - star.innovation.value((0, 0))
    for j in product(range(-1, 3), repeat=2):
        a = kernel.get(j, 0.0)
        assert model.evaluate(j) - star.evaluate(j) == pytest.approx(a * d, abs=1e-14)


def test_star_coupling_l2_norm():
    n = 20_000
    spec = InnovationSpec.rademacher()
    diffs = np.empty(n)
    for i, s in enumerate(replication_seed(4, np.arange(n))):
        model = KernelFieldModel({0: 1.0}, InnovationField(spec, int(s), dim=1))
        diffs[i] = model.evaluate(0) - star_evaluate(model, 0)
    sq = diffs ** 2
    assert within_se(np.sqrt(sq.mean()), np.sqrt(2.0), sq.std() / np.sqrt(n) / (2 * np.sqrt(2.0)))


@pytest.mark.parametrize("shift", [(5, 0), (-13, 21)])
def test_stationarity_second_moments(gauss2, shift):
    model = VolterraFieldModel({(0, 0): 1.0, (1, 0): 0.5}, [((0, 0), (0, 1), 0.7)], gauss2)
    pattern = np.array([[0, 0], [1, 0], [0, 1]])
    seeds = replication_seed(9, np.arange(20_000))
    a = np.array([model.with_seed(int(s)).evaluate_many(pattern) for s in seeds])
    b = np.array([model.with_seed(int(s)).evaluate_many(pattern + shift) for s in seeds])
    for f in (lambda x: x[:, 0], lambda x: x[:, 0] ** 2, lambda x: x[:, 0] * x[:, 1],
              lambda x: x[:, 0] * x[:, 2]):
        fa, fb = f(a), f(b)
        se = np.sqrt((fa.var() + fb.var()) / len(fa))
        assert within_se(fa.mean(), fb.mean(), se, k=4)


def test_truncated_field_is_finitely_dependent(gauss1):
    model = VolterraFieldModel({0: 1.0, 1: 0.5, 4: 0.3}, [(0, 1, 0.6), (1, 3, 0.4)], gauss1)
    m = 1
    tm = model.m_truncate(m)
    x = tm.evaluate_box((0,), (400_000,))
    lag = 2 * m + 1
    prod_ = x[:-lag] * x[lag:]
    prod_ = prod_[::(2 * m + 2)]
    assert within_se(prod_.mean(), 0.0, prod_.std() / np.sqrt(prod_.size))


def test_kernel_truncated_covariance_zero_analytically(rad2):
    model = KernelFieldModel({(0, 0): 1.0, (1, 1): 0.5, (2, 0): 0.5}, rad2).m_truncate(1)
    # covariance at lag h is sum_k a_k a_{k+h}; offsets of the truncation stay within 1
    offs = {tuple(k): c for k, c in zip(model.offsets.tolist(), model.coefs)}
    for h in [(3, 0), (0, 3), (3, 3), (-3, 1)]:
        cov = sum(c * offs.get((k[0] + h[0], k[1] + h[1]), 0.0) for k, c in offs.items())
        assert cov == 0.0


@settings(max_examples=40, deadline=None)
@given(coefs=st.dictionaries(st.tuples(st.integers(-2, 2), st.integers(-2, 2)),
                             st.floats(-2, 2, allow_nan=False).filter(lambda v: abs(v) > 1e-3),
                             min_size=1, max_size=6),
       j=st.tuples(st.integers(-50, 50), st.integers(-50, 50)),
       seed=st.integers(0, 2 ** 32))
def test_kernel_evaluate_is_direct_convolution(coefs, j, seed):
    fld = InnovationField(InnovationSpec.gaussian(), seed, dim=2)
    model = KernelFieldModel(coefs, fld)
    direct = sum(a * fld.value((j[0] - k[0], j[1] - k[1])) for k, a in coefs.items())
    assert model.evaluate(j) == pytest.approx(direct, rel=1e-12, abs=1e-12)
    box = model.evaluate_box(j, (2, 3))
    assert box[0, 0] == pytest.approx(model.evaluate(j), rel=1e-12, abs=1e-12)
    assert box[1, 2] == pytest.approx(model.evaluate((j[0] + 1, j[1] + 2)), rel=1e-12, abs=1e-12)
