from itertools import product

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import integrate

from bernfield.errors import ConfigurationError, DegenerateSchemeError
from bernfield.weights import (
    DenseWeights, IndexSetWeights, MeasureSpec, ProductLinearWeights, RectangleWeights, Region,
    SetIndexedWeights, boundary_ratio, check_negligibility, check_shift_condition, coefficient,
    contiguous, example2_gamma, fractional_kernel, hurst_scaling_profile, norm, overlap,
    shift_distance, shift_variation,
)


def test_rectangle_inside_and_outside():
    w = RectangleWeights(4, (1, 1))
    assert coefficient(w, (2, 3)) == 1.0
    assert coefficient(w, (0, 3)) == 0.0
    assert coefficient(w, (5, 1)) == 0.0


@pytest.mark.parametrize("n,d", [(5, 1), (8, 2), (4, 3)])
def test_rectangle_norm_and_negligibility(n, d):
    w = RectangleWeights(n, (1,) * d)
    assert norm(w) == pytest.approx(n ** (d / 2), rel=1e-15)
    assert check_negligibility(w) == pytest.approx(n ** (-d / 2), rel=1e-15)


def test_rectangle_partial_t():
    w = RectangleWeights(10, (0.35, 1.0))
    assert norm(w) ** 2 == pytest.approx(3 * 10)


def test_set_indexed_unit_cubes():
    w = SetIndexedWeights(MeasureSpec.lebesgue(2), Region([((0, 0), (1, 1))]), 3)
    assert coefficient(w, (1, 1)) == 1.0
    assert coefficient(w, (3, 0)) == 0.0
    assert norm(w) ** 2 == pytest.approx(9.0, abs=1e-12)


def _power_mass(gammas, lo, hi):
    """Numerical quadrature of prod |x_q|^gamma_q over a box (independent oracle)."""
    total = 1.0
    for g, a, b in zip(gammas, lo, hi):
        pts = [0.0] if a < 0 < b else None
        total *= integrate.quad(lambda x: abs(x) ** g, a, b, points=pts, epsabs=1e-13)[0]
    return total


def test_measure_box_against_quadrature():
    mu = MeasureSpec((1.0, 0.5))
    for lo, hi in [((0, 0), (1, 1)), ((-0.5, 0.2), (0.75, 0.9)), ((0.3, -1), (2, 0))]:
        assert mu.box(lo, hi) == pytest.approx(_power_mass(mu.gammas, lo, hi), rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(g=st.tuples(st.sampled_from([0.0, 0.5, 1.0, 2.0]), st.sampled_from([0.0, 1.0, -0.5])),
       n=st.integers(1, 12),
       box=st.tuples(st.fractions(0, 1, max_denominator=8), st.fractions(0, 1, max_denominator=8),
                     st.fractions(0, 1, max_denominator=8), st.fractions(0, 1, max_denominator=8)))
def test_self_similarity_exact(g, n, box):
    x0, x1 = sorted((float(box[0]), float(box[1])))
    y0, y1 = sorted((float(box[2]), float(box[3])))
    assume(x1 > x0 and y1 > y0)
    mu = MeasureSpec(g)
    region = Region([((x0, y0), (x1, y1))])
    w = SetIndexedWeights(mu, region, n)
    target = n ** mu.beta * region.measure(mu)
    assert norm(w) ** 2 == pytest.approx(target, rel=1e-10, abs=1e-12)


def test_self_similarity_union_region():
    mu = MeasureSpec((1.0, 0.0))
    region = Region([((0, 0), (0.5, 1)), ((0.5, 0.5), (1, 1))])
    assert region.measure(mu) == pytest.approx(0.125 + 0.375 * 0.5, rel=1e-14)
    for n in (4, 16, 64):
        assert norm(SetIndexedWeights(mu, region, n)) ** 2 == pytest.approx(
            n ** 3 * region.measure(mu), rel=1e-10)


def test_index_set_norm_and_negligibility():
    pts = np.array([[0, 0], [3, 1], [2, 2], [7, -4]])
    w = IndexSetWeights(pts)
    assert norm(w) ** 2 == 4
    assert check_negligibility(w) == pytest.approx(0.5)


@pytest.mark.parametrize("n", range(1, 15))
def test_example2_sizes(n):
    assert norm(example2_gamma(n)) ** 2 == pytest.approx(2 ** n)


def _direct_product_weights(kernels, n, t):
    """b_{n,j} = prod_q sum_{i=1}^{floor(n t_q)} a_{i - j_q}, evaluated term by term."""
    axes = []
    for kern, tq in zip(kernels, t):
        m = int(np.floor(n * tq + 1e-12))
        js = range(1 - max(kern), m - min(kern) + 1)
        axes.append({j: sum(kern.get(i - j, 0.0) for i in range(1, m + 1)) for j in js})
    return axes


def test_product_linear_against_direct_sum():
    kernels = ({1: 1.0, 2: -0.3, 4: 0.2}, {0: 0.5, 1: 0.5})
    w = ProductLinearWeights(kernels, 9, (0.7, 1.0))
    axes = _direct_product_weights(kernels, 9, (0.7, 1.0))
    for j0, b0 in axes[0].items():
        for j1, b1 in axes[1].items():
            assert coefficient(w, (j0, j1)) == pytest.approx(b0 * b1, abs=1e-14)


def test_product_linear_negligibility_decreases():
    kern = ({1: 1.0, 2: 0.5, 3: 0.25},)
    vals = [check_negligibility(ProductLinearWeights(kern, n, (1.0,))) for n in (8, 16, 32, 64)]
    assert np.all(np.diff(vals) < 0)


def test_shift_condition_rectangle_d1():
    for n in (4, 25, 100):
        assert check_shift_condition(RectangleWeights(n, (1,)), 0) == pytest.approx(
            np.sqrt(2 / n), rel=1e-14)


def test_zero_scheme_degenerate():
    w = RectangleWeights(0, (1,))
    with pytest.raises(DegenerateSchemeError):
        check_negligibility(w)
    with pytest.raises(DegenerateSchemeError):
        check_shift_condition(w, 0)


def _boundary_count(points):
    s = {tuple(p) for p in points}
    d = len(points[0])
    steps = [e for e in product((-1, 0, 1), repeat=d) if any(e)]
    return sum(any(tuple(a + b for a, b in zip(p, e)) not in s for e in steps) for p in s)


@settings(max_examples=60, deadline=None)
@given(pts=st.sets(st.tuples(st.integers(0, 6), st.integers(0, 6)), min_size=1, max_size=25))
def test_boundary_sandwich(pts):
    pts = sorted(pts)
    w = IndexSetWeights(np.array(pts))
    boundary = _boundary_count(pts)
    assert boundary_ratio(np.array(pts)) == pytest.approx(boundary / len(pts))
    shifts = [shift_distance(w, e) ** 2 for e in ((1, 0), (0, 1))]
    for s in shifts:
        assert s <= 2 * boundary + 1e-12
    # each of the 3^d - 1 neighbour shifts is bounded through the d axis shifts
    assert 2 * boundary <= (3 ** 2 - 1) * 2 * sum(shifts) + 1e-12


def test_boundary_upper_bound_needs_constant():
    # two adjacent sites: both are boundary points but one unit shift moves only two indicators
    w = contiguous(2)
    assert 2 * _boundary_count([(0,), (1,)]) == 4
    assert shift_distance(w, (1,)) ** 2 == pytest.approx(2.0, rel=1e-15)


def test_boundary_ratio_closed_forms():
    assert boundary_ratio(np.arange(10).reshape(-1, 1)) == pytest.approx(2 / 10)
    n = 7
    sq = np.array(list(product(range(n), range(n))))
    assert boundary_ratio(sq) == pytest.approx((4 * n - 4) / n ** 2)
    with pytest.raises(ConfigurationError):
        boundary_ratio(np.zeros((0, 1)))


def test_example2_boundary_ratio_stays_large():
    ratios = [boundary_ratio(example2_gamma(n)) for n in range(2, 15)]
    assert min(ratios[-4:]) > 0.3


def test_hurst_profile_iid():
    prof = hurst_scaling_profile([{1: 1.0}], 0, 64)
    assert np.allclose(prof.ratio, np.floor(64 * prof.s) / 64)
    assert prof.hurst == pytest.approx(0.5, abs=1e-12)


def test_hurst_profile_matches_direct_weights():
    kern = fractional_kernel(0.8, 16)
    prof = hurst_scaling_profile([kern], 0, 48)
    b2 = [sum(v * v for v in _direct_product_weights((kern,), m, (1.0,))[0].values())
          for m in np.floor(48 * prof.s).astype(int)]
    ref = sum(v * v for v in _direct_product_weights((kern,), 48, (1.0,))[0].values())
    np.testing.assert_allclose(prof.ratio, np.array(b2) / ref, rtol=1e-12)


def test_hurst_negative_correlation_kernel_consistent():
    kern = [{1: 1.0, 2: -1.0}]
    h512 = hurst_scaling_profile(kern, 0, 512).two_h
    h1024 = hurst_scaling_profile(kern, 0, 1024).two_h
    assert abs(h512 - h1024) < 0.05


@settings(max_examples=40, deadline=None)
@given(arr=st.lists(st.floats(-3, 3, allow_nan=False), min_size=2, max_size=30),
       shift=st.integers(-4, 4))
def test_overlap_polarization(arr, shift):
    w = DenseWeights((0,), np.array(arr))
    lhs = -2 * overlap(w, (shift,))
    rhs = shift_distance(w, (shift,)) ** 2 - 2 * norm(w) ** 2
    assert lhs == pytest.approx(rhs, rel=1e-10, abs=1e-10)


SCHEMES = {
    "rectangle": lambda n: RectangleWeights(n, (1.0, 0.5)),
    "contiguous": lambda n: contiguous(n),
    "set_indexed": lambda n: SetIndexedWeights(MeasureSpec((1.0, 0.0)), Region([((0, 0), (1, 1))]), n),
    "product_linear": lambda n: ProductLinearWeights(({1: 1.0, 2: 0.5},), n, (1.0,)),
}


@pytest.mark.parametrize("name", sorted(SCHEMES))
def test_cauchy_schwarz_chain(name):
    shifts, variations = [], []
    for n in (8, 16, 32, 64):
        w = SCHEMES[name](n)
        for q in range(w.dim):
            s, v = check_shift_condition(w, q), shift_variation(w, q)
            assert v <= 2 * s + 1e-12
        shifts.append(check_shift_condition(w, 0))
        variations.append(shift_variation(w, 0))
    assert np.all(np.diff(shifts) < 0)
    assert np.all(np.diff(variations) < 0)
