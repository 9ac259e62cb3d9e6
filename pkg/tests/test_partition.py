import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from multisle.algebra import model_params
from multisle.partition import (
    Block,
    PartitionFunction,
    crossing_probability,
    cross_ratio,
    double_z,
    endpoint_exponent,
    expected_exponents,
    factorized_z,
    kz_residual,
    log_derivative,
    log_slope,
    triple_block_derivatives,
    triple_blocks,
)
from oracles import blocks

GRID = [round(0.05 * i, 2) for i in range(1, 20)]
LEVELS = [1, 2, 3, 4, 10]


def test_factorized_examples():
    assert factorized_z(3, [0, 1]) == 1.0
    assert factorized_z(2, [0, 4]) == pytest.approx(1.189207115002721, rel=1e-12)
    with pytest.raises(ValueError):
        factorized_z(2, [0, 1, 2])


def test_double_examples():
    assert double_z(2, 0, 0, 1) == 1.0
    assert double_z(2, 0, 0, 2) == pytest.approx(2**-0.375, rel=1e-14)
    assert double_z(2, 0, 0, 2) == pytest.approx(0.771105, abs=1e-6)
    with pytest.raises(ValueError):
        double_z(1, 2, 0, 1)
    with pytest.raises(ValueError):
        PartitionFunction.double(1, 2)


@pytest.mark.parametrize("k", [2, 3, 7])
def test_factorized_pair_equals_adjoint_channel(k):
    assert factorized_z(k, [0.3, 2.0]) == pytest.approx(double_z(k, 2, 0.3, 2.0), rel=1e-14)


def test_k1_blocks_closed_form_at_quarter():
    z1, z2 = triple_blocks(1, 0.25)
    assert z1 == pytest.approx(math.sqrt(3), rel=1e-12)
    assert z2 == pytest.approx(1 / math.sqrt(3), rel=1e-12)


@pytest.mark.parametrize("x", np.linspace(0.01, 0.99, 25))
def test_k1_closed_form(x):
    assert triple_blocks(1, x)[0] == pytest.approx(x**-0.5 * (1 - x) ** 0.5, rel=1e-9)


@pytest.mark.parametrize("k", LEVELS)
@pytest.mark.parametrize("x", GRID)
def test_mirror_symmetry(k, x):
    assert triple_blocks(k, x)[0] == pytest.approx(triple_blocks(k, 1 - x)[1], rel=1e-9, abs=1e-9)


@pytest.mark.parametrize("k", [2, 3, 10])
@pytest.mark.parametrize("x", [0.1, 0.3, 0.5, 0.8])
def test_blocks_against_mpmath_oracle(k, x):
    ref_a, ref_b = blocks(k, x, "x"), blocks(k, x, "1-x")
    assert abs(ref_a[0] - ref_b[0]) < 1e-25
    z1, z2 = triple_blocks(k, x)
    assert z1 == pytest.approx(float(ref_a[0]), rel=1e-12)
    assert z2 == pytest.approx(float(ref_a[1]), rel=1e-12)


def test_pinned_k2_values():
    z1, z2 = triple_blocks(2, 0.3)
    assert z1 == pytest.approx(1.2616983141066689, rel=1e-12)
    assert z2 == pytest.approx(0.6713826212299907, rel=1e-12)
    assert crossing_probability(2, 0.3)[0] == pytest.approx(0.6526877851014213, rel=1e-12)


@given(st.floats(0.001, 0.999))
def test_level_one_probability(x):
    assert crossing_probability(1, x)[0] == pytest.approx(1 - x, abs=1e-12)


@pytest.mark.parametrize("k", [1, 2, 3, 5, 8, 16, 40])
def test_half_is_fair(k):
    p1, p2 = crossing_probability(k, 0.5)
    assert p1 == pytest.approx(0.5, abs=1e-12) and p1 + p2 == 1.0


def test_flattening_with_level():
    ps = [crossing_probability(k, 0.2)[0] for k in (1, 2, 4, 8, 16)]
    assert all(a > b > 0.5 for a, b in zip(ps, ps[1:]))


@pytest.mark.parametrize("k", [1, 2, 4])
def test_probability_table_monotone_in_x(k):
    ps = [crossing_probability(k, x)[0] for x in np.linspace(0.1, 0.9, 9)]
    assert all(a > b for a, b in zip(ps, ps[1:]))
    assert all(0 < p < 1 for p in ps)


@pytest.mark.parametrize("k", LEVELS)
@pytest.mark.parametrize("x", [0.05, 0.4, 0.93])
def test_block_derivatives_match_finite_differences(k, x):
    h = 1e-6
    d = triple_block_derivatives(k, x)
    zp, zm = triple_blocks(k, x + h), triple_blocks(k, x - h)
    for i in range(2):
        assert d[i] == pytest.approx((zp[i] - zm[i]) / (2 * h), rel=1e-6)


def test_log_derivative_examples():
    assert log_derivative(PartitionFunction.double(2, 0), 0, [0, 1]) == pytest.approx(3 / 8)
    assert log_derivative(PartitionFunction.factorized(3), 1, [0, 1]) == pytest.approx(1 / 10)


def _fd_grad(pf, x, h=1e-6):
    out = []
    for i in range(len(x)):
        xp, xm = np.array(x, float), np.array(x, float)
        xp[i] += h
        xm[i] -= h
        out.append((math.log(pf.value(xp)) - math.log(pf.value(xm))) / (2 * h))
    return np.array(out)


def test_triple_k1_against_finite_differences():
    pf = PartitionFunction.triple(1)
    x = [0, 0.25, 1]
    np.testing.assert_allclose(pf.grad_log(x), _fd_grad(pf, x), rtol=1e-6)


@given(
    st.sampled_from([1, 2, 3, 6]),
    st.sampled_from(["C1", "C2", "sum"]),
    st.floats(-3, 3),
    st.floats(0.05, 2),
    st.floats(0.05, 2),
)
def test_triple_gradient_property(k, block, x1, g1, g2):
    pf = PartitionFunction.triple(k, block)
    x = [x1, x1 + g1, x1 + g1 + g2]
    np.testing.assert_allclose(pf.grad_log(x), _fd_grad(pf, x, 1e-6 * min(g1, g2)), rtol=1e-5, atol=1e-7)


@given(st.integers(3, 8), st.lists(st.floats(0.1, 2), min_size=2, max_size=3))
def test_pairwise_gradient_property(k, gaps):
    x = np.concatenate([[0.0], np.cumsum(gaps)])
    for pf in [PartitionFunction.factorized(k)] + (
        [PartitionFunction.double(k, 0), PartitionFunction.double(k, 2)] if len(x) == 2 else []
    ):
        if len(x) > k:
            continue
        np.testing.assert_allclose(pf.grad_log(x), _fd_grad(pf, x), rtol=1e-6, atol=1e-9)


def test_triple_translation_and_scale_covariance():
    pf = PartitionFunction.triple(2)
    g = pf.grad_log([0, 0.3, 1])
    assert g.sum() == pytest.approx(0, abs=1e-12)  # translation invariance
    # homogeneity: sum x_i d_i log Z = -2 h_Lambda
    assert np.dot([0, 0.3, 1], g) == pytest.approx(-2 * 3 / 16, abs=1e-12)


def test_symmetric_middle_driver_has_no_pull():
    for k in (1, 2, 5):
        assert PartitionFunction.triple(k).grad_log([-1, 0, 1])[1] == pytest.approx(0, abs=1e-12)


def test_cross_ratio():
    assert cross_ratio(1, 2, 5) == 0.25
    with pytest.raises(ValueError):
        cross_ratio(0, 2, 1)
    with pytest.raises(ValueError):
        triple_blocks(2, 1.0)


def test_kz_examples():
    assert kz_residual(2, "C1", 0.4).ode_residual < 1e-6
    assert abs(log_slope(1, "C1", 1e-4) + 0.5) < 1e-3
    # the raw slope at 1 - x = 1e-4 still carries a t^{h_2Lambda} correction
    assert abs(log_slope(3, "C2", 1 - 1e-4, end=1) + 0.3) < 1e-2
    assert abs(endpoint_exponent(3, "C2", 1) + 0.3) < 1e-3


@pytest.mark.parametrize("k", LEVELS)
@pytest.mark.parametrize("block", ["C1", "C2", "sum"])
def test_kz_residual_small(k, block):
    for x in (0.1, 0.5, 0.9):
        assert kz_residual(k, block, x).max < 1e-3
        assert kz_residual(k, block, x).ode_residual < 1e-6


@pytest.mark.parametrize("k", [2, 3, 4, 10])
def test_endpoint_exponents(k):
    p = model_params(k)
    ident, adj = -2 * float(p.h_fund), float(p.h_adj - 2 * p.h_fund)
    assert expected_exponents(k, "C1") == pytest.approx((ident, adj))
    assert endpoint_exponent(k, Block.C1, 0) == pytest.approx(ident, abs=1e-3)
    assert endpoint_exponent(k, Block.C1, 1) == pytest.approx(adj, abs=1e-3)
    assert endpoint_exponent(k, Block.C2, 0) == pytest.approx(adj, abs=1e-3)
    assert endpoint_exponent(k, Block.C2, 1) == pytest.approx(ident, abs=1e-3)


def test_level_one_has_no_adjoint_exponent():
    assert expected_exponents(1, "C1") == (-0.5, None)
    # the x -> 1 behaviour of x^{-1/2}(1-x)^{1/2}
    assert endpoint_exponent(1, "C1", 1) == pytest.approx(0.5, abs=1e-3)


def _generator_on_crossing(k, x, rates=(1 / 3, 1 / 3, 1 / 3), step=1e-4):
    # drift-SDE generator applied to P[C1] as a function of the three seeds
    kappa = float(model_params(k).kappa)
    pos = np.array([0.0, x, 1.0])
    g = PartitionFunction.triple(k).grad_log(pos)

    def p(z):
        return crossing_probability(k, cross_ratio(*z))[0]

    out = 0.0
    for i in range(3):
        e = np.eye(3)[i] * step
        fp, f0, fm = p(pos + e), p(pos), p(pos - e)
        push = sum(2 * rates[j] / (pos[i] - pos[j]) for j in range(3) if j != i)
        out += kappa * rates[i] / 2 * (fp - 2 * f0 + fm) / step**2
        out += (kappa * rates[i] * g[i] + push) * (fp - fm) / (2 * step)
    return out


@pytest.mark.parametrize("x", [0.2, 0.35, 0.8])
def test_crossing_ratio_is_a_martingale_only_at_level_one(x):
    assert abs(_generator_on_crossing(1, x)) < 1e-5
    assert abs(_generator_on_crossing(2, x)) > 0.1
    assert abs(_generator_on_crossing(4, x)) > 0.1
