from math import comb

import pytest

from qverify.kernel import DomainError, PoleError
from qverify.pochhammer import poch_ratio
from qverify.series import eval_A, eval_B
from qverify.multisection import (
    coefficient_oracle,
    compositions_nonneg,
    compositions_windowed,
    eval_12r_rhs,
    eval_15r_both,
    eval_15r_lhs,
    eval_e1_rhs,
    eval_e2_rhs,
    multisum_b1,
    multisum_u1,
    phase_exponent,
    product_multisection,
    u1_rhs,
)


def parts(comps):
    return [c.parts for c in comps]


def test_compositions_nonneg():
    assert parts(compositions_nonneg(2, 2)) == [(0, 2), (1, 1), (2, 0)]
    assert parts(compositions_nonneg(3, 0)) == [(0, 0, 0)]
    assert compositions_nonneg(2, -1) == []
    for r in range(1, 5):
        for n in range(7):
            comps = compositions_nonneg(r, n)
            assert len(comps) == comb(n + r - 1, r - 1)
            assert all(c.total == n and min(c) >= 0 for c in comps)
            assert parts(comps) == sorted(parts(comps))


def test_compositions_windowed():
    assert parts(compositions_windowed(2, 0, 1)) == [(-1, 1), (0, 0), (1, -1)]
    assert compositions_windowed(2, 3, 1) == []
    got = set(parts(compositions_windowed(3, 1, 1)))
    assert got == {(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, -1), (1, -1, 1), (-1, 1, 1)}
    # brute force
    import itertools
    for r, n, K in [(2, 1, 3), (3, -2, 2), (4, 0, 2)]:
        brute = sorted(p for p in itertools.product(range(-K, K + 1), repeat=r) if sum(p) == n)
        assert parts(compositions_windowed(r, n, K)) == brute


def test_phase_exponent():
    assert phase_exponent((1, 1, 1), 3) == 0
    assert phase_exponent((0, 2), 2, start=2) == 0


def test_u1_examples(ctx):
    assert abs(multisum_u1("0.3", "0.4", 2, 1, ctx)) < ctx.eps
    assert abs(multisum_u1("0.3", "0.4", 2, 0, ctx) - 1) < ctx.eps
    expected = (1 - ctx.num("0.3") ** 2) / (1 - ctx.num("0.4") ** 2)
    assert abs(multisum_u1("0.3", "0.4", 2, 2, ctx) - expected) < ctx.eps
    assert abs(u1_rhs("0.3", "0.4", 2, 2, ctx) - expected) < ctx.eps


def test_u1_complex_parameters(ctx):
    a, q = "0.4-0.7i", "-0.2+0.5i"
    for r in (3, 4):
        for n in range(9):
            lhs, rhs = multisum_u1(a, q, r, n, ctx), u1_rhs(a, q, r, n, ctx)
            assert abs(lhs - rhs) <= 10 ** -30 * max(1, abs(rhs))


def test_multisum_rejects_r_below_two(ctx):
    with pytest.raises(DomainError):
        multisum_u1("0.3", "0.4", 1, 2, ctx)


def test_coefficient_oracle(ctx):
    rows = coefficient_oracle("0.3", "0.4", 3, 12, ctx)
    assert len(rows) == 13
    for n, (conv, claim) in enumerate(rows):
        assert abs(conv - claim) < 10 ** -30
        assert abs(conv - multisum_u1("0.3", "0.4", 3, n, ctx)) < 10 ** -30
    zero_a = coefficient_oracle(0, "0.4", 2, 8, ctx)
    assert all(abs(conv) < ctx.eps for n, (conv, _) in enumerate(zero_a) if n % 2)
    with pytest.raises(DomainError):
        coefficient_oracle(0, "0.4", 2, 65, ctx)
    with pytest.raises(DomainError):
        coefficient_oracle(0, "0.4", 2, 4, ctx, b="0.1")


def test_product_multisection(ctx):
    for r in (2, 3, 5):
        lhs, rhs = product_multisection("0.3+0.2i", "0.5", "0.6i", r, ctx)
        assert abs(lhs.value - rhs.value) <= 10 ** -30 * abs(rhs.value)


def test_b1_vanishing_and_window_stability(ctx):
    v = multisum_b1("0.9", "0.1", "0.4", 2, 1, ctx, K=40)
    assert abs(v.value) < 10 ** -30
    v40 = multisum_b1("0.9", "0.1", "0.4", 2, 0, ctx, K=40)
    v60 = multisum_b1("0.9", "0.1", "0.4", 2, 0, ctx, K=60)
    assert v40.converged and v60.converged
    assert abs(v40.value - v60.value) < 10 ** -30


def test_b1_n0_matches_lemma_product(ctx):
    a, b, q = (ctx.num(v) for v in ("0.9", "0.1", "0.4"))
    lemma = poch_ratio([q, b / a, -b, -q / a], [-q, -b / a, b, q / a], q, ctx)
    v = multisum_b1(a, b, q, 2, 0, ctx)
    assert abs(v.value - lemma.value) <= 10 ** -30 * abs(lemma.value)


def test_b1_window_limit(ctx):
    with pytest.raises(DomainError):
        multisum_b1("0.9", "0.1", "0.4", 2, 0, ctx, K=ctx.max_window + 1)


def test_b1_small_window_not_converged(ctx):
    v = multisum_b1("0.9", "0.1", "0.4", 2, 0, ctx, K=3)
    assert not v.converged and "boundary" in v.diagnostics


def test_e1_trivial_and_examples(ctx):
    assert abs(eval_e1_rhs(1, "0.3", "0.4", 0, 2, ctx).value - 1) < ctx.eps
    q = ctx.num("0.4")
    t = ctx.num("0.5")
    lhs = eval_A(2, 0, q ** 2, t ** 2, ctx).value
    assert abs(eval_e1_rhs(1, 0, q, t, 2, ctx).value - lhs) < 10 ** -30
    a, q, t = (ctx.num(v) for v in ("0.2", "0.3", "0.25"))
    lhs = eval_A(3, a ** 3, q ** 3, t ** 3, ctx).value
    rhs = eval_e1_rhs(1, a, q, t, 3, ctx)
    assert rhs.converged and abs(rhs.value - lhs) < 10 ** -30


def test_e1_outer_cap_too_small(ctx):
    v = eval_e1_rhs(1, "0.3", "0.6", "0.6", 2, ctx, outer_cap=2)
    assert not v.converged and "outer_cap" in v.diagnostics


def test_e1_alpha_zero_needs_small_t(ctx):
    with pytest.raises(DomainError):
        eval_e1_rhs(0, "0.3", "0.4", "0.9", 2, ctx)


def test_e2_variants_are_bit_identical(ctx):
    a, q, t = (ctx.num(v) for v in ("0.2+0.1i", "0.35", "0.5"))
    lhs = eval_A(3, a ** 3, q ** 3, t ** 3, ctx).value
    v1 = eval_e2_rhs(1, a, q, t, 3, ctx, phase="r-1")
    v2 = eval_e2_rhs(1, a, q, t, 3, ctx, phase="r")
    assert v1.value == v2.value
    assert abs(v1.value - lhs) < 10 ** -30
    with pytest.raises(ValueError):
        eval_e2_rhs(1, a, q, t, 3, ctx, phase="r+1")


def test_12r_example(ctx):
    a, b, q, x = (ctx.num(v) for v in ("0.8", "0.15", "0.35", "0.5"))
    lhs = eval_B(2, a ** 2, b ** 2, q ** 2, x ** 2, ctx).value
    rhs = eval_12r_rhs(1, a, b, q, x, 2, ctx)
    assert rhs.converged
    assert abs(rhs.value - lhs) <= 10 ** -30 * max(1, abs(lhs))
    direct = eval_12r_rhs(1, a, b, q, x, 2, ctx, inner="direct")
    assert abs(direct.value - rhs.value) <= 10 ** -30 * max(1, abs(lhs))


def test_12r_errors(ctx):
    with pytest.raises(DomainError):
        eval_12r_rhs(1, "0.8", "0.15", "0.35", 0, 2, ctx)
    with pytest.raises(DomainError):
        eval_12r_rhs(0, "0.8", "0.15", "0.35", "0.5", 2, ctx)
    # a = q makes (q/a; q) vanish in the denominator and (a;q)_{-1} blow up
    with pytest.raises(PoleError):
        eval_12r_rhs(1, "0.35", "0.1", "0.35", "0.5", 2, ctx)


def test_15r_example(ctx):
    lhs, rhs = eval_15r_both("0.6", "0.3", "0.7", 2, ctx)
    assert lhs.converged and rhs.converged
    assert abs(lhs.value - rhs.value) <= 10 ** -30 * max(1, abs(lhs.value))


def test_15r_single_prefactor_disagrees(ctx):
    lhs, rhs = eval_15r_both("0.6", "0.3", "0.7", 2, ctx, variant="single")
    assert abs(lhs.value - rhs.value) > 10 ** -3


def test_15r_pole_and_small_x(ctx):
    with pytest.raises(PoleError):
        eval_15r_both("0.3", "0.3", "0.7", 2, ctx)
    # n = 0 dominates once q^2 << |x| << 1; the n = -1 term grows like x^-r
    a = ctx.num("0.6")
    small = eval_15r_lhs(a, "0.001", "0.01", 2, ctx).value
    assert abs(small - 1 / (1 - a ** 2)) < 10 ** -7
