from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qverify.kernel import (
    DomainError,
    PrecisionContext,
    QPowers,
    make_context,
    parse_complex,
    q_triangular_power,
    root_of_unity,
)


def test_default_context_values():
    ctx = PrecisionContext()
    assert ctx.precision_bits == 200
    assert ctx.tolerance_digits == 30
    assert ctx.pole_guard == 1e-25
    assert ctx.mp.prec == 200


@pytest.mark.parametrize("kwargs", [
    {"precision_bits": 63},
    {"precision_bits": 100, "tolerance_digits": 30},   # 30 digits need 132 bits
    {"max_terms": 15},
    {"max_window": 7},
    {"pole_guard": 0.0},
    {"tolerance_digits": 0},
])
def test_context_invariants_rejected(kwargs):
    with pytest.raises(ValueError):
        make_context(**kwargs)


def test_guard_margin_boundary():
    make_context(precision_bits=132, tolerance_digits=30)
    with pytest.raises(ValueError):
        make_context(precision_bits=131, tolerance_digits=30)


def test_contexts_are_isolated():
    lo, hi = make_context(precision_bits=64, tolerance_digits=5), make_context(precision_bits=400)
    assert lo.mp.prec == 64 and hi.mp.prec == 400
    assert mpmath.mp.prec == 53


@pytest.mark.parametrize("text,expected", [
    ("0.3", ("0.3", "0")),
    ("0.3-0.25i", ("0.3", "-0.25")),
    ("2i", ("0", "2")),
    ("-i", ("0", "-1")),
    ("i", ("0", "1")),
    ("1e-5+2E-3i", ("1e-5", "2E-3")),
    (" -1.5 + 2j ", ("-1.5", "2")),
])
def test_parse_complex(text, expected):
    assert parse_complex(text) == expected


@pytest.mark.parametrize("text", ["abc", "1+2", "", "0.3+i+i", "e5"])
def test_parse_complex_rejects(text):
    with pytest.raises(ValueError):
        parse_complex(text)


def test_num_parses_decimal_exactly(ctx):
    # "0.1" is rounded once at 200 bits, not inherited from the binary float
    assert ctx.num("0.1") != ctx.num(0.1)
    assert abs(ctx.num("0.1") - ctx.mp.mpf(1) / 10) == 0


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 24), st.integers(-100, 100))
def test_root_of_unity_periodic_and_unimodular(r, i):
    ctx = make_context()
    z = root_of_unity(r, i, ctx).value
    assert z == root_of_unity(r, i + r, ctx).value
    assert abs(abs(z) - 1) < ctx.mp.mpf(2) ** -190
    assert abs(z ** r - 1) < ctx.mp.mpf(2) ** -180


def test_root_of_unity_exact_special_values(ctx):
    assert root_of_unity(2, 1, ctx).value == -1
    assert root_of_unity(4, 1, ctx).value == 1j
    assert root_of_unity(1, 0, ctx).value == 1


def test_q_triangular_power_large_index(ctx):
    q = ctx.num("0.5")
    assert q_triangular_power(q, 0) == 1 and q_triangular_power(q, 1) == 1
    assert q_triangular_power(q, 3) == q ** 3
    assert q_triangular_power(q, 2000) == q ** 1999000


def test_qpowers_fractional(ctx):
    w = QPowers("0.25", Fraction(1, 2), ctx)
    assert abs(w.power(1) - ctx.mp.sqrt(ctx.mp.mpf("0.25"))) < ctx.eps
    assert abs(w.square_weight(3) - ctx.mp.mpf("0.25") ** 4.5) < ctx.eps
    with pytest.raises(DomainError):
        QPowers("0.3i", Fraction(1, 2), ctx)
    with pytest.raises(DomainError):
        QPowers("0.3", -1, ctx)
