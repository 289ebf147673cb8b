"""Adaptive summation of the unilateral and bilateral q-series.

All evaluators generate their summands by term-ratio recurrences and hand
the stream to :func:`sum_terms`.  A one-sided stream stops once three
consecutive terms are below ``10**-(tolerance_digits + 5) * (1 + |partial|)``
and the last term is no larger than the one before it; the reported error is
the geometric tail extrapolated from the last two term magnitudes.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterable, Iterator

from .kernel import (
    DomainError,
    PoleError,
    PrecisionContext,
    QPowers,
    as_fraction,
    default_context,
    q_triangular_power,
)
from .pochhammer import SeriesValue, check_nome, poch_ratio

__all__ = [
    "REGION_MARGIN",
    "sum_terms",
    "sum_unilateral",
    "sum_bilateral",
    "sum_two_sided",
    "eval_2phi1",
    "eval_A",
    "eval_B",
    "eval_1psi1",
    "psi11_product",
    "eval_F",
    "ramanujan_A",
    "unilateral_A_terms",
    "bilateral_B_terms",
    "F_terms",
]

# Convergence regions of the alpha = 0 sums are shrunk by this much on each side.
REGION_MARGIN = 0.05

_SMALL_RUN = 3
_MAX_TAIL_RATIO = 0.999


def sum_terms(terms: Iterable, ctx: PrecisionContext, limit: int | None = None,
              label: str = "series") -> SeriesValue:
    """Sum a stream of terms with the adaptive stopping rule."""
    mp = ctx.mp
    limit = ctx.max_terms if limit is None else limit
    eps = ctx.stop_eps
    partial = mp.mpc(0)
    small = 0
    prev_mag = None
    mag = mp.mpf(0)
    peak = mp.mpf(0)
    count = 0
    for term in itertools.islice(terms, limit):
        count += 1
        partial += term
        mag = abs(term)
        if mag > peak:
            peak = mag
        if mag <= eps * (1 + abs(partial)):
            small += 1
        else:
            small = 0
        if small >= _SMALL_RUN and mag <= prev_mag:
            return SeriesValue(partial, _tail(mag, prev_mag, mp), count, True, "", peak)
        prev_mag = mag
    tail = _tail(mag, prev_mag, mp) if prev_mag is not None else mag
    return SeriesValue(partial, tail, count, False,
                       f"{label}: no decay within {limit} terms", peak)


def _tail(mag, prev_mag, mp):
    if mag == 0:
        return mp.mpf(0)
    if prev_mag == 0:
        return mag
    rho = min(mag / prev_mag, mp.mpf(_MAX_TAIL_RATIO))
    return mag * rho / (1 - rho)


def sum_unilateral(term_at: Callable[[int], object], ctx: PrecisionContext | None = None) -> SeriesValue:
    """``sum_{k>=0} term_at(k)``; ``term_at`` is called with k = 0, 1, 2, ... in order."""
    ctx = ctx or default_context()
    return sum_terms(map(term_at, itertools.count()), ctx)


def sum_two_sided(nonneg: Iterator, negative: Iterator, ctx: PrecisionContext) -> SeriesValue:
    """Add the n >= 0 stream and the n <= -1 stream, each summed by the one-sided rule."""
    upper = sum_terms(nonneg, ctx, label="n>=0 half")
    lower = sum_terms(negative, ctx, label="n<0 half")
    return upper + lower


def sum_bilateral(term_at: Callable[[int], object], ctx: PrecisionContext | None = None) -> SeriesValue:
    """``sum_{n in Z} term_at(n)`` as the sum of its two one-sided halves.

    Each half gets the full ``max_terms`` budget; ``term_at`` sees the indices
    0, 1, 2, ... and -1, -2, ... in that order.
    """
    ctx = ctx or default_context()
    return sum_two_sided(
        map(term_at, itertools.count()),
        map(term_at, itertools.count(-1, -1)),
        ctx,
    )


def _guard(factor, ctx: PrecisionContext, where: str, index: int):
    mag = abs(factor)
    if mag < ctx.pole_guard:
        raise PoleError(where, index, mag)
    return factor


def eval_2phi1(a, b, c, q, z, ctx: PrecisionContext | None = None) -> SeriesValue:
    """``2phi1(a, b; c; q, z) = sum (a;q)_k (b;q)_k / ((c;q)_k (q;q)_k) z^k`` for ``|z| < 1``."""
    ctx = ctx or default_context()
    a, b, c, q, z = (ctx.num(v) for v in (a, b, c, q, z))
    check_nome(q, ctx)
    if not abs(z) < 1:
        raise DomainError("2phi1 requires |z| < 1")

    def terms():
        one = ctx.mp.mpc(1)
        term, qk = one, one
        k = 0
        while True:
            yield term
            den = _guard(one - c * qk, ctx, "(c;q)_k", k) * (one - qk * q)
            term *= (one - a * qk) * (one - b * qk) / den * z
            qk *= q
            k += 1

    return sum_terms(terms(), ctx, label="2phi1")


def unilateral_A_terms(alpha, a, q, t, ctx: PrecisionContext) -> Iterator:
    """Summands ``(a;q)_n q^(alpha n^2) t^n / (q;q)_n`` for n = 0, 1, ..."""
    weights = QPowers(q, alpha, ctx)
    q = weights.q
    a, t = ctx.num(a), ctx.num(t)
    one = ctx.mp.mpc(1)
    step = weights.power(1)           # q^(alpha (2n+1)) at n = 0
    step_ratio = weights.power(2)     # q^(2 alpha)
    term, qn = one, one
    while True:
        yield term
        term *= (one - a * qn) / (one - qn * q) * step * t
        qn *= q
        step *= step_ratio


def eval_A(alpha, a, q, t, ctx: PrecisionContext | None = None) -> SeriesValue:
    """``A_q^(alpha)(a; t) = sum_{n>=0} (a;q)_n q^(alpha n^2) t^n / (q;q)_n``.

    ``alpha`` is a nonnegative rational.  At ``alpha = 0`` this is the
    q-binomial series and needs ``|t| <= 1 - REGION_MARGIN``.
    """
    ctx = ctx or default_context()
    alpha = as_fraction(alpha)
    q, t = ctx.num(q), ctx.num(t)
    check_nome(q, ctx)
    if alpha < 0:
        raise DomainError("alpha must be nonnegative")
    if alpha == 0 and not abs(t) <= 1 - REGION_MARGIN:
        raise DomainError(f"alpha=0 requires |t| <= {1 - REGION_MARGIN}")
    return sum_terms(unilateral_A_terms(alpha, a, q, t, ctx), ctx, label="A")


def bilateral_B_terms(alpha, a, b, q, x, ctx: PrecisionContext) -> tuple[Iterator, Iterator]:
    """Summand streams of ``B_q^(alpha)(a, b; x)`` for n = 0, 1, ... and n = -1, -2, ..."""
    weights = QPowers(q, alpha, ctx)
    q = weights.q
    a, b, x = ctx.num(a), ctx.num(b), ctx.num(x)
    one = ctx.mp.mpc(1)

    def upper():
        term, qn = one, one
        step, step_ratio = weights.power(1), weights.power(2)
        n = 0
        while True:
            yield term
            term *= (one - a * qn) / _guard(one - b * qn, ctx, "(b;q)_n", n) * step * x
            qn *= q
            step *= step_ratio
            n += 1

    def lower():
        term, qm = one, one
        step, step_ratio = weights.power(1), weights.power(2)
        m = 0
        while True:
            qm *= q
            m += 1
            # term_{-m} = term_{-(m-1)} (1 - b q^-m) / (1 - a q^-m) q^(alpha (2m-1)) / x
            term *= (one - b / qm) / _guard(one - a / qm, ctx, "(a;q)_n with n<0", m) * step / x
            step *= step_ratio
            yield term

    return upper(), lower()


def eval_B(alpha, a, b, q, x, ctx: PrecisionContext | None = None) -> SeriesValue:
    """``B_q^(alpha)(a, b; x) = sum_{n in Z} (a;q)_n / (b;q)_n q^(alpha n^2) x^n``.

    For ``alpha > 0`` any ``x != 0`` is allowed.  At ``alpha = 0`` this is the
    1psi1 sum and needs ``|b/a| + REGION_MARGIN <= |x| <= 1 - REGION_MARGIN``.
    """
    ctx = ctx or default_context()
    alpha = as_fraction(alpha)
    a, b, q, x = (ctx.num(v) for v in (a, b, q, x))
    check_nome(q, ctx)
    if x == 0:
        raise DomainError("bilateral sum requires x != 0")
    if alpha == 0:
        if a == 0:
            raise DomainError("alpha=0 bilateral sum requires a != 0")
        lo = abs(b / a) + REGION_MARGIN
        if not (lo <= abs(x) <= 1 - REGION_MARGIN):
            raise DomainError(
                f"alpha=0 bilateral sum requires |b/a| < |x| < 1 with margin {REGION_MARGIN}: "
                f"|b/a|={ctx.mp.nstr(abs(b / a), 6)}, |x|={ctx.mp.nstr(abs(x), 6)}"
            )
    upper, lower = bilateral_B_terms(alpha, a, b, q, x, ctx)
    return sum_two_sided(upper, lower, ctx)


def eval_1psi1(a, b, q, z, ctx: PrecisionContext | None = None) -> SeriesValue:
    """``sum_{n in Z} (a;q)_n / (b;q)_n z^n`` in ``|b/a| < |z| < 1``."""
    return eval_B(0, a, b, q, z, ctx)


def psi11_product(a, b, q, z, ctx: PrecisionContext | None = None) -> SeriesValue:
    """Closed product ``(q, b/a, az, q/(az); q)_inf / (b, q/a, z, b/(az); q)_inf``."""
    ctx = ctx or default_context()
    a, b, q, z = (ctx.num(v) for v in (a, b, q, z))
    return poch_ratio([q, b / a, a * z, q / (a * z)], [b, q / a, z, b / (a * z)], q, ctx)


def F_terms(a, c, q, z, ctx: PrecisionContext) -> Iterator:
    """Summands ``(a;q)_k (-1)^k q^(k(k-1)/2) z^k / ((q;q)_k (c;q)_k)``."""
    a, c, q, z = (ctx.num(v) for v in (a, c, q, z))
    one = ctx.mp.mpc(1)
    ratio, qk, power = one, one, one
    k = 0
    while True:
        yield ratio * power * q_triangular_power(q, k)
        ratio *= (one - a * qk) / (_guard(one - c * qk, ctx, "(c;q)_k", k) * (one - qk * q))
        power *= -z
        qk *= q
        k += 1


def eval_F(a, c, q, z, ctx: PrecisionContext | None = None) -> SeriesValue:
    """``F(a, c; z) = sum_k (a;q)_k (-1)^k q^(k(k-1)/2) z^k / (q, c; q)_k``; entire in z."""
    ctx = ctx or default_context()
    q = ctx.num(q)
    check_nome(q, ctx)
    return sum_terms(F_terms(a, c, q, z, ctx), ctx, label="F")


def ramanujan_A(z, q, ctx: PrecisionContext | None = None, variant: str = "quadratic") -> SeriesValue:
    """Ramanujan's function ``A_q(z)``.

    ``variant="quadratic"`` is ``sum q^(n^2) (-z)^n / (q;q)_n``, the
    specialisation ``A_q^(1)(0; -z)`` under which the Rogers-Ramanujan
    products are ``A_q(-1)`` and ``A_q(-q)``.  ``variant="linear"`` is the
    same sum with ``q^n`` in place of ``q^(n^2)``, kept for comparison.
    """
    ctx = ctx or default_context()
    z, q = ctx.num(z), ctx.num(q)
    if variant == "quadratic":
        return eval_A(1, 0, q, -z, ctx)
    if variant == "linear":
        return eval_A(0, 0, q, -q * z, ctx)
    raise ValueError(f"unknown variant {variant!r}")
