"""q-shifted factorials: finite (any integer index), infinite and multi-base.

Negative indices follow the convention that keeps the bilateral sums
consistent::

    (a; q)_{-m} = 1 / (a q^{-m}; q)_m

Infinite products are truncated at the first ``N`` with ``|a||q|^N <= 1/2``
and ``|a||q|^N / (1 - |q|)`` below half the truncation threshold.  Since
``|log prod_{j>=N} (1 - a q^j)| <= sum_{j>=N} 2|a||q|^j`` once every
``|a q^j| <= 1/2``, the reported tail bound is
``2 |a||q|^N / (1 - |q|) * |partial product|``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

from .kernel import DomainError, PoleError, PrecisionContext, default_context

__all__ = [
    "MAX_NOME",
    "SeriesValue",
    "check_nome",
    "poch_finite",
    "poch_infinite",
    "poch_multi",
    "poch_ratio",
    "ratio_table",
]

# |q| is kept this far inside the unit disc.
MAX_NOME = 0.999


@dataclass(frozen=True)
class SeriesValue:
    """A computed sum or product together with its truncation bookkeeping."""

    value: object
    abs_error_estimate: object
    terms_used: int
    converged: bool = True
    diagnostics: str = ""
    # largest intermediate magnitude seen while forming the value; the gap
    # between peak and |value| is the precision lost to cancellation
    peak: object = None

    def __post_init__(self):
        if self.peak is None:
            object.__setattr__(self, "peak", abs(self.value))

    @classmethod
    def exact(cls, value, terms_used: int = 0, peak=None) -> "SeriesValue":
        return cls(value, abs(value) * 0, terms_used, True, "", peak)

    def _combine(self, other, value, error, peak) -> "SeriesValue":
        notes = "; ".join(d for d in (self.diagnostics, other.diagnostics) if d)
        return SeriesValue(
            value,
            error,
            self.terms_used + other.terms_used,
            self.converged and other.converged,
            notes,
            max(peak, abs(value)),
        )

    def _scaled(self, value, error, factor) -> "SeriesValue":
        return SeriesValue(value, error, self.terms_used, self.converged,
                           self.diagnostics, self.peak * factor)

    def __mul__(self, other):
        if not isinstance(other, SeriesValue):
            return self._scaled(self.value * other, self.abs_error_estimate * abs(other), abs(other))
        err = (abs(self.value) * other.abs_error_estimate
               + abs(other.value) * self.abs_error_estimate
               + self.abs_error_estimate * other.abs_error_estimate)
        peak = max(self.peak * abs(other.value), other.peak * abs(self.value))
        return self._combine(other, self.value * other.value, err, peak)

    __rmul__ = __mul__

    def __truediv__(self, other):
        if not isinstance(other, SeriesValue):
            return self * (1 / other)
        denom = abs(other.value)
        rel = other.abs_error_estimate / denom
        value = self.value / other.value
        err = self.abs_error_estimate / denom + abs(value) * rel / (1 - min(rel, 0.5))
        peak = max(self.peak / denom, other.peak * abs(value) / denom)
        return self._combine(other, value, err, peak)

    def __add__(self, other):
        if not isinstance(other, SeriesValue):
            other = SeriesValue.exact(self.value * 0 + other)
        return self._combine(other, self.value + other.value,
                             self.abs_error_estimate + other.abs_error_estimate,
                             max(self.peak, other.peak))

    __radd__ = __add__

    def __neg__(self):
        return SeriesValue(-self.value, self.abs_error_estimate, self.terms_used,
                           self.converged, self.diagnostics, self.peak)

    def __sub__(self, other):
        return self + (-other)

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise TypeError("SeriesValue powers take a nonnegative integer")
        result = SeriesValue.exact(self.value ** 0)
        for _ in range(n):
            result = result * self
        return result


def check_nome(q, ctx: PrecisionContext) -> None:
    if not abs(q) <= MAX_NOME:
        raise DomainError(f"|q| must not exceed {MAX_NOME}, got |q|={ctx.mp.nstr(abs(q), 8)}")


def _guarded(factor, ctx: PrecisionContext, where: str, index: int):
    mag = abs(factor)
    if mag < ctx.pole_guard:
        raise PoleError(where, index, mag)
    return factor


def poch_finite(a, q, n: int, ctx: PrecisionContext | None = None):
    """``(a; q)_n`` for any integer ``n``.

    For ``n < 0`` the factors ``1 - a q^{-j}``, ``j = 1..|n|``, are divided
    out; one of them within ``pole_guard`` of zero raises :class:`PoleError`.
    """
    ctx = ctx or default_context()
    a, q = ctx.num(a), ctx.num(q)
    check_nome(q, ctx)
    one = ctx.mp.mpc(1)
    if n >= 0:
        result = one
        qj = one
        for _ in range(n):
            result *= one - a * qj
            qj *= q
        return result
    denom = one
    qj = one
    for j in range(1, -n + 1):
        qj *= q
        denom *= _guarded(one - a / qj, ctx, "(a;q)_n with n<0", j)
    return one / denom


def poch_infinite(a, q, ctx: PrecisionContext | None = None, *, guard: bool = False) -> SeriesValue:
    """``(a; q)_inf`` truncated by the tail rule in the module docstring.

    With ``guard=True`` (used when the product is a denominator) a factor
    within ``pole_guard`` of zero raises :class:`PoleError`.
    """
    ctx = ctx or default_context()
    mp = ctx.mp
    a, q = ctx.num(a), ctx.num(q)
    check_nome(q, ctx)
    abs_a, abs_q = abs(a), abs(q)
    if abs_a == 0:
        return SeriesValue(mp.mpc(1), mp.mpf(0), 0, True)
    half_target = ctx.stop_eps / 2
    inv_gap = 1 / (1 - abs_q)
    result = mp.mpc(1)
    qj = mp.mpc(1)
    tail = abs_a
    for n in range(ctx.max_terms + 1):
        if tail <= 0.5 and tail * inv_gap <= half_target:
            bound = 2 * tail * inv_gap * abs(result)
            return SeriesValue(result, bound, n, True)
        if n == ctx.max_terms:
            break
        factor = 1 - a * qj
        if guard:
            _guarded(factor, ctx, "(a;q)_inf", n)
        result *= factor
        qj *= q
        tail *= abs_q
    bound = 2 * tail * inv_gap * abs(result)
    return SeriesValue(result, bound, ctx.max_terms, False,
                       f"(a;q)_inf not converged within max_terms={ctx.max_terms}")


def poch_multi(bases: Sequence, q, n: int | float | None, ctx: PrecisionContext | None = None,
               *, guard: bool = False):
    """``(b1, b2, ...; q)_n``: the product of the individual symbols.

    ``n`` may be an integer (the result is a plain number) or ``None`` /
    ``math.inf`` (the result is a :class:`SeriesValue` whose error estimate
    accumulates the per-symbol tail bounds).
    """
    ctx = ctx or default_context()
    if n is None or n == math.inf:
        result = SeriesValue.exact(ctx.mp.mpc(1))
        for b in bases:
            result = result * poch_infinite(b, q, ctx, guard=guard)
        return result
    result = ctx.mp.mpc(1)
    for b in bases:
        result *= poch_finite(b, q, int(n), ctx)
    return result


def poch_ratio(numer: Iterable, denom: Iterable, q, ctx: PrecisionContext | None = None) -> SeriesValue:
    """``(numer...; q)_inf / (denom...; q)_inf`` with pole checks on the denominator."""
    ctx = ctx or default_context()
    top = poch_multi(list(numer), q, None, ctx)
    bottom = poch_multi(list(denom), q, None, ctx, guard=True)
    return top / bottom


def ratio_table(a, b, q, lo: int, hi: int, ctx: PrecisionContext | None = None) -> dict:
    """``{k: (a;q)_k / (b;q)_k}`` for ``lo <= k <= hi``, built by recurrence from ``k = 0``.

    Denominator factors are pole-checked: ``1 - b q^k`` for ``k >= 0`` and
    ``1 - a q^{-j}`` on the negative side.
    """
    ctx = ctx or default_context()
    a, b, q = ctx.num(a), ctx.num(b), ctx.num(q)
    check_nome(q, ctx)
    one = ctx.mp.mpc(1)
    table = {}
    if lo <= 0 <= hi:
        table[0] = one
    value, qk = one, one
    for k in range(0, hi):
        value *= (one - a * qk) / _guarded(one - b * qk, ctx, "(b;q)_k", k)
        qk *= q
        if k + 1 >= lo:
            table[k + 1] = value
    value, qk = one, one
    for m in range(1, -lo + 1):
        qk *= q
        value *= (one - b / qk) / _guarded(one - a / qk, ctx, "(a;q)_k with k<0", m)
        if -m <= hi:
            table[-m] = value
    return table
