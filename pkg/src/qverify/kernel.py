"""Precision contexts, roots of unity and exact-exponent powers of q.

Every evaluator in the package computes on an :class:`mpmath.MPContext`
owned by a :class:`PrecisionContext`.  Contexts are frozen, so one context
can be shared freely between concurrent evaluations.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import mpmath

__all__ = [
    "DEFAULT_PRECISION_BITS",
    "DEFAULT_TOLERANCE_DIGITS",
    "DEFAULT_MAX_TERMS",
    "DEFAULT_MAX_WINDOW",
    "GUARD_DIGITS",
    "QSeriesError",
    "DomainError",
    "PoleError",
    "PrecisionContext",
    "RootOfUnity",
    "QPowers",
    "make_context",
    "default_context",
    "parse_complex",
    "root_of_unity",
    "q_power",
    "q_triangular_power",
    "as_fraction",
]

DEFAULT_PRECISION_BITS = 200
DEFAULT_TOLERANCE_DIGITS = 30
DEFAULT_MAX_TERMS = 10000
DEFAULT_MAX_WINDOW = 200

# Extra decimal digits demanded of every truncation beyond tolerance_digits.
GUARD_DIGITS = 5

# Bits kept free between the working precision and the tolerance.
_PRECISION_MARGIN_BITS = 32
_LOG2_10 = math.log2(10)


class QSeriesError(Exception):
    """Base class for evaluation errors raised by this package."""


class DomainError(QSeriesError, ValueError):
    """A parameter lies outside the region where an evaluator is defined."""


class PoleError(QSeriesError, ZeroDivisionError):
    """A denominator factor came within ``pole_guard`` of zero.

    ``index`` names the offending factor (the ``j`` in ``1 - a q^j``) and
    ``where`` the symbol being evaluated.
    """

    def __init__(self, where: str, index: int, magnitude):
        self.where = where
        self.index = index
        self.magnitude = magnitude
        super().__init__(
            f"pole in {where}: factor j={index} has magnitude "
            f"{mpmath.nstr(magnitude, 5)} below pole_guard"
        )


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision, tolerance and truncation caps for one evaluation.

    Attributes:
        precision_bits: mantissa size of every intermediate quantity.
        tolerance_digits: decimal digits demanded for identity agreement.
        max_terms: cap on the number of terms of any one-sided sum.
        max_window: cap on the per-index window of bilateral multi-sums.
        pole_guard: smallest denominator magnitude accepted before a
            :class:`PoleError` is raised.
    """

    precision_bits: int = DEFAULT_PRECISION_BITS
    tolerance_digits: int = DEFAULT_TOLERANCE_DIGITS
    max_terms: int = DEFAULT_MAX_TERMS
    max_window: int = DEFAULT_MAX_WINDOW
    pole_guard: float | None = None
    mp: mpmath.ctx_mp.MPContext = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.precision_bits, int) or self.precision_bits < 64:
            raise ValueError(f"precision_bits must be an integer >= 64, got {self.precision_bits!r}")
        if not isinstance(self.tolerance_digits, int) or self.tolerance_digits < 1:
            raise ValueError(f"tolerance_digits must be a positive integer, got {self.tolerance_digits!r}")
        if self.tolerance_digits * _LOG2_10 > self.precision_bits - _PRECISION_MARGIN_BITS:
            raise ValueError(
                f"tolerance of {self.tolerance_digits} digits needs at least "
                f"{math.ceil(self.tolerance_digits * _LOG2_10) + _PRECISION_MARGIN_BITS} "
                f"precision bits, got {self.precision_bits}"
            )
        if self.max_terms < 16:
            raise ValueError(f"max_terms must be >= 16, got {self.max_terms}")
        if self.max_window < 8:
            raise ValueError(f"max_window must be >= 8, got {self.max_window}")
        if self.pole_guard is None:
            object.__setattr__(self, "pole_guard", 10.0 ** (-(self.precision_bits // 8)))
        elif not self.pole_guard > 0:
            raise ValueError(f"pole_guard must be positive, got {self.pole_guard}")
        mp = mpmath.MPContext()
        mp.prec = self.precision_bits
        object.__setattr__(self, "mp", mp)

    @property
    def eps(self):
        """``10**-tolerance_digits`` as a working-precision real."""
        return self.mp.mpf(10) ** (-self.tolerance_digits)

    @property
    def stop_eps(self):
        """Threshold for truncating sums and products (tolerance plus guard digits)."""
        return self.mp.mpf(10) ** (-(self.tolerance_digits + GUARD_DIGITS))

    @property
    def decimal_digits(self) -> int:
        """Digits needed to write a working-precision number so that it round-trips."""
        return int(math.ceil(self.precision_bits * math.log10(2))) + 2

    def num(self, value):
        """Convert ``value`` to a complex number of this context.

        Strings are parsed by :func:`parse_complex`, so ``"0.3"`` means the
        decimal 0.3 rounded once to working precision, not the binary float.
        """
        if isinstance(value, str):
            re_part, im_part = parse_complex(value)
            return self.mp.mpc(re_part, im_part)
        if isinstance(value, Fraction):
            return self.mp.mpc(self.mp.mpf(value.numerator) / value.denominator)
        return self.mp.mpc(value)

    def real(self, value):
        """Convert ``value`` to a real number of this context."""
        if isinstance(value, str):
            re_part, im_part = parse_complex(value)
            if self.mp.mpf(im_part) != 0:
                raise DomainError(f"expected a real number, got {value!r}")
            return self.mp.mpf(re_part)
        if isinstance(value, Fraction):
            return self.mp.mpf(value.numerator) / value.denominator
        z = self.mp.mpc(value)
        if z.imag != 0:
            raise DomainError(f"expected a real number, got {value!r}")
        return z.real

    def with_precision(self, precision_bits: int) -> "PrecisionContext":
        """Same caps and tolerance at a different working precision."""
        return PrecisionContext(
            precision_bits=precision_bits,
            tolerance_digits=self.tolerance_digits,
            max_terms=self.max_terms,
            max_window=self.max_window,
        )

    def describe(self) -> dict:
        return {
            "precision_bits": self.precision_bits,
            "tolerance_digits": self.tolerance_digits,
            "max_terms": self.max_terms,
            "max_window": self.max_window,
            "pole_guard": repr(self.pole_guard),
        }


def make_context(
    precision_bits: int = DEFAULT_PRECISION_BITS,
    tolerance_digits: int = DEFAULT_TOLERANCE_DIGITS,
    max_terms: int = DEFAULT_MAX_TERMS,
    max_window: int = DEFAULT_MAX_WINDOW,
    pole_guard: float | None = None,
) -> PrecisionContext:
    """Build a validated :class:`PrecisionContext`.

    Raises:
        ValueError: if ``precision_bits < 64``, the tolerance does not leave
            32 bits of headroom below the precision, or a cap is too small.
    """
    return PrecisionContext(precision_bits, tolerance_digits, max_terms, max_window, pole_guard)


@lru_cache(maxsize=None)
def default_context() -> PrecisionContext:
    return PrecisionContext()


_REAL_RE = re.compile(r"^[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?$")


def parse_complex(text: str) -> tuple[str, str]:
    """Split ``"re"``, ``"re+imi"``, ``"imi"`` or ``"-i"`` into decimal strings.

    >>> parse_complex("0.3-0.25i")
    ('0.3', '-0.25')
    >>> parse_complex("2i")
    ('0', '2')
    """
    s = text.strip().replace(" ", "")
    if not s.endswith(("i", "j")):
        if not _REAL_RE.match(s):
            raise ValueError(f"cannot parse {text!r} as a complex number")
        return s, "0"
    body = s[:-1]
    split = 0
    for pos in range(len(body) - 1, 0, -1):
        if body[pos] in "+-" and body[pos - 1] not in "eE":
            split = pos
            break
    re_part, im_part = (body[:split], body[split:]) if split else ("0", body)
    if im_part in ("", "+", "-"):
        im_part = im_part + "1"
    if not _REAL_RE.match(re_part) or not _REAL_RE.match(im_part):
        raise ValueError(f"cannot parse {text!r} as a complex number")
    return re_part, im_part.lstrip("+")


def as_fraction(alpha) -> Fraction:
    """Exponent weights are exact rationals; strings such as ``"1/2"`` are accepted."""
    if isinstance(alpha, Fraction):
        return alpha
    if isinstance(alpha, float):
        return Fraction(alpha).limit_denominator(1000)
    return Fraction(alpha)


@dataclass(frozen=True)
class RootOfUnity:
    r: int
    i: int
    value: mpmath.mpc


@lru_cache(maxsize=4096)
def _root_parts(r: int, i: int, precision_bits: int):
    mp = mpmath.MPContext()
    mp.prec = precision_bits + 16
    x = mp.mpf(2 * i) / r
    return mp.cospi(x), mp.sinpi(x)


def root_of_unity(r: int, i: int, ctx: PrecisionContext | None = None) -> RootOfUnity:
    """``exp(2*pi*1j*i/r)`` computed directly from the exponent, never by powering.

    The exponent is reduced mod ``r`` first, so ``root_of_unity(r, i)`` and
    ``root_of_unity(r, i + r)`` are bit-identical.
    """
    if not isinstance(r, int) or r < 1:
        raise ValueError(f"order r must be a positive integer, got {r!r}")
    ctx = ctx or default_context()
    j = i % r
    re_part, im_part = _root_parts(r, j, ctx.precision_bits)
    return RootOfUnity(r=r, i=j, value=ctx.mp.mpc(re_part, im_part))


def q_power(q, exponent: int):
    """``q**exponent`` by binary powering on an unbounded integer exponent."""
    if not isinstance(exponent, int):
        raise TypeError("q_power takes an integer exponent")
    return q ** exponent


def q_triangular_power(q, k: int):
    """``q**(k*(k-1)//2)``; the exponent stays a Python integer however large ``k`` gets."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return q ** (k * (k - 1) // 2)


class QPowers:
    """Powers ``q**(alpha*m)`` for a fixed rational ``alpha`` and integer ``m``.

    Integral exponents use exact integer powering.  A fractional ``alpha``
    with denominator ``d`` is evaluated through the principal root
    ``q**(1/d)``, which is only unambiguous for real ``0 < q < 1``.
    """

    MAX_DENOMINATOR = 12

    def __init__(self, q, alpha, ctx: PrecisionContext):
        self.alpha = as_fraction(alpha)
        if self.alpha < 0:
            raise DomainError(f"alpha must be nonnegative, got {self.alpha}")
        d = self.alpha.denominator
        if d > self.MAX_DENOMINATOR:
            raise DomainError(f"alpha denominator {d} exceeds {self.MAX_DENOMINATOR}")
        self.q = ctx.num(q)
        if d == 1:
            self.root = self.q
        else:
            if self.q.imag != 0 or not (0 < self.q.real < 1):
                raise DomainError(f"fractional alpha={self.alpha} requires real 0 < q < 1")
            self.root = ctx.mp.mpc(ctx.mp.root(self.q.real, d))
        self.denominator = d
        self.numerator = self.alpha.numerator

    def power(self, m: int):
        """``q**(alpha*m)``."""
        return self.root ** (self.numerator * m)

    def square_weight(self, n: int):
        """``q**(alpha*n*n)``."""
        return self.root ** (self.numerator * n * n)

    def rational(self, e: Fraction):
        """``q**e`` for a rational ``e`` whose denominator divides ``alpha``'s."""
        e = Fraction(e)
        scaled = e * self.denominator
        if scaled.denominator != 1:
            raise DomainError(f"exponent {e} not representable with root of order {self.denominator}")
        return self.root ** int(scaled)
