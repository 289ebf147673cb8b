"""Roots-of-unity multisection sums and the multi-sum expansions built on them.

Notation used throughout: ``c_k`` is a coefficient sequence (a ratio of
q-shifted factorials), ``zeta = exp(2 pi i / r)`` and a *shell* is the set of
index tuples with a fixed total ``s = k_1 + ... + k_m``.  Shell sums

    S(s) = sum_{k_1+...+k_m = s} prod_i c_{k_i} zeta^(i k_i)

are phased convolutions and are computed exactly over the index window, with
one rounding per output coefficient (``fdot``).

Bilateral windows are chosen in the log domain: the largest term magnitude
on the boundary shell ``max |k_i| = K`` is bounded by a max-plus
convolution of ``log|c_k|`` and compared against ``10**-(tolerance+10)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from .kernel import (
    DomainError,
    PoleError,
    PrecisionContext,
    QPowers,
    as_fraction,
    default_context,
    root_of_unity,
)
from .pochhammer import SeriesValue, check_nome, poch_finite, poch_ratio, ratio_table
from .series import eval_A, eval_B, sum_two_sided

__all__ = [
    "Composition",
    "WINDOW_EXTRA_DIGITS",
    "E2_PHASES",
    "compositions_nonneg",
    "compositions_windowed",
    "phase_exponent",
    "multisum_u1",
    "u1_rhs",
    "multisum_b1",
    "b1_prefactor",
    "b1_rhs",
    "choose_window",
    "product_multisection",
    "eval_e1_rhs",
    "eval_e2_rhs",
    "t12r_prefactor",
    "eval_12r_rhs",
    "c15r_prefactor",
    "eval_15r_lhs",
    "eval_15r_rhs",
    "eval_15r_both",
    "coefficient_oracle",
]

# Boundary-shell terms must fall this many digits below the tolerance.
WINDOW_EXTRA_DIGITS = 10
_MIN_WINDOW = 8

E2_PHASES = ("r-1", "r")


@dataclass(frozen=True)
class Composition:
    parts: tuple[int, ...]

    @property
    def total(self) -> int:
        return sum(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __len__(self):
        return len(self.parts)


def compositions_nonneg(r: int, n: int) -> list[Composition]:
    """All nonnegative ``r``-tuples summing to ``n`` in lexicographic order."""
    if r < 1:
        raise ValueError("r must be >= 1")
    if n < 0:
        return []

    def build(slots: int, remaining: int) -> Iterator[tuple[int, ...]]:
        if slots == 1:
            yield (remaining,)
            return
        for first in range(remaining + 1):
            for rest in build(slots - 1, remaining - first):
                yield (first,) + rest

    return [Composition(p) for p in build(r, n)]


def compositions_windowed(r: int, n: int, K: int) -> list[Composition]:
    """All integer ``r``-tuples with ``|k_i| <= K`` summing to ``n``, lexicographic."""
    if r < 1 or K < 0:
        raise ValueError("need r >= 1 and K >= 0")
    if abs(n) > r * K:
        return []

    def build(slots: int, remaining: int) -> Iterator[tuple[int, ...]]:
        if slots == 1:
            if -K <= remaining <= K:
                yield (remaining,)
            return
        span = (slots - 1) * K
        for first in range(max(-K, remaining - span), min(K, remaining + span) + 1):
            for rest in build(slots - 1, remaining - first):
                yield (first,) + rest

    return [Composition(p) for p in build(r, n)]


def phase_exponent(parts: Sequence[int], r: int, start: int = 1) -> int:
    """``sum_i i k_i mod r`` with the coordinates numbered from ``start``."""
    return sum((start + idx) * k for idx, k in enumerate(parts)) % r


def _check_r(r: int) -> None:
    if not isinstance(r, int) or r < 2:
        raise DomainError(f"multisection order r must be an integer >= 2, got {r!r}")


def _phases(r: int, ctx: PrecisionContext) -> list:
    return [root_of_unity(r, j, ctx).value for j in range(r)]


# ---------------------------------------------------------------------------
# exact finite multisection


def multisum_u1(a, q, r: int, n: int, ctx: PrecisionContext | None = None):
    """Finite sum over nonnegative compositions of ``n`` into ``r`` parts of
    ``prod (a;q)_{k_i} / (q;q)_{k_i} * zeta_r^(sum i k_i)``.

    Enumerates the compositions directly; there is no truncation.
    """
    ctx = ctx or default_context()
    _check_r(r)
    a, q = ctx.num(a), ctx.num(q)
    if n < 0:
        return ctx.mp.mpc(0)
    c = ratio_table(a, q, q, 0, n, ctx)
    zeta = _phases(r, ctx)
    terms = []
    for comp in compositions_nonneg(r, n):
        term = zeta[phase_exponent(comp.parts, r)]
        for k in comp.parts:
            term *= c[k]
        terms.append(term)
    return ctx.mp.fsum(terms)


def u1_rhs(a, q, r: int, n: int, ctx: PrecisionContext | None = None):
    """``0`` unless ``r | n``; otherwise ``(a^r; q^r)_m / (q^r; q^r)_m`` with ``n = r m``."""
    ctx = ctx or default_context()
    a, q = ctx.num(a), ctx.num(q)
    if n % r:
        return ctx.mp.mpc(0)
    m = n // r
    return poch_finite(a ** r, q ** r, m, ctx) / poch_finite(q ** r, q ** r, m, ctx)


def coefficient_oracle(a, q, r: int, N: int, ctx: PrecisionContext | None = None,
                       b=None) -> list[tuple]:
    """Coefficients of ``x^n``, ``n = 0..N``, of
    ``prod_{i=0}^{r-1} sum_k (a;q)_k/(q;q)_k (zeta_r^i x)^k`` by truncated
    polynomial multiplication, each paired with the claimed closed form
    (``0`` for ``r`` not dividing ``n``).

    Only the unilateral product is supported; ``b`` must be ``None``.
    """
    ctx = ctx or default_context()
    if b is not None:
        raise DomainError("the coefficient oracle covers the unilateral product only")
    _check_r(r)
    if not 0 <= N <= 64:
        raise DomainError("oracle degree N must lie in 0..64")
    mp = ctx.mp
    a, q = ctx.num(a), ctx.num(q)
    c = ratio_table(a, q, q, 0, N, ctx)
    product = [mp.mpc(1)] + [mp.mpc(0)] * N
    for i in range(r):
        zeta_i = root_of_unity(r, i, ctx).value
        factor = [c[k] * zeta_i ** k for k in range(N + 1)]
        product = [
            mp.fdot((product[j], factor[n - j]) for j in range(n + 1))
            for n in range(N + 1)
        ]
    return [(product[n], u1_rhs(a, q, r, n, ctx)) for n in range(N + 1)]


def product_multisection(a, q, t, r: int, ctx: PrecisionContext | None = None) -> tuple[SeriesValue, SeriesValue]:
    """Both sides of ``prod_i (a zeta^i t; q)_inf / (zeta^i t; q)_inf
    = (a^r t^r; q^r)_inf / (t^r; q^r)_inf``."""
    ctx = ctx or default_context()
    _check_r(r)
    a, q, t = (ctx.num(v) for v in (a, q, t))
    lhs = SeriesValue.exact(ctx.mp.mpc(1))
    for i in range(r):
        z = root_of_unity(r, i, ctx).value * t
        lhs = lhs * poch_ratio([a * z], [z], q, ctx)
    rhs = poch_ratio([(a * t) ** r], [t ** r], q ** r, ctx)
    return lhs, rhs


# ---------------------------------------------------------------------------
# windows and phased convolutions


def _log_abs(values) -> np.ndarray:
    out = np.empty(len(values))
    for idx, v in enumerate(values):
        mag = abs(v)
        out[idx] = float(mpmath_log(mag)) if mag != 0 else -np.inf
    return out


def mpmath_log(mag):
    # float(mag) would underflow to 0 long before the window logic cares
    return mag.context.log(mag)


def _maxplus(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    out = np.full(len(u) + len(v) - 1, -np.inf)
    for i, ui in enumerate(u):
        if ui == -np.inf:
            continue
        seg = out[i:i + len(v)]
        np.maximum(seg, ui + v, out=seg)
    return out


def _shell_log_bound(logc: np.ndarray, offset: int, parts: int, K: int,
                     weight: Callable[[np.ndarray], np.ndarray]) -> float:
    """Log of the largest term on the boundary shell of the ``parts``-fold window ``[-K, K]``.

    ``logc[offset + k] = log|c_k|``; ``weight(s)`` is the log-weight attached to shell ``s``.
    """
    window = logc[offset - K: offset + K + 1]
    rest = np.zeros(1)
    for _ in range(parts - 1):
        rest = _maxplus(rest, window)
    rest_lo = -(parts - 1) * K
    total_lo = -parts * K
    shell = np.full(2 * parts * K + 1, -np.inf)
    for edge in (-K, K):
        start = edge + rest_lo - total_lo
        seg = shell[start:start + len(rest)]
        np.maximum(seg, logc[offset + edge] + rest, out=seg)
    s = np.arange(total_lo, -total_lo + 1)
    with np.errstate(invalid="ignore"):
        bound = shell + weight(s)
    bound = bound[~np.isnan(bound)]
    return float(bound.max()) if bound.size else -np.inf


def choose_window(logc: np.ndarray, offset: int, parts: int,
                  weight: Callable[[np.ndarray], np.ndarray],
                  ctx: PrecisionContext) -> tuple[int, float]:
    """Smallest window ``K`` whose boundary-shell terms are all below
    ``10**-(tolerance_digits + WINDOW_EXTRA_DIGITS)``; capped at ``max_window``.

    Returns ``(K, log_bound)``; a bound above the threshold at the cap means
    the window did not converge.
    """
    threshold = -(ctx.tolerance_digits + WINDOW_EXTRA_DIGITS) * math.log(10)
    k_max = min(ctx.max_window, offset)
    lo, hi = _MIN_WINDOW, k_max
    bound_hi = _shell_log_bound(logc, offset, parts, hi, weight)
    if bound_hi >= threshold:
        return hi, bound_hi
    bound_lo = _shell_log_bound(logc, offset, parts, lo, weight)
    if bound_lo < threshold:
        return lo, bound_lo
    while hi - lo > 1:
        mid = (lo + hi) // 2
        b = _shell_log_bound(logc, offset, parts, mid, weight)
        if b < threshold:
            hi, bound_hi = mid, b
        else:
            lo = mid
    return hi, bound_hi


class _ShellSums:
    """Lazily evaluated phased convolution of ``len(phase_indices)`` windowed sequences.

    All but the last factor are convolved eagerly; the last is dotted in on
    demand, so only the shells actually visited cost anything.
    """

    def __init__(self, c: dict, K: int, phase_indices: Sequence[int], r: int,
                 ctx: PrecisionContext, nonneg: bool = False):
        self.ctx = ctx
        mp = ctx.mp
        zeta = _phases(r, ctx)
        lo = 0 if nonneg else -K
        self.lo, self.hi = lo, K
        seqs = [[c[k] * zeta[(i * k) % r] for k in range(lo, K + 1)] for i in phase_indices]
        head = [mp.mpc(1)]
        head_lo = 0
        for seq in seqs[:-1]:
            head = [
                mp.fdot((head[j], seq[n - j]) for j in range(max(0, n - len(seq) + 1), min(n, len(head) - 1) + 1))
                for n in range(len(head) + len(seq) - 1)
            ]
            head_lo += lo
        self.head, self.head_lo = head, head_lo
        self.last = seqs[-1]
        self.span = (head_lo + lo, head_lo + len(head) - 1 + K)
        self._cache: dict[int, object] = {}

    def __call__(self, s: int):
        if s in self._cache:
            return self._cache[s]
        lo_s, hi_s = self.span
        if not lo_s <= s <= hi_s:
            value = self.ctx.mp.mpc(0)
        else:
            pairs = []
            for k in range(self.lo, self.hi + 1):
                j = s - k - self.head_lo
                if 0 <= j < len(self.head):
                    pairs.append((self.head[j], self.last[k - self.lo]))
            value = self.ctx.mp.fdot(pairs) if pairs else self.ctx.mp.mpc(0)
        self._cache[s] = value
        return value


def _window_error(log_bound: float, K: int, parts: int, ctx: PrecisionContext):
    # every omitted term is below the shell bound and the omitted mass decays
    # at least geometrically beyond the shell; count one shell's worth of terms
    shell_count = max(1, 2 * parts * (2 * K + 1) ** (parts - 1))
    if log_bound == -np.inf:
        return ctx.mp.mpf(0)
    return ctx.mp.exp(ctx.mp.mpf(log_bound)) * shell_count


# ---------------------------------------------------------------------------
# bilateral multisection


def _bilateral_table(a, b, q, L: int, ctx: PrecisionContext):
    c = ratio_table(a, b, q, -L, L, ctx)
    logc = _log_abs([c[k] for k in range(-L, L + 1)])
    return c, logc


def multisum_b1(a, b, q, r: int, n: int, ctx: PrecisionContext | None = None,
                K: int | None = None) -> SeriesValue:
    """Windowed sum over integer compositions of ``n`` into ``r`` parts of
    ``prod (a;q)_{k_i} / (b;q)_{k_i} * zeta_r^(sum i k_i)``.

    ``K`` defaults to the smallest window whose boundary shell is negligible
    (see :func:`choose_window`).  An explicit ``K`` larger than
    ``max_window`` is rejected.
    """
    ctx = ctx or default_context()
    _check_r(r)
    a, b, q = (ctx.num(v) for v in (a, b, q))
    check_nome(q, ctx)
    L = ctx.max_window if K is None else K
    if L > ctx.max_window:
        raise DomainError(f"window K={K} exceeds max_window={ctx.max_window}")
    c, logc = _bilateral_table(a, b, q, L, ctx)

    def at_n(s):
        return np.where(s == n, 0.0, -np.inf)

    if K is None:
        K, log_bound = choose_window(logc, L, r, at_n, ctx)
    else:
        log_bound = _shell_log_bound(logc, L, r, K, at_n)
    shells = _ShellSums(c, K, range(1, r + 1), r, ctx)
    value = shells(n)
    err = _window_error(log_bound, K, r, ctx)
    converged = bool(err <= ctx.eps * max(1, abs(value)))
    count = len(compositions_windowed(r, n, K)) if r <= 2 else (2 * K + 1) ** (r - 1)
    note = "" if converged else f"boundary shell at K={K} not negligible"
    return SeriesValue(value, err, count, converged, note)


def b1_prefactor(a, b, q, r: int, ctx: PrecisionContext | None = None) -> SeriesValue:
    """``(q, b/a; q)^r (b^r, q^r a^-r; q^r) / ((b, q/a; q)^r (q^r, b^r a^-r; q^r))``, all infinite products."""
    ctx = ctx or default_context()
    a, b, q = (ctx.num(v) for v in (a, b, q))
    base = poch_ratio([q, b / a], [b, q / a], q, ctx) ** r
    qr = q ** r
    return base * poch_ratio([b ** r, qr / a ** r], [qr, b ** r / a ** r], qr, ctx)


def b1_rhs(a, b, q, r: int, n: int, ctx: PrecisionContext | None = None) -> SeriesValue:
    """``0`` unless ``r | n``; otherwise ``b1_prefactor * (a^r; q^r)_m / (b^r; q^r)_m``."""
    ctx = ctx or default_context()
    a, b, q = (ctx.num(v) for v in (a, b, q))
    if n % r:
        return SeriesValue.exact(ctx.mp.mpc(0))
    m = n // r
    qr = q ** r
    finite = poch_finite(a ** r, qr, m, ctx) / poch_finite(b ** r, qr, m, ctx)
    return b1_prefactor(a, b, q, r, ctx) * finite


# ---------------------------------------------------------------------------
# unilateral multi-sums


def _unilateral_expansion(alpha, a, q, t, r: int, ctx: PrecisionContext,
                          phase_indices: Sequence[int], inner_twist,
                          outer_cap: int | None) -> SeriesValue:
    alpha = as_fraction(alpha)
    if alpha == 0 and not abs(ctx.num(t)) <= 0.8:
        raise DomainError("alpha=0 expansion requires |t| <= 0.8")
    weights = QPowers(q, alpha, ctx)
    q = weights.q
    a, t = ctx.num(a), ctx.num(t)
    check_nome(q, ctx)
    cap = ctx.max_window if outer_cap is None else outer_cap
    c = ratio_table(a, q, q, 0, cap, ctx)
    shells = _ShellSums(c, cap, phase_indices, r, ctx, nonneg=True)
    mp = ctx.mp
    eps = ctx.stop_eps
    partial = SeriesValue.exact(mp.mpc(0))
    quiet = 0
    for s in range(cap + 1):
        shell = shells(s)
        if shell == 0:
            contribution = SeriesValue.exact(mp.mpc(0))
        else:
            inner = eval_A(alpha, a, q, inner_twist * weights.power(2 * s) * t, ctx)
            contribution = inner * (shell * weights.square_weight(s) * t ** s)
        partial = partial + contribution
        if abs(contribution.value) <= eps * (1 + abs(partial.value)):
            quiet += 1
            if quiet >= 2 and s >= 2:
                return SeriesValue(partial.value, partial.abs_error_estimate + abs(contribution.value),
                                   s + 1, partial.converged, partial.diagnostics, partial.peak)
        else:
            quiet = 0
    return SeriesValue(partial.value, partial.abs_error_estimate, cap + 1, False,
                       f"outer shells not negligible by outer_cap={cap}", partial.peak)


def eval_e1_rhs(alpha, a, q, t, r: int, ctx: PrecisionContext | None = None,
                outer_cap: int | None = None) -> SeriesValue:
    """(r-1)-fold expansion of ``A_{q^r}^{(r alpha)}(a^r; t^r)`` whose innermost
    coordinate is summed in closed form as ``A_q^(alpha)(a; q^(2 alpha s) t)``.

    Outer indices ``k_1..k_{r-1} >= 0`` carry phases ``zeta^(i k_i)``; the
    sum runs over shells of ``s = sum k_i`` until two consecutive shells are
    negligible.
    """
    ctx = ctx or default_context()
    _check_r(r)
    return _unilateral_expansion(alpha, a, q, t, r, ctx, range(1, r), ctx.mp.mpc(1), outer_cap)


def eval_e2_rhs(alpha, a, q, t, r: int, ctx: PrecisionContext | None = None,
                outer_cap: int | None = None, phase: str = "r-1") -> SeriesValue:
    """The companion expansion whose inner sum is over ``k_1``: outer indices
    ``k_2..k_r`` and inner ``A_q^(alpha)(a; zeta q^(2 alpha s) t)``.

    ``phase`` selects the outer phase exponent: ``"r-1"`` uses
    ``sum_{i=2}^{r-1} i k_i`` (``k_r`` unphased), ``"r"`` uses
    ``sum_{i=2}^{r} i k_i``.  Because ``zeta^(r k_r) = 1`` the two agree
    term by term.
    """
    ctx = ctx or default_context()
    _check_r(r)
    if phase not in E2_PHASES:
        raise ValueError(f"phase must be one of {E2_PHASES}, got {phase!r}")
    indices = list(range(2, r)) + ([r] if phase == "r" else [0])
    twist = root_of_unity(r, 1, ctx).value
    return _unilateral_expansion(alpha, a, q, t, r, ctx, indices, twist, outer_cap)


# ---------------------------------------------------------------------------
# bilateral multi-sums


def t12r_prefactor(a, b, q, r: int, ctx: PrecisionContext | None = None) -> SeriesValue:
    """``(b, q/a; q)^r (q^r, b^r a^-r; q^r) / ((q, b/a; q)^r (b^r, q^r a^-r; q^r))``."""
    ctx = ctx or default_context()
    a, b, q = (ctx.num(v) for v in (a, b, q))
    base = poch_ratio([b, q / a], [q, b / a], q, ctx) ** r
    qr = q ** r
    return base * poch_ratio([qr, b ** r / a ** r], [b ** r, qr / a ** r], qr, ctx)


def _quadratic_log_weight(alpha: Fraction, q, x):
    log_q = float(mpmath_log(abs(q)))
    log_x = float(mpmath_log(abs(x)))
    al = float(alpha)

    def weight(total):
        total = np.asarray(total, dtype=float)
        return al * total * total * log_q + total * log_x

    return weight


def eval_12r_rhs(alpha, a, b, q, x, r: int, ctx: PrecisionContext | None = None,
                 outer_cap: int | None = None, K: int | None = None,
                 inner: str = "table") -> SeriesValue:
    """Prefactor times the (r-1)-fold bilateral sum whose inner coordinate is
    ``B_q^(alpha)(a, b; x q^(2 alpha s))``.

    ``inner="table"`` evaluates each inner bilateral sum on the shared
    coefficient table as ``sum_n c_n q^(alpha (n+s)^2) x^(n+s)`` (which equals
    ``q^(alpha s^2) x^s B(...)``); ``inner="direct"`` calls :func:`eval_B`
    per shell.  Both see identical outer shells.
    """
    ctx = ctx or default_context()
    _check_r(r)
    alpha = as_fraction(alpha)
    if alpha <= 0:
        raise DomainError("the bilateral expansion requires alpha > 0")
    weights = QPowers(q, alpha, ctx)
    q = weights.q
    a, b, x = ctx.num(a), ctx.num(b), ctx.num(x)
    check_nome(q, ctx)
    if x == 0:
        raise DomainError("bilateral expansion requires x != 0")
    if a == 0:
        raise DomainError("bilateral expansion requires a != 0")
    if not abs(b / a) < 1:
        raise DomainError("bilateral expansion requires |b/a| < 1")
    prefactor = t12r_prefactor(a, b, q, r, ctx)

    mp = ctx.mp
    parts = r - 1
    W = ctx.max_window
    weight_of_total = _quadratic_log_weight(alpha, q, x)
    # inner index n runs where q^(alpha N^2) x^N matters, N = n + s
    n_span = _quadratic_span(alpha, q, x, ctx)
    L = parts * W + n_span + 1
    c = ratio_table(a, b, q, -L, L, ctx)
    logc = _log_abs([c[k] for k in range(-L, L + 1)])

    totals = np.arange(-n_span, n_span + 1)
    total_weight = weight_of_total(totals)

    def shell_weight(s):
        s = np.asarray(s)
        idx = L + (totals[None, :] - s[:, None])
        inside = (idx >= 0) & (idx < len(logc))
        vals = np.where(inside, logc[np.clip(idx, 0, len(logc) - 1)] + total_weight[None, :], -np.inf)
        return vals.max(axis=1)

    if K is None:
        K, log_bound = choose_window(logc, L, parts, shell_weight, ctx) if L >= W else (W, 0.0)
    else:
        log_bound = _shell_log_bound(logc, L, parts, K, shell_weight)
    shells = _ShellSums(c, K, range(1, r), r, ctx)
    cap = parts * K if outer_cap is None else min(outer_cap, parts * K)
    total_pow = {N: weights.square_weight(N) * x ** N for N in range(-n_span, n_span + 1)}

    def inner_table(s):
        pairs = [(c[N - s], total_pow[N]) for N in range(-n_span, n_span + 1) if -L <= N - s <= L]
        return SeriesValue(mp.fdot(pairs), mp.mpf(0), len(pairs), True)

    def inner_direct(s):
        value = eval_B(alpha, a, b, q, x * weights.power(2 * s), ctx)
        return value * (weights.square_weight(s) * x ** s)

    inner_fn = {"table": inner_table, "direct": inner_direct}[inner]
    eps = ctx.stop_eps
    partial = SeriesValue.exact(mp.mpc(0))
    quiet = 0
    level = 0
    for level in range(cap + 1):
        level_mag = mp.mpf(0)
        for s in ((0,) if level == 0 else (level, -level)):
            shell = shells(s)
            if shell == 0:
                continue
            contribution = inner_fn(s) * shell
            partial = partial + contribution
            level_mag += abs(contribution.value)
        if level_mag <= eps * (1 + abs(partial.value)):
            quiet += 1
            if quiet >= 2:
                break
        else:
            quiet = 0
    else:
        partial = SeriesValue(partial.value, partial.abs_error_estimate, partial.terms_used, False,
                              f"outer shells not negligible by outer_cap={cap}", partial.peak)
    err = partial.abs_error_estimate + _window_error(log_bound, K, parts, ctx)
    threshold = -(ctx.tolerance_digits + WINDOW_EXTRA_DIGITS) * math.log(10)
    window_ok = log_bound < threshold
    total = SeriesValue(partial.value, err, level + 1, partial.converged and window_ok,
                        partial.diagnostics or ("" if window_ok else f"boundary shell at K={K} not negligible"),
                        partial.peak)
    return prefactor * total


def _quadratic_span(alpha: Fraction, q, x, ctx: PrecisionContext) -> int:
    """Half-width of the index range where ``|q^(alpha N^2) x^N|`` exceeds the window threshold."""
    log_q = float(mpmath_log(abs(q)))
    log_x = float(mpmath_log(abs(x)))
    target = -(ctx.tolerance_digits + WINDOW_EXTRA_DIGITS + 5) * math.log(10)
    al = float(alpha)
    # al*N^2*log_q + |N|*|log_x| >= target
    A, B = -al * log_q, abs(log_x)
    N = (B + math.sqrt(B * B - 4 * A * target)) / (2 * A)
    return int(math.ceil(N)) + 1


def c15r_prefactor(a, q, r: int, ctx: PrecisionContext | None = None, variant: str = "derived") -> SeriesValue:
    """Prefactor of the bilateral Rogers-Ramanujan type family.

    ``variant="derived"`` is ``(q^r; q^r)^2 (a, q/a; q)^r / ((q; q)^(2r) (a^r, q^r a^-r; q^r))``,
    what the ``b = aq``, ``alpha = 1`` case of the bilateral expansion
    produces.  ``variant="single"`` has ``(q^r; q^r) / (q; q)^r`` in place of
    the squared ratio.
    """
    ctx = ctx or default_context()
    a, q = ctx.num(a), ctx.num(q)
    qr = q ** r
    core = poch_ratio([a, q / a], [], q, ctx) ** r * poch_ratio([], [a ** r, qr / a ** r], qr, ctx)
    if variant == "derived":
        return core * _euler_ratio(q, r, ctx) ** 2
    if variant == "single":
        return core * _euler_ratio(q, r, ctx)
    raise ValueError(f"unknown prefactor variant {variant!r}")


def _euler_ratio(q, r: int, ctx: PrecisionContext) -> SeriesValue:
    """``(q^r; q^r)_inf / (q; q)_inf^r``."""
    return poch_ratio([q ** r], [], q ** r, ctx) / (poch_ratio([q], [], q, ctx) ** r)


def _check_15r_poles(a, q, r: int, K: int, ctx: PrecisionContext) -> None:
    for j in range(-K, K + 1):
        mag = abs(1 - a * q ** j)
        if mag < ctx.pole_guard:
            raise PoleError("1 - a q^k", j, mag)


def eval_15r_lhs(a, q, x, r: int, ctx: PrecisionContext | None = None) -> SeriesValue:
    """``sum_{n in Z} q^(r^2 n^2) x^(r n) / (1 - a^r q^(r n))``."""
    ctx = ctx or default_context()
    _check_r(r)
    a, q, x = (ctx.num(v) for v in (a, q, x))
    check_nome(q, ctx)
    if x == 0:
        raise DomainError("bilateral sum requires x != 0")
    ar, qr, xr = a ** r, q ** r, x ** r
    one = ctx.mp.mpc(1)

    def side(sign):
        n = 0 if sign > 0 else -1
        while True:
            denom = one - ar * qr ** n
            if abs(denom) < ctx.pole_guard:
                raise PoleError("1 - a^r q^(r n)", n, abs(denom))
            yield qr ** (r * n * n) * xr ** n / denom
            n += sign

    return sum_two_sided(side(1), side(-1), ctx)


def eval_15r_rhs(a, q, x, r: int, ctx: PrecisionContext | None = None,
                 K: int | None = None, variant: str = "derived") -> SeriesValue:
    """Prefactor times ``sum_{k_1..k_r in Z} zeta^(sum i k_i) q^(s^2) x^s / prod (1 - a q^{k_i})``, ``s = sum k_i``."""
    ctx = ctx or default_context()
    _check_r(r)
    a, q, x = (ctx.num(v) for v in (a, q, x))
    check_nome(q, ctx)
    if x == 0:
        raise DomainError("bilateral sum requires x != 0")
    W = ctx.max_window
    L = W if K is None else K
    if L > W:
        raise DomainError(f"window K={K} exceeds max_window={W}")
    _check_15r_poles(a, q, r, L, ctx)
    one = ctx.mp.mpc(1)
    c = {k: one / (one - a * q ** k) for k in range(-L, L + 1)}
    logc = _log_abs([c[k] for k in range(-L, L + 1)])
    weight = _quadratic_log_weight(Fraction(1), q, x)
    if K is None:
        K, log_bound = choose_window(logc, L, r, weight, ctx)
    else:
        log_bound = _shell_log_bound(logc, L, r, K, weight)
    shells = _ShellSums(c, K, range(1, r + 1), r, ctx)

    def terms(sign):
        s = 0 if sign > 0 else -1
        while abs(s) <= r * K:
            yield q ** (s * s) * x ** s * shells(s)
            s += sign
        while True:
            yield ctx.mp.mpc(0)

    total = sum_two_sided(terms(1), terms(-1), ctx)
    err = total.abs_error_estimate + _window_error(log_bound, K, r, ctx)
    threshold = -(ctx.tolerance_digits + WINDOW_EXTRA_DIGITS) * math.log(10)
    ok = log_bound < threshold
    total = SeriesValue(total.value, err, total.terms_used, total.converged and ok,
                        total.diagnostics or ("" if ok else f"boundary shell at K={K} not negligible"),
                        total.peak)
    return c15r_prefactor(a, q, r, ctx, variant) * total


def eval_15r_both(a, q, x, r: int, ctx: PrecisionContext | None = None,
                  K: int | None = None, variant: str = "derived") -> tuple[SeriesValue, SeriesValue]:
    """Independent evaluations of the single bilateral sum and the r-fold expansion."""
    ctx = ctx or default_context()
    a, q = ctx.num(a), ctx.num(q)
    _check_15r_poles(a, q, r, ctx.max_window if K is None else K, ctx)
    return eval_15r_lhs(a, q, x, r, ctx), eval_15r_rhs(a, q, x, r, ctx, K, variant)
