"""Executable registry of the identities: evaluators, domains and samplers.

Every entry maps a parameter record (a dict of decimal strings and small
integers) to a left and a right side.  Parameters are stored as text so a
record can be written into a report and re-read to exactly the same
working-precision numbers.
"""

from __future__ import annotations

import cmath
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

from .kernel import DomainError, PrecisionContext, as_fraction, default_context
from .multisection import (
    b1_rhs,
    eval_12r_rhs,
    eval_15r_lhs,
    eval_15r_rhs,
    eval_e1_rhs,
    eval_e2_rhs,
    multisum_b1,
    multisum_u1,
    product_multisection,
    u1_rhs,
)
from .pochhammer import MAX_NOME, SeriesValue, poch_finite, poch_ratio
from .series import REGION_MARGIN, eval_A, eval_B, eval_F, sum_terms

__all__ = [
    "IdentitySpec",
    "IdentityCase",
    "registry",
    "get_spec",
    "resolve_ids",
    "instantiate",
    "sample_params",
    "PRIMARY_IDS",
    "F4_VARIANTS",
    "f4_finite_side",
    "gaussian_series",
    "F7_prefactor",
    "F7_side",
]

# Samplers keep parameters this far from every excluded point.
SAMPLE_MARGIN = 0.05


@dataclass(frozen=True)
class IdentitySpec:
    id: str
    anchor: str
    params: tuple[str, ...]
    kind: str
    domain_summary: str
    lhs: Callable
    rhs: Callable
    domain: Callable
    sampler: Callable
    real_q: bool = False
    description: str = ""
    options: tuple[str, ...] = field(default=())

    def violations(self, params: dict, ctx: PrecisionContext) -> list[str]:
        missing = [p for p in self.params if p not in params]
        if missing:
            return [f"{self.id} is missing parameter(s) {', '.join(missing)}"]
        extra = sorted(set(params) - set(self.params))
        if extra:
            return [f"{self.id} does not take parameter(s) {', '.join(extra)}"]
        try:
            return list(self.domain(params, ctx))
        except (ValueError, TypeError) as exc:
            return [f"{self.id}: malformed parameters ({exc})"]

    def manifest(self) -> dict:
        return {
            "id": self.id,
            "anchor": self.anchor,
            "kind": self.kind,
            "params": list(self.params),
            "domain": self.domain_summary,
        }


@dataclass(frozen=True)
class IdentityCase:
    spec: IdentitySpec
    params: dict
    ctx: PrecisionContext
    index: int = 0

    @property
    def id(self) -> str:
        return self.spec.id


# ---------------------------------------------------------------------------
# parameter helpers


def _fmt_real(x: float) -> str:
    return f"{x:.12g}"


def _fmt_complex(z: complex) -> str:
    re_s, im_s = _fmt_real(z.real), _fmt_real(z.imag)
    if float(im_s) == 0:
        return re_s
    sign = "" if im_s.startswith("-") else "+"
    return f"{re_s}{sign}{im_s}i"


def _polar(rng: random.Random, lo: float, hi: float, real: bool = False) -> complex:
    mod = rng.uniform(lo, hi)
    if real:
        return mod
    return cmath.rect(mod, rng.uniform(-math.pi, math.pi))


def _nome(rng: random.Random, real: bool, lo: float = 0.1, hi: float = 0.7) -> str:
    if real:
        return _fmt_real(rng.uniform(lo, hi))
    return _fmt_complex(_polar(rng, lo, hi))


def _int(params: dict, key: str) -> int:
    value = params[key]
    if isinstance(value, bool):
        raise TypeError(f"{key} must be an integer")
    if isinstance(value, str):
        value = int(value)
    if not isinstance(value, int):
        raise TypeError(f"{key} must be an integer")
    return value


def _nums(params: dict, ctx: PrecisionContext, *keys):
    return tuple(ctx.num(params[k]) for k in keys)


def _nome_violation(q, ctx: PrecisionContext) -> list[str]:
    if not abs(q) <= MAX_NOME:
        return [f"requires |q| < 1 (|q| <= {MAX_NOME} accepted), got |q|={ctx.mp.nstr(abs(q), 6)}"]
    if q == 0:
        return ["requires q != 0"]
    return []


def _min_factor(base, q, lo: int = 0, hi: int | None = None) -> float:
    """``min |1 - base q^j|`` over ``lo <= j <= hi`` (``hi=None``: until ``|base q^j|`` is small)."""
    best = math.inf
    j = lo
    term = base * q ** lo
    while True:
        best = min(best, float(abs(1 - term)))
        j += 1
        if hi is not None and j > hi:
            return best
        if hi is None and abs(term) < 0.25:
            return best
        term *= q


def _near_q_power(x, q, ctx: PrecisionContext, tol: float) -> int | None:
    """An integer ``l`` with ``|1 - x q^-l| < tol``, or ``None``."""
    if x == 0:
        return None
    mp = ctx.mp
    est = float(mp.log(abs(x)) / mp.log(abs(q)))
    for l in range(math.floor(est) - 2, math.ceil(est) + 3):
        if abs(1 - x / q ** l) < tol:
            return l
    return None


def _real_nome(q, ctx: PrecisionContext) -> list[str]:
    if q.imag != 0 or not 0 < q.real < 1:
        return ["requires real 0 < q < 1"]
    return []


def _alpha(params: dict) -> Fraction:
    alpha = as_fraction(params["alpha"])
    return alpha


def _alpha_violations(params, q, ctx: PrecisionContext, positive: bool) -> list[str]:
    alpha = _alpha(params)
    out = []
    if alpha < 0 or (positive and alpha == 0):
        out.append(f"requires alpha {'>' if positive else '>='} 0, got {alpha}")
    if alpha.denominator > 12:
        out.append("alpha denominator must not exceed 12")
    if alpha.denominator != 1:
        out += [f"fractional alpha {v}" for v in _real_nome(q, ctx)]
    return out


def _r_violations(params, allowed=range(2, 7)) -> list[str]:
    r = _int(params, "r")
    if r not in allowed:
        return [f"requires integer r in {allowed.start}..{allowed.stop - 1}, got {r}"]
    return []


def _rejection(draw: Callable[[random.Random], dict], accept: Callable[[dict], bool]):
    def sampler(rng: random.Random) -> dict:
        for _ in range(10000):
            params = draw(rng)
            if accept(params):
                return params
        raise RuntimeError("sampler failed to find an admissible point")
    return sampler


def _value(x) -> SeriesValue:
    return x if isinstance(x, SeriesValue) else SeriesValue.exact(x)


def _finite_sum(terms, ctx: PrecisionContext) -> SeriesValue:
    """Exactly rounded sum of a finite list; no truncation, peak recorded."""
    terms = list(terms)
    peak = max((abs(t) for t in terms), default=ctx.mp.mpf(0))
    return SeriesValue.exact(ctx.mp.fsum(terms), len(terms), peak)


# ---------------------------------------------------------------------------
# Rogers-Ramanujan and q-binomial


def _rr_domain(params, ctx):
    (q,) = _nums(params, ctx, "q")
    return _nome_violation(q, ctx)


def _rr_sampler(rng):
    return {"q": _nome(rng, False)}


def _rr1_lhs(p, ctx, opts):
    (q,) = _nums(p, ctx, "q")
    return eval_A(1, 0, q, 1, ctx)


def _rr1_rhs(p, ctx, opts):
    (q,) = _nums(p, ctx, "q")
    return poch_ratio([], [q, q ** 4], q ** 5, ctx)


def _rr2_lhs(p, ctx, opts):
    (q,) = _nums(p, ctx, "q")
    return eval_A(1, 0, q, q, ctx)


def _rr2_rhs(p, ctx, opts):
    (q,) = _nums(p, ctx, "q")
    return poch_ratio([], [q ** 2, q ** 3], q ** 5, ctx)


def _qbinom_domain(params, ctx):
    a, q, z = _nums(params, ctx, "a", "q", "z")
    out = _nome_violation(q, ctx)
    if not abs(z) <= 1 - REGION_MARGIN:
        out.append(f"requires |z| < 1 (|z| <= {1 - REGION_MARGIN} accepted)")
    return out


def _qbinom_sampler(rng):
    return {
        "a": _fmt_complex(_polar(rng, 0.05, 1.5)),
        "q": _nome(rng, False),
        "z": _fmt_complex(_polar(rng, 0.05, 1 - REGION_MARGIN)),
    }


def _qbinom_lhs(p, ctx, opts):
    a, q, z = _nums(p, ctx, "a", "q", "z")
    return eval_A(0, a, q, z, ctx)


def _qbinom_rhs(p, ctx, opts):
    a, q, z = _nums(p, ctx, "a", "q", "z")
    return poch_ratio([a * z], [z], q, ctx)


# ---------------------------------------------------------------------------
# Ramanujan's 1psi1


def _psi11_domain(params, ctx):
    a, b, q, z = _nums(params, ctx, "a", "b", "q", "z")
    out = _nome_violation(q, ctx)
    if a == 0:
        return out + ["requires a != 0"]
    lo = abs(b / a)
    if not (lo + REGION_MARGIN <= abs(z) <= 1 - REGION_MARGIN):
        out.append(
            f"requires |b/a| < |z| < 1 (margin {REGION_MARGIN}): "
            f"|b/a|={ctx.mp.nstr(lo, 6)}, |z|={ctx.mp.nstr(abs(z), 6)}"
        )
    return out


def _bilateral_bases_ok(a, b, q, extra=()) -> bool:
    # denominators of the closed forms stay away from zero
    checks = [(b, 0), (q / a, 0)] + list(extra)
    return all(_min_factor(base, q, lo) >= SAMPLE_MARGIN for base, lo in checks) and \
        _min_factor(a, q, -40, -1) >= SAMPLE_MARGIN


def _psi11_draw(rng):
    q = _polar(rng, 0.1, 0.6)
    a = _polar(rng, 0.5, 1.5)
    ratio = _polar(rng, 0.0, 0.5)
    b = a * ratio
    z = _polar(rng, abs(ratio) + REGION_MARGIN, 1 - REGION_MARGIN)
    return {"a": _fmt_complex(a), "b": _fmt_complex(b), "q": _fmt_complex(q), "z": _fmt_complex(z)}


def _psi11_accept(p):
    ctx = default_context()
    if _psi11_domain(p, ctx):
        return False
    a, b, q, z = (complex(ctx.num(p[k])) for k in ("a", "b", "q", "z"))
    return _bilateral_bases_ok(a, b, q, [(z, 0), (b / (a * z), 0)])


def _psi11_lhs(p, ctx, opts):
    a, b, q, z = _nums(p, ctx, "a", "b", "q", "z")
    return eval_B(0, a, b, q, z, ctx)


def _psi11_rhs(p, ctx, opts):
    a, b, q, z = _nums(p, ctx, "a", "b", "q", "z")
    return poch_ratio([q, b / a, a * z, q / (a * z)], [b, q / a, z, b / (a * z)], q, ctx)


# ---------------------------------------------------------------------------
# multisection lemma


def _u1_domain(params, ctx):
    (q,) = _nums(params, ctx, "q")
    out = _nome_violation(q, ctx) + _r_violations(params)
    if _int(params, "n") < 0:
        out.append("requires n >= 0")
    return out


def _u1_sampler(rng):
    return {
        "a": _fmt_complex(_polar(rng, 0.05, 1.5)),
        "q": _nome(rng, False),
        "r": rng.randint(2, 5),
        "n": rng.randint(0, 20),
    }


def _u1_lhs(p, ctx, opts):
    a, q = _nums(p, ctx, "a", "q")
    return _value(multisum_u1(a, q, _int(p, "r"), _int(p, "n"), ctx))


def _u1_rhs(p, ctx, opts):
    a, q = _nums(p, ctx, "a", "q")
    return _value(u1_rhs(a, q, _int(p, "r"), _int(p, "n"), ctx))


def _b1_domain(params, ctx, allowed=range(2, 7)):
    a, b, q = _nums(params, ctx, "a", "b", "q")
    out = _nome_violation(q, ctx) + _r_violations(params, allowed)
    if a == 0 or not abs(b / a) < 1:
        out.append("requires a != 0 and |b/a| < 1")
    return out


def _bilateral_draw(rng, with_x: bool):
    q = _polar(rng, 0.1, 0.6)
    a = _polar(rng, 0.5, 1.2)
    ratio = _polar(rng, 0.02, 0.5)
    p = {"a": _fmt_complex(a), "b": _fmt_complex(a * ratio), "q": _fmt_complex(q)}
    if with_x:
        p["x"] = _fmt_complex(_polar(rng, abs(ratio) + 0.1, 0.85))
    return p


def _bilateral_accept(p) -> bool:
    ctx = default_context()
    a, b, q = (complex(ctx.num(p[k])) for k in ("a", "b", "q"))
    r = p.get("r", 2)
    qr = q ** r
    extra = [(b ** r, 0), (qr / a ** r, 0)]
    return _bilateral_bases_ok(a, b, q) and all(_min_factor(base, qr) >= SAMPLE_MARGIN for base, _ in extra)


def _b1_draw(rng):
    p = _bilateral_draw(rng, False)
    p["r"] = rng.choice((2, 3))
    p["n"] = rng.randint(-6, 6)
    return p


def _b1_lhs(p, ctx, opts):
    a, b, q = _nums(p, ctx, "a", "b", "q")
    return multisum_b1(a, b, q, _int(p, "r"), _int(p, "n"), ctx)


def _b1_rhs(p, ctx, opts):
    a, b, q = _nums(p, ctx, "a", "b", "q")
    return b1_rhs(a, b, q, _int(p, "r"), _int(p, "n"), ctx)


def _prodms_domain(params, ctx):
    a, q, t = _nums(params, ctx, "a", "q", "t")
    out = _nome_violation(q, ctx) + _r_violations(params)
    if not abs(t) <= 1 - REGION_MARGIN:
        out.append(f"requires |t| < 1 (|t| <= {1 - REGION_MARGIN} accepted)")
    return out


def _prodms_sampler(rng):
    return {
        "a": _fmt_complex(_polar(rng, 0.05, 1.5)),
        "q": _nome(rng, False),
        "t": _fmt_complex(_polar(rng, 0.05, 0.8)),
        "r": rng.randint(2, 5),
    }


def _prodms_sides(p, ctx):
    a, q, t = _nums(p, ctx, "a", "q", "t")
    return product_multisection(a, q, t, _int(p, "r"), ctx)


# ---------------------------------------------------------------------------
# unilateral expansions


def _e_domain(params, ctx):
    a, q, t = _nums(params, ctx, "a", "q", "t")
    out = _nome_violation(q, ctx) + _r_violations(params) + _alpha_violations(params, q, ctx, False)
    if _alpha(params) == 0 and not abs(t) <= 0.8:
        out.append("alpha = 0 requires |t| <= 0.8")
    return out


def _e_sampler(rng):
    return {
        "alpha": str(rng.choice((1, 2))),
        "a": _fmt_complex(_polar(rng, 0.05, 1.5)),
        "q": _nome(rng, False),
        "t": _fmt_complex(_polar(rng, 0.05, 0.6)),
        "r": rng.choice((2, 3)),
    }


def _e_lhs(p, ctx, opts):
    a, q, t = _nums(p, ctx, "a", "q", "t")
    r, alpha = _int(p, "r"), _alpha(p)
    return eval_A(r * alpha, a ** r, q ** r, t ** r, ctx)


def _e1_rhs(p, ctx, opts):
    a, q, t = _nums(p, ctx, "a", "q", "t")
    return eval_e1_rhs(_alpha(p), a, q, t, _int(p, "r"), ctx)


def _e2_rhs(p, ctx, opts):
    a, q, t = _nums(p, ctx, "a", "q", "t")
    phase = opts.get("e2_phase", "r-1")
    return eval_e2_rhs(_alpha(p), a, q, t, _int(p, "r"), ctx, phase=phase)


# ---------------------------------------------------------------------------
# bilateral expansions


def _t12r_domain(params, ctx):
    a, b, q, x = _nums(params, ctx, "a", "b", "q", "x")
    out = _b1_domain(params, ctx) + _alpha_violations(params, q, ctx, True)
    if x == 0:
        out.append("requires x != 0")
    return out


def _t12r_draw(rng):
    p = _bilateral_draw(rng, True)
    p["alpha"] = str(rng.choice((1, 2)))
    p["r"] = rng.choice((2, 3))
    return p


def _t12r_lhs(p, ctx, opts):
    a, b, q, x = _nums(p, ctx, "a", "b", "q", "x")
    r = _int(p, "r")
    return eval_B(r * _alpha(p), a ** r, b ** r, q ** r, x ** r, ctx)


def _t12r_rhs(p, ctx, opts):
    a, b, q, x = _nums(p, ctx, "a", "b", "q", "x")
    return eval_12r_rhs(_alpha(p), a, b, q, x, _int(p, "r"), ctx)


def _c15r_domain(params, ctx):
    a, q, x = _nums(params, ctx, "a", "q", "x")
    out = _nome_violation(q, ctx) + _r_violations(params)
    if x == 0:
        out.append("requires x != 0")
    if a == 0:
        out.append("requires a != 0")
    return out


def _c15r_draw(rng):
    return {
        "a": _fmt_complex(_polar(rng, 0.2, 1.2)),
        "q": _fmt_complex(_polar(rng, 0.1, 0.6)),
        "x": _fmt_complex(_polar(rng, 0.1, 0.85)),
        "r": rng.choice((2, 3)),
    }


def _c15r_accept(p) -> bool:
    ctx = default_context()
    a, q = (complex(ctx.num(p[k])) for k in ("a", "q"))
    r = p["r"]
    return (_min_factor(a, q, -60, 60) >= SAMPLE_MARGIN
            and _min_factor(q / a, q) >= SAMPLE_MARGIN
            and _min_factor(a ** r, q ** r, -30, 30) >= SAMPLE_MARGIN)


def _c15r_lhs(p, ctx, opts):
    a, q, x = _nums(p, ctx, "a", "q", "x")
    return eval_15r_lhs(a, q, x, _int(p, "r"), ctx)


def _c15r_rhs(p, ctx, opts):
    a, q, x = _nums(p, ctx, "a", "q", "x")
    variant = opts.get("c15r_prefactor", "derived")
    return eval_15r_rhs(a, q, x, _int(p, "r"), ctx, variant=variant)


# ---------------------------------------------------------------------------
# the F family


def _not_inverse_power(name: str, value, q, ctx) -> list[str]:
    # value = q^-m for some m >= 0
    l = _near_q_power(value, q, ctx, ctx.pole_guard)
    if l is not None and l <= 0:
        return [f"requires {name} != q^-m for nonnegative m ({name} = q^{l})"]
    return []


def _f2_domain(params, ctx):
    a, c, q, z = _nums(params, ctx, "a", "c", "q", "z")
    out = _nome_violation(q, ctx)
    if out:
        return out
    out += _not_inverse_power("c", c, q, ctx) + _not_inverse_power("z", z, q, ctx)
    if c == 0:
        out.append("requires c != 0")
    return out


def _f2_draw(rng):
    return {
        "a": _fmt_complex(_polar(rng, 0.05, 2.0)),
        "c": _fmt_complex(_polar(rng, 0.05, 2.0)),
        "q": _nome(rng, False),
        "z": _fmt_complex(_polar(rng, 0.05, 2.0)),
    }


def _f2_accept(p) -> bool:
    ctx = default_context()
    c, q, z = (complex(ctx.num(p[k])) for k in ("c", "q", "z"))
    return _min_factor(c, q) >= SAMPLE_MARGIN and _min_factor(z, q) >= SAMPLE_MARGIN


def _f2_lhs(p, ctx, opts):
    a, c, q, z = _nums(p, ctx, "a", "c", "q", "z")
    return eval_F(a, c, q, z, ctx)


def _f2_rhs(p, ctx, opts):
    a, c, q, z = _nums(p, ctx, "a", "c", "q", "z")
    return poch_ratio([z], [c], q, ctx) * eval_F(a * z / c, z, q, c, ctx)


def _f3_values(p, ctx):
    q = ctx.real(p["q"])
    alpha, gamma = ctx.real(p["alpha"]), ctx.real(p["gamma"])
    n = _int(p, "n")
    return q, alpha, gamma, n


def _near_nonpositive_int(value, margin) -> int | None:
    nearest = round(float(value))
    if nearest <= 0 and abs(float(value) - nearest) < margin:
        return nearest
    return None


def _f3_domain(params, ctx):
    q = ctx.num(params["q"])
    out = _real_nome(q, ctx)
    try:
        _, alpha, gamma, n = _f3_values(params, ctx)
    except DomainError as exc:
        return out + [f"alpha and gamma must be real ({exc})"]
    if out:
        return out
    if n < 0:
        out.append("requires n >= 0")
    # exact hits only; the sampler keeps a wider margin
    if _near_nonpositive_int(alpha + gamma, 1e-20) is not None:
        out.append("requires alpha + gamma not a nonpositive integer")
    if _near_nonpositive_int(gamma - n, 1e-20) is not None:
        out.append("requires gamma - n not a nonpositive integer")
    return out


def _f3_draw(rng):
    return {
        "alpha": _fmt_real(rng.uniform(-3.5, 3.5)),
        "gamma": _fmt_real(rng.uniform(-3.5, 3.5)),
        "q": _fmt_real(rng.uniform(0.1, 0.7)),
        "n": rng.randint(0, 12),
    }


def _f3_accept(p) -> bool:
    alpha, gamma, n = float(p["alpha"]), float(p["gamma"]), p["n"]
    return (_near_nonpositive_int(alpha + gamma, 0.1) is None
            and _near_nonpositive_int(gamma - n, 0.1) is None)


def _f3_lhs(p, ctx, opts):
    q, alpha, gamma, n = _f3_values(p, ctx)
    mp = ctx.mp
    return eval_F(mp.power(q, alpha), mp.power(q, alpha + gamma), q, mp.power(q, gamma - n), ctx)


def _f3_rhs(p, ctx, opts):
    q, alpha, gamma, n = _f3_values(p, ctx)
    mp = ctx.mp
    base = mp.power(q, gamma - n)
    top = mp.power(q, alpha + gamma)
    prefactor = poch_ratio([base], [top], q, ctx)
    inv = q ** -n
    weight = mp.power(q, gamma + alpha)
    terms = []
    for k in range(n + 1):
        num = poch_finite(inv, q, k, ctx) * (-1) ** k * q ** (k * (k - 1) // 2) * weight ** k
        terms.append(num / (poch_finite(q, q, k, ctx) * poch_finite(base, q, k, ctx)))
    return prefactor * _finite_sum(terms, ctx)


def _gauss_domain(params, ctx):
    q, x = _nums(params, ctx, "q", "x")
    out = _nome_violation(q, ctx)
    n = _int(params, "n")
    if n < 0:
        out.append("requires n >= 0")
    if not abs(x) <= 1 - REGION_MARGIN:
        out.append(f"requires |x| < 1 (|x| <= {1 - REGION_MARGIN} accepted)")
    return out


def _f4_domain(params, ctx):
    out = _gauss_domain(params, ctx)
    if out:
        return out
    q, x = _nums(params, ctx, "q", "x")
    l = _near_q_power(x, q, ctx, ctx.pole_guard)
    n = _int(params, "n")
    if l is not None and 1 <= l <= n:
        out.append(f"requires x != q^l for 1 <= l <= n (x = q^{l})")
    return out


def _gauss_draw(rng):
    return {
        "q": _nome(rng, False),
        "x": _fmt_complex(_polar(rng, 0.05, 0.8)),
        "n": rng.randint(1, 12),
    }


def _gauss_accept(p) -> bool:
    ctx = default_context()
    q, x = (complex(ctx.num(p[k])) for k in ("q", "x"))
    return _min_factor(x, q, -p["n"], 0) >= SAMPLE_MARGIN


def gaussian_series(n: int, x, q, ctx: PrecisionContext) -> SeriesValue:
    """``sum_k (q;q)_{n+k-1} / ((q;q)_k (q;q)_{n-1}) x^k``; ``1`` at ``n = 0``."""
    if n == 0:
        return SeriesValue.exact(ctx.mp.mpc(1), 1)
    one = ctx.mp.mpc(1)

    def terms():
        term, qk = one, one
        while True:
            yield term
            # ratio of consecutive Gaussian binomials times x
            term *= (one - qk * q ** n) / (one - qk * q) * x
            qk *= q

    return sum_terms(terms(), ctx, label="Gaussian series")


def _f4_lhs(p, ctx, opts):
    q, x = _nums(p, ctx, "q", "x")
    return gaussian_series(_int(p, "n"), x, q, ctx)


F4_VARIANTS = ("shifted", "unshifted")


def f4_finite_side(n: int, x, q, ctx: PrecisionContext, variant: str = "shifted") -> SeriesValue:
    """The terminating side of the Gaussian-series evaluation.

    ``"unshifted"`` is ``sum_{k<=n} (q^-n;q)_k (-1)^k q^(k(k-1)/2) x^k / (q, x q^-n; q)_k``,
    which sums to ``1/(x q^-n; q)_n``.  ``"shifted"`` substitutes
    ``x -> x q^n`` so that the sum is ``1/(x;q)_n``, the value of the
    Gaussian series.
    """
    if variant not in F4_VARIANTS:
        raise ValueError(f"unknown F4 variant {variant!r}")
    inv = q ** -n
    shift = q ** n if variant == "shifted" else 1
    arg = x * shift
    terms = []
    for k in range(n + 1):
        num = poch_finite(inv, q, k, ctx) * (-1) ** k * q ** (k * (k - 1) // 2) * arg ** k
        terms.append(num / (poch_finite(q, q, k, ctx) * poch_finite(arg * inv, q, k, ctx)))
    return _finite_sum(terms, ctx)


def _f4_rhs(p, ctx, opts):
    q, x = _nums(p, ctx, "q", "x")
    return f4_finite_side(_int(p, "n"), x, q, ctx, opts.get("f4_variant", "shifted"))


def _qbinom1_rhs(p, ctx, opts):
    q, x = _nums(p, ctx, "q", "x")
    return SeriesValue.exact(1 / poch_finite(x, q, _int(p, "n"), ctx))


def F7_side(m: int, n: int, x, q, ctx: PrecisionContext) -> SeriesValue:
    """``S(m, n, x) = sum_{k=0}^m (q^-m;q)_k (-1)^k q^(k(k-2n-1)/2) x^k / (q, x q^-m; q)_k``, exactly summed."""
    inv = q ** -m
    terms = []
    for k in range(m + 1):
        # k(k-2n-1) is always even
        num = poch_finite(inv, q, k, ctx) * (-1) ** k * q ** (k * (k - 2 * n - 1) // 2) * x ** k
        terms.append(num / (poch_finite(q, q, k, ctx) * poch_finite(x * inv, q, k, ctx)))
    return _finite_sum(terms, ctx)


def F7_prefactor(m: int, n: int, x, q, ctx: PrecisionContext):
    """``(x q^-n; q)_inf / (x q^-m; q)_inf`` reduced to a finite product; exactly 1 at ``m = n``."""
    if m == n:
        return ctx.mp.mpc(1)
    if m > n:
        return 1 / poch_finite(x * q ** -m, q, m - n, ctx)
    return poch_finite(x * q ** -n, q, n - m, ctx)


def _f7_domain(params, ctx):
    q, x = _nums(params, ctx, "q", "x")
    out = _nome_violation(q, ctx)
    m, n = _int(params, "m"), _int(params, "n")
    if m < 0 or n < 0:
        out.append("requires nonnegative m and n")
    if out:
        return out
    if x == 0:
        return ["F7 requires x != 0"]
    l = _near_q_power(x, q, ctx, ctx.pole_guard)
    if l is not None:
        out.append(f"F7 requires x ≠ q^l for every integer l (x = q^{l})")
    return out


def _f7_draw(rng):
    return {
        "q": _nome(rng, False),
        "x": _fmt_complex(_polar(rng, 0.1, 1.5)),
        "m": rng.randint(0, 12),
        "n": rng.randint(0, 12),
    }


def _f7_accept(p) -> bool:
    ctx = default_context()
    q, x = (complex(ctx.num(p[k])) for k in ("q", "x"))
    hi = max(p["m"], p["n"])
    return _min_factor(x, q, -hi, 0) >= SAMPLE_MARGIN


def _f7_lhs(p, ctx, opts):
    q, x = _nums(p, ctx, "q", "x")
    return F7_side(_int(p, "m"), _int(p, "n"), x, q, ctx)


def _f7_rhs(p, ctx, opts):
    q, x = _nums(p, ctx, "q", "x")
    m, n = _int(p, "m"), _int(p, "n")
    return F7_side(n, m, x, q, ctx) * F7_prefactor(m, n, x, q, ctx)


# ---------------------------------------------------------------------------
# the r = 2, 3 lemma cases, each against its own closed-form right side


def _lem_u1_draw(r, rng):
    return {"a": _fmt_complex(_polar(rng, 0.05, 1.5)), "q": _nome(rng, False), "n": rng.randint(0, 20)}


def _lem_u1_domain(params, ctx):
    (q,) = _nums(params, ctx, "q")
    out = _nome_violation(q, ctx)
    if _int(params, "n") < 0:
        out.append("requires n >= 0")
    return out


def _lem1_1_lhs(p, ctx, opts):
    a, q = _nums(p, ctx, "a", "q")
    return _value(multisum_u1(a, q, 2, _int(p, "n"), ctx))


def _lem1_1_rhs(p, ctx, opts):
    a, q = _nums(p, ctx, "a", "q")
    n = _int(p, "n")
    if n % 2:
        return SeriesValue.exact(ctx.mp.mpc(0))
    m = n // 2
    return SeriesValue.exact(poch_finite(a * a, q * q, m, ctx) / poch_finite(q * q, q * q, m, ctx))


def _lem1_2_lhs(p, ctx, opts):
    a, q = _nums(p, ctx, "a", "q")
    return _value(multisum_u1(a, q, 3, _int(p, "n"), ctx))


def _lem1_2_rhs(p, ctx, opts):
    a, q = _nums(p, ctx, "a", "q")
    n = _int(p, "n")
    if n % 3:
        return SeriesValue.exact(ctx.mp.mpc(0))
    m = n // 3
    q3 = q ** 3
    return SeriesValue.exact(poch_finite(a ** 3, q3, m, ctx) / poch_finite(q3, q3, m, ctx))


def _lem_b_domain(params, ctx):
    a, b, q = _nums(params, ctx, "a", "b", "q")
    out = _nome_violation(q, ctx)
    if a == 0 or not abs(b / a) < 1:
        out.append("requires a != 0 and |b/a| < 1")
    return out


def _lem_b_draw(r, n_choices):
    def draw(rng):
        p = _bilateral_draw(rng, False)
        p["n"] = rng.choice(n_choices)
        return p
    return draw


def _lem_b_accept(r):
    def accept(p):
        return _bilateral_accept(dict(p, r=r))
    return accept


def _lem1_3_lhs(p, ctx, opts):
    a, b, q = _nums(p, ctx, "a", "b", "q")
    return multisum_b1(a, b, q, 2, _int(p, "n"), ctx)


def _lem1_3_rhs(p, ctx, opts):
    a, b, q = _nums(p, ctx, "a", "b", "q")
    n = _int(p, "n")
    if n % 2:
        return SeriesValue.exact(ctx.mp.mpc(0))
    m = n // 2
    prefactor = poch_ratio([q, b / a, -b, -q / a], [-q, -b / a, b, q / a], q, ctx)
    return prefactor * (poch_finite(a * a, q * q, m, ctx) / poch_finite(b * b, q * q, m, ctx))


def _lem1_4_domain(params, ctx):
    out = _lem_b_domain(params, ctx)
    if _int(params, "n") % 3 == 0:
        out.append("requires 3 ∤ n")
    return out


def _lem1_4_lhs(p, ctx, opts):
    a, b, q = _nums(p, ctx, "a", "b", "q")
    return multisum_b1(a, b, q, 3, _int(p, "n"), ctx)


def _lem1_4_rhs(p, ctx, opts):
    return SeriesValue.exact(ctx.mp.mpc(0))


def _lem1_5_lhs(p, ctx, opts):
    a, b, q = _nums(p, ctx, "a", "b", "q")
    return multisum_b1(a, b, q, 3, 3 * _int(p, "m"), ctx)


def _lem1_5_rhs(p, ctx, opts):
    a, b, q = _nums(p, ctx, "a", "b", "q")
    m = _int(p, "m")
    q3 = q ** 3
    prefactor = (poch_ratio([q, b / a], [b, q / a], q, ctx) ** 3
                 * poch_ratio([b ** 3, q3 / a ** 3], [q3, b ** 3 / a ** 3], q3, ctx))
    return prefactor * (poch_finite(a ** 3, q3, m, ctx) / poch_finite(b ** 3, q3, m, ctx))


def _lem1_5_draw(rng):
    p = _bilateral_draw(rng, False)
    p["m"] = rng.randint(-2, 2)
    return p


# ---------------------------------------------------------------------------
# registry


def _spec(id, anchor, params, kind, domain_summary, lhs, rhs, domain, sampler, **kw):
    return IdentitySpec(id, anchor, tuple(params), kind, domain_summary, lhs, rhs, domain, sampler, **kw)


def _build_registry() -> list[IdentitySpec]:
    bilateral_region = "|q| in [0.1,0.6], |b/a| <= 0.5, |x| in [|b/a|+0.1, 0.85]"
    return [
        _spec("RR1", "first Rogers-Ramanujan identity: sum q^(n^2)/(q;q)_n = 1/(q,q^4;q^5)_inf",
              ["q"], "infinite", "|q| < 1", _rr1_lhs, _rr1_rhs, _rr_domain, _rr_sampler),
        _spec("RR2", "second Rogers-Ramanujan identity: sum q^(n^2+n)/(q;q)_n = 1/(q^2,q^3;q^5)_inf",
              ["q"], "infinite", "|q| < 1", _rr2_lhs, _rr2_rhs, _rr_domain, _rr_sampler),
        _spec("QBINOM", "q-binomial theorem: sum (a;q)_n z^n/(q;q)_n = (az;q)_inf/(z;q)_inf",
              ["a", "q", "z"], "infinite", "|q| < 1, |z| < 1", _qbinom_lhs, _qbinom_rhs,
              _qbinom_domain, _qbinom_sampler),
        _spec("PSI11", "Ramanujan's 1psi1 summation",
              ["a", "b", "q", "z"], "bilateral", "|q| < 1, |b/a| < |z| < 1",
              _psi11_lhs, _psi11_rhs, _psi11_domain, _rejection(_psi11_draw, _psi11_accept)),
        _spec("U1", "multisection lemma, unilateral form: phased sum over nonnegative compositions",
              ["a", "q", "r", "n"], "finite", "|q| < 1, r >= 2, n >= 0",
              _u1_lhs, _u1_rhs, _u1_domain, _u1_sampler),
        _spec("B1", "multisection lemma, bilateral form: phased sum over integer compositions",
              ["a", "b", "q", "r", "n"], "multi-sum", "|q| < 1, r >= 2, |b/a| < 1",
              _b1_lhs, _b1_rhs, _b1_domain, _rejection(_b1_draw, _bilateral_accept)),
        _spec("PRODMS", "product multisection behind the lemma: prod_i (a zeta^i t;q)/(zeta^i t;q) = (a^r t^r;q^r)/(t^r;q^r)",
              ["a", "q", "t", "r"], "infinite", "|q| < 1, |t| < 1",
              lambda p, c, o: _prodms_sides(p, c)[0], lambda p, c, o: _prodms_sides(p, c)[1],
              _prodms_domain, _prodms_sampler),
        _spec("E1", "A_{q^r}^(r alpha)(a^r; t^r) as an (r-1)-fold sum, inner sum over the last index",
              ["alpha", "a", "q", "t", "r"], "multi-sum", "|q| < 1, alpha >= 0 (|t| <= 0.8 at alpha = 0)",
              _e_lhs, _e1_rhs, _e_domain, _e_sampler),
        _spec("E2", "A_{q^r}^(r alpha)(a^r; t^r) as an (r-1)-fold sum, inner sum over the first index",
              ["alpha", "a", "q", "t", "r"], "multi-sum", "|q| < 1, alpha >= 0 (|t| <= 0.8 at alpha = 0)",
              _e_lhs, _e2_rhs, _e_domain, _e_sampler, options=("e2_phase",)),
        _spec("T12R", "B_{q^r}^(r alpha)(a^r, b^r; x^r) as an (r-1)-fold bilateral sum",
              ["alpha", "a", "b", "q", "x", "r"], "multi-sum", f"alpha > 0, |b/a| < 1, x != 0; sampled {bilateral_region}",
              _t12r_lhs, _t12r_rhs, _t12r_domain, _rejection(_t12r_draw, _bilateral_accept)),
        _spec("C15R", "bilateral Rogers-Ramanujan type family: sum q^(r^2 n^2) x^(rn)/(1 - a^r q^(rn)) as an r-fold sum",
              ["a", "q", "x", "r"], "multi-sum", "|q| < 1, x != 0, a != q^j",
              _c15r_lhs, _c15r_rhs, _c15r_domain, _rejection(_c15r_draw, _c15r_accept),
              options=("c15r_prefactor",)),
        _spec("F2", "Heine-limit symmetry F(a,c;z) = (z;q)/(c;q) F(az/c, z; c)",
              ["a", "c", "q", "z"], "infinite", "|q| < 1, c, z != q^-m",
              _f2_lhs, _f2_rhs, _f2_domain, _rejection(_f2_draw, _f2_accept)),
        _spec("F3", "infinite F series at a = q^alpha, c = q^(alpha+gamma), z = q^(gamma-n) as an (n+1)-term sum",
              ["alpha", "gamma", "q", "n"], "finite", "real 0 < q < 1; alpha+gamma, gamma-n not nonpositive integers",
              _f3_lhs, _f3_rhs, _f3_domain, _rejection(_f3_draw, _f3_accept), real_q=True),
        _spec("F4", "Gaussian-binomial series for 1/(x;q)_n as an (n+1)-term sum",
              ["q", "x", "n"], "finite", "|q| < 1, |x| < 1, n >= 0",
              _f4_lhs, _f4_rhs, _f4_domain, _rejection(_gauss_draw, _gauss_accept),
              options=("f4_variant",)),
        _spec("F7", "symmetry between two terminating sums of lengths m+1 and n+1",
              ["q", "x", "m", "n"], "finite", "|q| < 1, m, n >= 0, x != q^l",
              _f7_lhs, _f7_rhs, _f7_domain, _rejection(_f7_draw, _f7_accept)),
        _spec("QBINOM1", "1/(x;q)_n as a Gaussian-binomial series",
              ["q", "x", "n"], "infinite", "|q| < 1, |x| < 1, n >= 0",
              _f4_lhs, _qbinom1_rhs, _gauss_domain, _rejection(_gauss_draw, _gauss_accept)),
        _spec("LEM1-1", "lemma regression: two-fold sum with sign (-1)^k (r = 2, unilateral)",
              ["a", "q", "n"], "finite", "|q| < 1, n >= 0",
              _lem1_1_lhs, _lem1_1_rhs, _lem_u1_domain, lambda rng: _lem_u1_draw(2, rng)),
        _spec("LEM1-2", "lemma regression: three-fold sum with rho^(k+2l) (r = 3, unilateral)",
              ["a", "q", "n"], "finite", "|q| < 1, n >= 0",
              _lem1_2_lhs, _lem1_2_rhs, _lem_u1_domain, lambda rng: _lem_u1_draw(3, rng)),
        _spec("LEM1-3", "lemma regression: bilateral two-fold sum with sign (-1)^k (r = 2)",
              ["a", "b", "q", "n"], "multi-sum", "|q| < 1, |b/a| < 1",
              _lem1_3_lhs, _lem1_3_rhs, _lem_b_domain,
              _rejection(_lem_b_draw(2, range(-6, 7)), _lem_b_accept(2))),
        _spec("LEM1-4", "lemma regression: bilateral three-fold sum vanishing for 3 ∤ n",
              ["a", "b", "q", "n"], "multi-sum", "|q| < 1, |b/a| < 1, 3 ∤ n",
              _lem1_4_lhs, _lem1_4_rhs, _lem1_4_domain,
              _rejection(_lem_b_draw(3, [n for n in range(-7, 8) if n % 3]), _lem_b_accept(3))),
        _spec("LEM1-5", "lemma regression: bilateral three-fold sum at n = 3m",
              ["a", "b", "q", "m"], "multi-sum", "|q| < 1, |b/a| < 1",
              _lem1_5_lhs, _lem1_5_rhs, _lem_b_domain,
              _rejection(_lem1_5_draw, _lem_b_accept(3))),
    ]


_REGISTRY: list[IdentitySpec] | None = None

PRIMARY_IDS = ("RR1", "RR2", "QBINOM", "PSI11", "U1", "B1", "PRODMS", "E1", "E2",
               "T12R", "C15R", "F2", "F3", "F4", "F7", "QBINOM1")


def registry() -> list[IdentitySpec]:
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = _build_registry()
    return list(_REGISTRY)


def get_spec(identity_id: str) -> IdentitySpec:
    for spec in registry():
        if spec.id == identity_id:
            return spec
    raise KeyError(f"unknown identity id {identity_id!r}")


def resolve_ids(ids) -> list[str]:
    """Expand ``"all"`` and validate; order follows the registry."""
    known = [s.id for s in registry()]
    if isinstance(ids, str):
        ids = [i for i in ids.split(",") if i]
    ids = list(ids)
    if "all" in ids:
        return known
    unknown = [i for i in ids if i not in known]
    if unknown:
        raise KeyError(f"unknown identity id(s): {', '.join(unknown)}")
    seen = []
    for i in ids:
        if i not in seen:
            seen.append(i)
    return seen


def instantiate(identity_id: str, params: dict, ctx: PrecisionContext | None = None,
                index: int = 0) -> IdentityCase:
    """Bind parameters to an identity after checking its domain.

    Raises:
        KeyError: unknown id.
        DomainError: a parameter violates the identity's hypotheses; the
            message names the violated constraint.
    """
    ctx = ctx or default_context()
    spec = get_spec(identity_id)
    problems = spec.violations(params, ctx)
    if problems:
        raise DomainError(f"{identity_id}: " + "; ".join(problems))
    return IdentityCase(spec, dict(params), ctx, index)


def sample_params(identity_id: str, seed: int, index: int) -> dict:
    """The ``index``-th parameter record of ``identity_id`` for ``seed``.

    Each record has its own generator, so records do not depend on how many
    other samples or identities are drawn.
    """
    spec = get_spec(identity_id)
    rng = random.Random(f"{seed}:{identity_id}:{index}")
    ctx = default_context()
    for _ in range(1000):
        params = spec.sampler(rng)
        if not spec.violations(params, ctx):
            return params
    raise RuntimeError(f"{identity_id}: no admissible sample found")
