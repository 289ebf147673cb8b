"""Residual checks, seeded suites and the (e2) phase-variant experiment."""

from __future__ import annotations

import datetime as _dt
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import mpmath

from .catalog import IdentityCase, get_spec, instantiate, resolve_ids, sample_params
from .kernel import DomainError, PoleError, PrecisionContext, QSeriesError, default_context, make_context
from .multisection import E2_PHASES
from .pochhammer import SeriesValue

__all__ = [
    "CONFIRM_EXTRA_BITS",
    "VERDICTS",
    "DEFAULT_OPTIONS",
    "VerificationRecord",
    "Report",
    "check_case",
    "run_suite",
    "e2_phase_experiment",
    "format_complex",
    "mutation_delta",
]

VERDICTS = ("pass", "fail", "inconclusive")

# Passing cases are re-run with this many more bits before they count.
CONFIRM_EXTRA_BITS = 64
# Cancellation may push a side to at most this working precision.
MAX_PRECISION_BITS = 8192
# Bits of slack for rounding accumulated inside the term recurrences.
_RECURRENCE_SLACK_BITS = 12

DEFAULT_OPTIONS = {"e2_phase": "r-1", "c15r_prefactor": "derived", "f4_variant": "shifted"}


@dataclass
class VerificationRecord:
    """Outcome of one case, in report-ready form (decimal strings, plain ints)."""

    id: str
    index: int
    params: dict
    lhs: dict | None
    rhs: dict | None
    abs_residual: str | None
    rel_residual: str | None
    verdict: str
    terms: dict
    diagnostics: str = ""
    precision_bits: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    wall_ms: float | None = None

    @property
    def rel_residual_value(self) -> float:
        return math.inf if self.rel_residual is None else float(self.rel_residual)

    def to_dict(self) -> dict:
        return asdict(self)


def mutation_delta(ctx: PrecisionContext) -> float:
    """Relative perturbation the soundness check injects: five digits above the tolerance."""
    return 10.0 ** -(ctx.tolerance_digits - 5)


def format_complex(value, ctx: PrecisionContext) -> dict:
    """``{"re": ..., "im": ...}`` as decimal strings that round-trip at working precision."""
    mp = ctx.mp
    value = mp.mpc(value)
    digits = ctx.decimal_digits
    return {"re": mp.nstr(value.real, digits), "im": mp.nstr(value.imag, digits)}


def _format_residual(x) -> str:
    return f"{float(x):.6e}"


def _lost_bits(sv: SeriesValue) -> float:
    """Bits by which the largest intermediate term exceeds ``max(1, |value|)``."""
    scale = max(1, abs(sv.value))
    if sv.peak is None or sv.peak <= scale:
        return 0.0
    return float(mpmath.log(mpmath.mpf(sv.peak) / mpmath.mpf(scale), 2))


def _evaluate_side(fn, params, ctx: PrecisionContext, options: dict):
    """Evaluate one side, repeating at higher precision if cancellation ate the headroom.

    Returns ``(SeriesValue, precision_bits_used)``.
    """
    value = fn(params, ctx, options)
    budget = ctx.precision_bits - ctx.tolerance_digits * math.log2(10) - _RECURRENCE_SLACK_BITS - 10
    lost = _lost_bits(value)
    if lost <= budget:
        return value, ctx.precision_bits
    bits = ctx.precision_bits + int(math.ceil(lost - budget)) + 32
    if bits > MAX_PRECISION_BITS:
        raise QSeriesError(f"cancellation of {lost:.0f} bits exceeds the {MAX_PRECISION_BITS}-bit ceiling")
    boosted = ctx.with_precision(bits)
    return fn(params, boosted, options), bits


def _residual_verdict(lhs: SeriesValue, rhs: SeriesValue, ctx: PrecisionContext, perturb: float | None):
    mp = ctx.mp
    lv, rv = mp.mpc(lhs.value), mp.mpc(rhs.value)
    if perturb:
        rv = rv + mp.mpf(perturb) * max(1, abs(rv))
    diff = abs(lv - rv)
    rel = diff / max(1, abs(rv))
    if not (lhs.converged and rhs.converged):
        verdict = "inconclusive"
    elif rel <= ctx.eps:
        verdict = "pass"
    else:
        verdict = "fail"
    return rv, diff, rel, verdict


def _single_precision(case: IdentityCase, ctx: PrecisionContext, options: dict, perturb):
    spec = case.spec
    out = {"lhs": None, "rhs": None, "diff": None, "rel": None, "verdict": "inconclusive",
           "notes": [], "bits": {}, "terms": {"lhs": None, "rhs": None}, "errors": {}}
    try:
        lhs, lbits = _evaluate_side(spec.lhs, case.params, ctx, options)
        rhs, rbits = _evaluate_side(spec.rhs, case.params, ctx, options)
    except PoleError as exc:
        out["notes"].append(f"pole: {exc}")
        return out
    except (DomainError, QSeriesError, ZeroDivisionError) as exc:
        out["notes"].append(f"{type(exc).__name__}: {exc}")
        return out
    rv, diff, rel, verdict = _residual_verdict(lhs, rhs, ctx, perturb)
    out.update(lhs=lhs.value, rhs=rv, diff=diff, rel=rel, verdict=verdict,
               bits={"lhs": lbits, "rhs": rbits},
               terms={"lhs": lhs.terms_used, "rhs": rhs.terms_used},
               errors={"lhs": _format_residual(lhs.abs_error_estimate),
                       "rhs": _format_residual(rhs.abs_error_estimate)})
    for side, sv in (("lhs", lhs), ("rhs", rhs)):
        if sv.diagnostics:
            out["notes"].append(f"{side}: {sv.diagnostics}")
        elif not sv.converged:
            out["notes"].append(f"{side}: not converged")
    return out


def check_case(case: IdentityCase, options: dict | None = None, *, perturb: float | None = None,
               confirm: bool = True, timings: bool = False) -> VerificationRecord:
    """Evaluate both sides, compute residuals and decide the verdict.

    ``rel_residual = |lhs - rhs| / max(1, |rhs|)``; pass needs
    ``rel_residual <= 10**-tolerance_digits`` with both sides converged and,
    when ``confirm`` is set, the same outcome at ``precision_bits + 64``.
    ``perturb`` adds ``perturb * max(1, |rhs|)`` to the right side (for
    soundness checks).  Poles and evaluator domain errors become
    inconclusive records, never exceptions.
    """
    opts = dict(DEFAULT_OPTIONS)
    opts.update(options or {})
    ctx = case.ctx
    start = time.perf_counter()
    first = _single_precision(case, ctx, opts, perturb)
    verdict, notes = first["verdict"], list(first["notes"])
    bits = {"lhs": first["bits"].get("lhs"), "rhs": first["bits"].get("rhs")}
    if verdict == "pass" and confirm:
        hi = ctx.with_precision(ctx.precision_bits + CONFIRM_EXTRA_BITS)
        second = _single_precision(case, hi, opts, perturb)
        bits["confirm"] = hi.precision_bits
        if second["verdict"] != "pass":
            verdict = "inconclusive"
            rel = "n/a" if second["rel"] is None else _format_residual(second["rel"])
            notes.append(f"confirmation at {hi.precision_bits} bits gave {second['verdict']} "
                         f"(rel residual {rel})" + ("; " + "; ".join(second["notes"]) if second["notes"] else ""))
    elapsed = (time.perf_counter() - start) * 1000
    return VerificationRecord(
        id=case.id,
        index=case.index,
        params=dict(case.params),
        lhs=None if first["lhs"] is None else format_complex(first["lhs"], ctx),
        rhs=None if first["rhs"] is None else format_complex(first["rhs"], ctx),
        abs_residual=None if first["diff"] is None else _format_residual(first["diff"]),
        rel_residual=None if first["rel"] is None else _format_residual(first["rel"]),
        verdict=verdict,
        terms=first["terms"],
        diagnostics="; ".join(notes),
        precision_bits=bits,
        errors=first["errors"],
        wall_ms=round(elapsed, 3) if timings else None,
    )


# ---------------------------------------------------------------------------
# suites


@lru_cache(maxsize=16)
def _context_from(settings: tuple) -> PrecisionContext:
    return make_context(*settings)


def _settings(ctx: PrecisionContext) -> tuple:
    return (ctx.precision_bits, ctx.tolerance_digits, ctx.max_terms, ctx.max_window, ctx.pole_guard)


def _run_task(task) -> VerificationRecord:
    identity_id, index, params, settings, options, perturb, confirm, timings = task
    ctx = _context_from(settings)
    try:
        case = instantiate(identity_id, params, ctx, index)
    except DomainError as exc:
        return VerificationRecord(identity_id, index, dict(params), None, None, None, None,
                                  "inconclusive", {"lhs": None, "rhs": None}, f"domain: {exc}")
    return check_case(case, options, perturb=perturb, confirm=confirm, timings=timings)


@dataclass
class Report:
    config: dict
    started_at: str
    records: list
    experiments: dict = field(default_factory=dict)
    timings: bool = False

    def summary(self) -> dict:
        counts = {v: 0 for v in VERDICTS}
        per_id: dict = {}
        max_rel = None
        for rec in self.records:
            counts[rec.verdict] += 1
            entry = per_id.setdefault(rec.id, {"total": 0, **{v: 0 for v in VERDICTS}, "max_rel_residual": None})
            entry["total"] += 1
            entry[rec.verdict] += 1
            if rec.rel_residual is not None:
                if entry["max_rel_residual"] is None or float(rec.rel_residual) > float(entry["max_rel_residual"]):
                    entry["max_rel_residual"] = rec.rel_residual
                if max_rel is None or float(rec.rel_residual) > float(max_rel):
                    max_rel = rec.rel_residual
            if self.timings and rec.wall_ms is not None:
                entry["wall_ms"] = round(entry.get("wall_ms", 0.0) + rec.wall_ms, 3)
        for entry in per_id.values():
            entry["pass_rate"] = round(entry["pass"] / entry["total"], 6) if entry["total"] else None
        out = {**counts, "total": len(self.records), "max_rel_residual": max_rel, "per_id": per_id}
        if self.experiments:
            out["experiments"] = self.experiments
        return out

    @property
    def counts(self) -> dict:
        s = self.summary()
        return {v: s[v] for v in VERDICTS}

    def exit_code(self) -> int:
        c = self.counts
        if c["fail"]:
            return 1
        if c["inconclusive"]:
            return 2
        return 0

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "started_at": self.started_at,
            "records": [r.to_dict() for r in self.records],
            "summary": self.summary(),
        }


def run_suite(ids, samples_per_id: int, seed: int = 0, ctx: PrecisionContext | None = None,
              options: dict | None = None, *, jobs: int = 1, confirm: bool = True,
              perturb: float | None = None, timings: bool = False,
              experiments: bool = True) -> Report:
    """Check ``samples_per_id`` seeded samples of every id.

    Records are ordered by (registry order, sample index) whatever ``jobs``
    is, so equal inputs give equal reports.  When ``E2`` is among the ids the
    phase-variant experiment is attached under ``summary.experiments``.
    """
    ctx = ctx or default_context()
    ids = resolve_ids(ids)
    opts = dict(DEFAULT_OPTIONS)
    opts.update(options or {})
    started = _dt.datetime.now(_dt.timezone.utc).replace(microsecond=0).isoformat()
    tasks = []
    for identity_id in ids:
        for index in range(samples_per_id):
            params = sample_params(identity_id, seed, index)
            tasks.append((identity_id, index, params, _settings(ctx), opts, perturb, confirm, timings))
    if jobs and jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        records = [_run_task(t) for t in tasks]
    config = {
        "context": ctx.describe(),
        "ids": ids,
        "samples_per_id": samples_per_id,
        "seed": seed,
        "options": opts,
        "confirm_extra_bits": CONFIRM_EXTRA_BITS if confirm else 0,
        "perturb": perturb,
    }
    report = Report(config, started, records, timings=timings)
    if experiments and "E2" in ids and samples_per_id > 0:
        samples = [t[2] for t in tasks if t[0] == "E2"]
        report.experiments["e2_phase"] = e2_phase_experiment(samples, ctx)
    return report


def e2_phase_experiment(samples: list, ctx: PrecisionContext | None = None) -> dict:
    """Check both readings of the (e2) phase exponent on the same samples.

    Reports per-variant pass counts, whether the variants produced
    bit-identical right sides, and the variant selected (the unique one
    passing on every sample, else ``None``).
    """
    ctx = ctx or default_context()
    spec = get_spec("E2")
    results = {v: {"pass": 0, "total": 0, "max_rel_residual": None} for v in E2_PHASES}
    identical = True
    for params in samples:
        values = {}
        lhs, _ = _evaluate_side(spec.lhs, params, ctx, {})
        for variant in E2_PHASES:
            rhs, _ = _evaluate_side(spec.rhs, params, ctx, {"e2_phase": variant})
            values[variant] = rhs.value
            _, _, rel, verdict = _residual_verdict(lhs, rhs, ctx, None)
            entry = results[variant]
            entry["total"] += 1
            entry["pass"] += verdict == "pass"
            if entry["max_rel_residual"] is None or rel > float(entry["max_rel_residual"]):
                entry["max_rel_residual"] = _format_residual(rel)
        first = values[E2_PHASES[0]]
        identical = identical and all(v == first for v in values.values())
    passing = [v for v in E2_PHASES if results[v]["total"] and results[v]["pass"] == results[v]["total"]]
    return {
        "variants": results,
        "passing": passing,
        "selected": passing[0] if len(passing) == 1 else None,
        "bit_identical": identical,
        "default": DEFAULT_OPTIONS["e2_phase"],
        "note": ("both exponent readings agree term by term because zeta_r^(r k_r) = 1"
                 if identical else ""),
    }


def default_jobs() -> int:
    return os.cpu_count() or 1
