"""Command-line front end: ``qverify {eval,verify,oracle,list}``.

Exit codes: 0 pass or converged, 1 identity failure, 2 inconclusive or not
converged, 3 domain or pole error, 64 usage error.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from . import __version__
from .catalog import registry, resolve_ids
from .kernel import (
    DEFAULT_MAX_TERMS,
    DEFAULT_MAX_WINDOW,
    DEFAULT_PRECISION_BITS,
    DEFAULT_TOLERANCE_DIGITS,
    DomainError,
    PoleError,
    make_context,
    parse_complex,
)
from .multisection import E2_PHASES, coefficient_oracle, multisum_b1, multisum_u1
from .pochhammer import SeriesValue, poch_finite, poch_infinite
from .report import FORMATS, render_json, render_report, render_rows
from .series import eval_1psi1, eval_2phi1, eval_A, eval_B, eval_F
from .verify import default_jobs, format_complex, run_suite

EXIT_OK, EXIT_FAIL, EXIT_INCONCLUSIVE, EXIT_DOMAIN, EXIT_USAGE = 0, 1, 2, 3, 64

# config-file keys and the flag each one stands in for
_CONFIG_KEYS = {
    "precision": int, "tolerance": int, "max_terms": int, "max_window": int,
    "seed": int, "format": str, "jobs": int, "e2_phase": str, "samples": int,
}
_DEFAULTS = {
    "precision": DEFAULT_PRECISION_BITS, "tolerance": DEFAULT_TOLERANCE_DIGITS,
    "max_terms": DEFAULT_MAX_TERMS, "max_window": DEFAULT_MAX_WINDOW, "seed": 0,
    "e2_phase": "r-1", "samples": 3,
}

# series name -> (required params, optional params, evaluator)
_SERIES = {
    "A": (("alpha", "a", "q", "t"), (), lambda p, c: eval_A(p["alpha"], p["a"], p["q"], p["t"], c)),
    "B": (("alpha", "a", "b", "q", "x"), (), lambda p, c: eval_B(p["alpha"], p["a"], p["b"], p["q"], p["x"], c)),
    "F": (("a", "c", "q", "z"), (), lambda p, c: eval_F(p["a"], p["c"], p["q"], p["z"], c)),
    "2phi1": (("a", "b", "c", "q", "z"), (), lambda p, c: eval_2phi1(p["a"], p["b"], p["c"], p["q"], p["z"], c)),
    "1psi1": (("a", "b", "q", "z"), (), lambda p, c: eval_1psi1(p["a"], p["b"], p["q"], p["z"], c)),
    "poch": (("a", "q", "n"), (), lambda p, c: SeriesValue.exact(poch_finite(p["a"], p["q"], p["n"], c))),
    "poch-inf": (("a", "q"), (), lambda p, c: poch_infinite(p["a"], p["q"], c)),
    "multisum-u1": (("a", "q", "r", "n"), (),
                    lambda p, c: SeriesValue.exact(multisum_u1(p["a"], p["q"], p["r"], p["n"], c))),
    "multisum-b1": (("a", "b", "q", "r", "n"), ("K",),
                    lambda p, c: multisum_b1(p["a"], p["b"], p["q"], p["r"], p["n"], c, K=p.get("K"))),
}
_INT_PARAMS = {"n", "r", "K", "N"}
_PARAM_FLAGS = ("a", "b", "c", "q", "t", "x", "z", "n", "r", "K", "alpha")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(parser: argparse.ArgumentParser, default_format: str) -> None:
    g = parser.add_argument_group("context and output")
    g.add_argument("--precision", type=int, help=f"working precision in bits (default {DEFAULT_PRECISION_BITS})")
    g.add_argument("--tolerance", type=int, help=f"decimal digits of agreement (default {DEFAULT_TOLERANCE_DIGITS})")
    g.add_argument("--max-terms", dest="max_terms", type=int, help="cap on terms per one-sided sum")
    g.add_argument("--max-window", dest="max_window", type=int, help="cap on bilateral multi-sum windows")
    g.add_argument("--seed", type=int, help="sampling seed (default 0)")
    g.add_argument("--format", choices=FORMATS, help=f"output format (default {default_format})")
    g.add_argument("--out", help="write output to this file instead of stdout")
    g.add_argument("--config", help="key=value file; flags override it")
    g.add_argument("--jobs", type=int, help="worker processes for suites (default: CPU count)")
    g.add_argument("--e2-phase", dest="e2_phase", choices=E2_PHASES, help="phase exponent reading for E2")
    g.add_argument("--timings", action="store_true", help="record wall times (reports stop being byte-stable)")
    parser.set_defaults(default_format=default_format)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qverify", description="High-precision q-series evaluation and identity verification.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p_eval = sub.add_parser("eval", help="evaluate one series")
    p_eval.add_argument("series", help="one of: " + ", ".join(_SERIES))
    p_eval.add_argument("assignments", nargs="*", metavar="key=value", help="parameters as key=value")
    for name in _PARAM_FLAGS:
        p_eval.add_argument(f"--{name}", dest=f"p_{name}")
    _common(p_eval, "text")

    p_verify = sub.add_parser("verify", help="check identities on seeded samples")
    p_verify.add_argument("--ids", default="all", help="comma-separated ids or 'all'")
    p_verify.add_argument("--samples", type=int, help="samples per id (default 3)")
    p_verify.add_argument("--perturb", type=float, help="relative perturbation added to every right side")
    p_verify.add_argument("--no-confirm", dest="confirm", action="store_false",
                          help="skip the second-precision confirmation of passes")
    _common(p_verify, "json")

    p_oracle = sub.add_parser("oracle", help="coefficient convolution check of the multisection lemma")
    p_oracle.add_argument("--r", type=int, required=True)
    p_oracle.add_argument("--N", type=int, required=True)
    p_oracle.add_argument("--a", required=True)
    p_oracle.add_argument("--q", required=True)
    _common(p_oracle, "text")

    p_list = sub.add_parser("list", help="print the identity manifest")
    _common(p_list, "text")
    return parser


def _read_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}") from exc
    out = {}
    for num, raw in enumerate(lines, 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{num}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{num}: unknown key {key!r}")
        try:
            out[key] = _CONFIG_KEYS[key](value)
        except ValueError as exc:
            raise UsageError(f"{path}:{num}: bad value for {key}: {value!r}") from exc
    return out


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge flags over the config file over the defaults."""
    merged = dict(_DEFAULTS)
    merged["format"] = args.default_format
    merged["jobs"] = default_jobs()
    if args.config:
        merged.update(_read_config(args.config))
    for key in _CONFIG_KEYS:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if merged["format"] not in FORMATS:
        raise UsageError(f"format must be one of {FORMATS}")
    if merged["e2_phase"] not in E2_PHASES:
        raise UsageError(f"e2_phase must be one of {E2_PHASES}")
    return merged


def _context(cfg: dict):
    try:
        return make_context(cfg["precision"], cfg["tolerance"], cfg["max_terms"], cfg["max_window"])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _eval_params(args) -> dict:
    raw = {}
    for item in args.assignments:
        if "=" not in item:
            raise UsageError(f"expected key=value, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    for name in _PARAM_FLAGS:
        value = getattr(args, f"p_{name}")
        if value is not None:
            raw[name] = value
    return raw


def _plain(value, ctx) -> str:
    digits = ctx.tolerance_digits + 5
    re_s = ctx.mp.nstr(value.real, digits)
    if value.imag == 0:
        return re_s
    im_s = ctx.mp.nstr(value.imag, digits)
    return f"{re_s}{'' if im_s.startswith('-') else '+'}{im_s}i"


def cmd_eval(args, cfg) -> int:
    if args.series not in _SERIES:
        raise UsageError(f"unknown series {args.series!r}; choose from {', '.join(_SERIES)}")
    required, optional, fn = _SERIES[args.series]
    raw = _eval_params(args)
    missing = [k for k in required if k not in raw]
    if missing:
        raise UsageError(f"{args.series} needs {', '.join(missing)}")
    unknown = [k for k in raw if k not in required + optional]
    if unknown:
        raise UsageError(f"{args.series} does not take {', '.join(unknown)}")
    params = {}
    for key, value in raw.items():
        try:
            if key in _INT_PARAMS:
                params[key] = int(value)
            elif key == "alpha":
                params[key] = Fraction(value)
            else:
                parse_complex(value)
                params[key] = value
        except ValueError as exc:
            raise UsageError(f"malformed parameter {key}={value!r}") from exc
    ctx = _context(cfg)
    try:
        result = fn(params, ctx)
    except (DomainError, PoleError) as exc:
        sys.stderr.write(f"qverify: {exc}\n")
        return EXIT_DOMAIN
    doc = {
        "series": args.series,
        "params": {k: str(v) for k, v in raw.items()},
        "value": format_complex(result.value, ctx),
        "abs_error_estimate": f"{float(result.abs_error_estimate):.6e}",
        "terms_used": result.terms_used,
        "converged": result.converged,
        "diagnostics": result.diagnostics,
    }
    fmt = cfg["format"]
    if fmt == "json":
        text = render_json(doc)
    elif fmt == "csv":
        row = {**doc, "value_re": doc["value"]["re"], "value_im": doc["value"]["im"]}
        text = render_rows([row], "csv", ["series", "value_re", "value_im", "abs_error_estimate",
                                          "terms_used", "converged", "diagnostics"])
    else:
        text = (f"value: {_plain(result.value, ctx)}\n"
                f"abs_error_estimate: {doc['abs_error_estimate']}\n"
                f"terms_used: {result.terms_used}\n"
                f"converged: {str(result.converged).lower()}\n"
                + (f"diagnostics: {result.diagnostics}\n" if result.diagnostics else ""))
    _emit(text, args.out)
    return EXIT_OK if result.converged else EXIT_INCONCLUSIVE


def cmd_verify(args, cfg) -> int:
    try:
        ids = resolve_ids(args.ids)
    except KeyError as exc:
        raise UsageError(exc.args[0]) from exc
    if not ids:
        raise UsageError("no identity ids given")
    if cfg["samples"] < 0:
        raise UsageError("--samples must be nonnegative")
    ctx = _context(cfg)
    report = run_suite(ids, cfg["samples"], cfg["seed"], ctx, {"e2_phase": cfg["e2_phase"]},
                       jobs=max(1, cfg["jobs"]), confirm=args.confirm, perturb=args.perturb,
                       timings=args.timings)
    _emit(render_report(report.to_dict(), cfg["format"]), args.out)
    return report.exit_code()


def cmd_oracle(args, cfg) -> int:
    if not 2 <= args.r <= 4:
        raise UsageError("--r must lie in 2..4")
    if not 0 <= args.N <= 64:
        raise UsageError("--N must lie in 0..64")
    for key in ("a", "q"):
        try:
            parse_complex(getattr(args, key))
        except ValueError as exc:
            raise UsageError(f"malformed parameter {key}={getattr(args, key)!r}") from exc
    ctx = _context(cfg)
    try:
        pairs = coefficient_oracle(args.a, args.q, args.r, args.N, ctx)
    except (DomainError, PoleError) as exc:
        sys.stderr.write(f"qverify: {exc}\n")
        return EXIT_DOMAIN
    rows, ok = [], True
    for n, (computed, claimed) in enumerate(pairs):
        diff = abs(computed - claimed)
        ok = ok and diff <= ctx.eps
        rows.append({"n": n, "computed": format_complex(computed, ctx), "claimed": format_complex(claimed, ctx),
                     "abs_diff": f"{float(diff):.6e}"})
    if cfg["format"] == "json":
        text = render_json(rows)
    else:
        flat = [{"n": r["n"], "computed_re": r["computed"]["re"], "computed_im": r["computed"]["im"],
                 "claimed_re": r["claimed"]["re"], "claimed_im": r["claimed"]["im"], "abs_diff": r["abs_diff"]}
                for r in rows]
        text = render_rows(flat, cfg["format"])
    _emit(text, args.out)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_list(args, cfg) -> int:
    rows = [spec.manifest() for spec in registry()]
    if cfg["format"] == "text":
        text = "".join(f"{r['id']}\t{r['anchor']}\t{','.join(r['params'])}\t{r['domain']}\n" for r in rows)
    else:
        text = render_rows(rows, cfg["format"], ["id", "anchor", "kind", "params", "domain"])
    _emit(text, args.out)
    return EXIT_OK


_COMMANDS = {"eval": cmd_eval, "verify": cmd_verify, "oracle": cmd_oracle, "list": cmd_list}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a command is required: eval, verify, oracle or list")
        cfg = resolve_config(args)
        return _COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        sys.stderr.write(f"qverify: usage error: {exc}\n")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
