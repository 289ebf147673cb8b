import json

import pytest

from qverify.catalog import (
    F7_prefactor,
    F7_side,
    PRIMARY_IDS,
    f4_finite_side,
    gaussian_series,
    instantiate,
    registry,
    resolve_ids,
    sample_params,
)
from qverify.kernel import DomainError
from qverify.pochhammer import poch_finite
from qverify.series import F_terms
from qverify.verify import check_case, mutation_delta, run_suite


def test_registry_ids_and_manifest():
    ids = [s.id for s in registry()]
    assert len(ids) == 21 and len(set(ids)) == 21
    assert set(PRIMARY_IDS) <= set(ids)
    assert [i for i in ids if i.startswith("LEM1")] == [f"LEM1-{k}" for k in range(1, 6)]
    for spec in registry():
        m = spec.manifest()
        assert m["id"] == spec.id and m["anchor"]
        json.dumps(m)


def test_resolve_ids():
    assert resolve_ids("all") == [s.id for s in registry()]
    assert resolve_ids("RR2,RR1,RR2") == ["RR2", "RR1"]
    with pytest.raises(KeyError):
        resolve_ids("RR1,NOPE")


def test_samples_are_admissible_and_reproducible(ctx):
    for spec in registry():
        for index in range(3):
            p = sample_params(spec.id, 5, index)
            assert p == sample_params(spec.id, 5, index)
            assert not spec.violations(p, ctx)
    assert sample_params("RR1", 5, 0) != sample_params("RR1", 6, 0)


def test_domain_rejections_name_the_constraint(ctx):
    with pytest.raises(DomainError, match=r"\|b/a\|"):
        instantiate("PSI11", {"a": "0.9", "b": "0.1", "q": "0.4", "z": "0.05"}, ctx)
    with pytest.raises(DomainError, match="x ≠ q\\^l"):
        instantiate("F7", {"q": "0.4", "x": "0.4", "m": 2, "n": 3}, ctx)
    with pytest.raises(DomainError, match="q"):
        instantiate("RR1", {"q": "1.2"}, ctx)


def test_rr1_pass_and_perturbed_fail(ctx):
    case = instantiate("RR1", {"q": "0.3"}, ctx)
    rec = check_case(case)
    assert rec.verdict == "pass" and rec.rel_residual_value <= 1e-30
    bad = check_case(case, perturb=1e-10)
    assert bad.verdict == "fail"
    assert check_case(case, perturb=mutation_delta(ctx)).verdict == "fail"


def test_pole_gives_inconclusive_record(ctx):
    case = instantiate("PSI11", {"a": "0.4", "b": "0.1", "q": "0.4", "z": "0.9"}, ctx)
    rec = check_case(case)
    assert rec.verdict == "inconclusive"
    assert "pole" in rec.diagnostics.lower()


def test_run_suite_small():
    report = run_suite(["RR1", "RR2"], 4, seed=42)
    assert report.counts == {"pass": 8, "fail": 0, "inconclusive": 0}
    assert report.exit_code() == 0
    assert [(r.id, r.index) for r in report.records] == [(i, k) for i in ("RR1", "RR2") for k in range(4)]
    assert all(r.wall_ms is None for r in report.records)


def test_run_suite_empty():
    report = run_suite([], 3, seed=1)
    assert report.records == [] and report.exit_code() == 0
    assert report.summary()["total"] == 0


def test_run_suite_deterministic_modulo_timestamp():
    a = run_suite(["QBINOM", "F7"], 2, seed=9).to_dict()
    b = run_suite(["QBINOM", "F7"], 2, seed=9).to_dict()
    a.pop("started_at"), b.pop("started_at")
    assert a == b


def test_f2_at_c_equal_z_is_trivially_symmetric(ctx):
    a, q, z = (ctx.num(v) for v in ("0.3+0.2i", "0.5", "0.6-0.1i"))
    lhs = F_terms(a, z, q, z, ctx)
    rhs = F_terms(a, z, q, z, ctx)
    for _ in range(20):
        assert next(lhs) == next(rhs)
    case = instantiate("F2", {"a": "0.3+0.2i", "c": "0.6-0.1i", "q": "0.5", "z": "0.6-0.1i"}, ctx)
    assert check_case(case).verdict == "pass"


def test_f7_diagonal_prefactor_is_exactly_one(ctx):
    q, x = ctx.num("0.4+0.1i"), ctx.num("0.7")
    for m in range(6):
        assert F7_prefactor(m, m, x, q, ctx) == 1
    lhs, rhs = F7_side(3, 5, x, q, ctx).value, F7_side(5, 3, x, q, ctx).value * F7_prefactor(3, 5, x, q, ctx)
    assert abs(lhs - rhs) < 10 ** -30


def test_f4_variants(ctx):
    q, x = ctx.num("0.4"), ctx.num("0.5+0.2i")
    assert f4_finite_side(0, x, q, ctx).value == 1
    assert gaussian_series(0, x, q, ctx).value == 1
    for n in (1, 4, 9):
        series = gaussian_series(n, x, q, ctx).value
        assert abs(series - 1 / poch_finite(x, q, n, ctx)) < 10 ** -30
        assert abs(f4_finite_side(n, x, q, ctx).value - series) < 10 ** -30
        # the unshifted reading sums to 1/(x q^-n; q)_n instead
        printed = f4_finite_side(n, x, q, ctx, "unshifted").value
        assert abs(printed - 1 / poch_finite(x * q ** -n, q, n, ctx)) < 10 ** -25 * abs(printed)
        assert abs(printed - series) > 1e-3
    case = instantiate("F4", {"q": "0.4", "x": "0.5+0.2i", "n": 3}, ctx)
    assert check_case(case, {"f4_variant": "unshifted"}).verdict == "fail"
    assert check_case(case).verdict == "pass"


def test_c15r_single_prefactor_fails(ctx):
    case = instantiate("C15R", {"a": "0.6", "q": "0.3", "x": "0.7", "r": 2}, ctx)
    assert check_case(case).verdict == "pass"
    assert check_case(case, {"c15r_prefactor": "single"}).verdict == "fail"


@pytest.mark.parametrize("identity_id", [s.id for s in registry()])
def test_every_identity_passes_one_sample(identity_id):
    report = run_suite([identity_id], 1, seed=3, experiments=False)
    assert report.counts["pass"] == 1, report.records[0].diagnostics
