import dataclasses
import math
from pathlib import Path

import numpy as np
import pytest

from hilbundle import suites as S
from hilbundle.spec_io import load_spec, parse_spec
from hilbundle.suites import ANCHOR_MANIFEST, SUITES, Outcome, Suite, run_suites, select

SPECS = Path(__file__).resolve().parent.parent / "specs"


@pytest.fixture(scope="module")
def identity_spec():
    return load_spec(SPECS / "identity_1d.yaml")


@pytest.fixture(scope="module")
def identity_reports(identity_spec):
    return run_suites(identity_spec)


def test_every_anchor_has_a_suite():
    anchors = {s.anchor for s in SUITES.values()} - {"plumbing"}
    assert anchors == set(ANCHOR_MANIFEST)
    assert all(s.anchor == "plumbing" for s in SUITES.values() if s.id.startswith("plumbing-"))


def test_suite_kinds():
    assert {s.kind for s in SUITES.values()} <= {"algebraic", "fd", "order", "plumbing"}


def test_identity_spec_all_pass(identity_reports):
    failed = [(r.suite, r.residual, r.tolerance, r.detail) for r in identity_reports if not r.passed]
    assert not failed
    assert len(identity_reports) == len(SUITES)
    assert [r.suite for r in identity_reports] == sorted(r.suite for r in identity_reports)


def test_reports_are_well_formed(identity_reports):
    for r in identity_reports:
        assert r.cases > 0, r.suite
        assert math.isfinite(r.residual) and r.residual >= 0
        assert r.relation in ("<=", ">=")
        assert r.wall_time >= 0


def test_filter(identity_spec):
    reports = run_suites(identity_spec, "eq-2.2*")
    assert reports and all(r.suite.startswith("eq-2.2") for r in reports)
    both = select("eq-2.2*, plumbing-*")
    assert {s.id for s in both} == {s.id for s in select("eq-2.2*")} | {s.id for s in select("plumbing-*")}
    assert select("no-such-suite") == []


def test_seed_determinism(identity_spec):
    a = run_suites(identity_spec, "eq-2.1*", seed=9)
    b = run_suites(identity_spec, "eq-2.1*", seed=9, threads=1)
    assert [(r.suite, r.residual, r.cases) for r in a] == [(r.suite, r.residual, r.cases) for r in b]


def test_seed_changes_samples():
    spec = load_spec(SPECS / "diagonal_phase_2d.yaml")
    [a] = run_suites(spec, "eq-2.29-limit-vs-exact", seed=1)
    [b] = run_suites(spec, "eq-2.29-limit-vs-exact", seed=2)
    assert a.residual != b.residual


def test_suite_rng_independent_of_order():
    a = S.suite_rng(5, "eq-2.2-x").standard_normal(3)
    S.suite_rng(5, "eq-2.3-x").standard_normal(3)
    np.testing.assert_array_equal(a, S.suite_rng(5, "eq-2.2-x").standard_normal(3))


def test_sample_overrides(identity_spec):
    spec = dataclasses.replace(identity_spec, sample_overrides={"eq-2.1-*": 3})
    s = select("eq-2.1-*")[0]
    assert S.sample_count(spec, s) == 3
    assert S.sample_count(identity_spec, s) == identity_spec.samples


def test_exception_becomes_failed_report(identity_spec, monkeypatch):
    def boom(ctx):
        raise RuntimeError("kaput")
    monkeypatch.setitem(SUITES, "zz-broken", Suite("zz-broken", "2.2", "algebraic", boom))
    [r] = run_suites(identity_spec, "zz-broken")
    assert not r.passed and r.verdict == "fail"
    assert r.residual == float("inf")
    assert "kaput" in r.detail


def test_negative_relation(identity_spec, monkeypatch):
    monkeypatch.setitem(SUITES, "zz-ge", Suite("zz-ge", "2.2", "fd",
                                               lambda ctx: Outcome(1e-3, 1, tolerance=1e-2, relation=">=")))
    [r] = run_suites(identity_spec, "zz-ge")
    assert not r.passed


def test_outcome_passed_flag_overrides(identity_spec, monkeypatch):
    monkeypatch.setitem(SUITES, "zz-flag", Suite("zz-flag", "2.2", "algebraic",
                                                 lambda ctx: Outcome(0.0, 1, passed=False)))
    [r] = run_suites(identity_spec, "zz-flag")
    assert not r.passed


def test_thread_count(monkeypatch):
    monkeypatch.setenv(S.THREADS_ENV, "3")
    assert S.thread_count() == 3
    monkeypatch.setenv(S.THREADS_ENV, "junk")
    assert 1 <= S.thread_count() <= 4


def test_threads_do_not_change_results(identity_spec):
    a = run_suites(identity_spec, "eq-2.2*", threads=1)
    b = run_suites(identity_spec, "eq-2.2*", threads=4)
    assert [(r.suite, r.residual) for r in a] == [(r.suite, r.residual) for r in b]


def test_order_steps():
    assert S.ORDER_STEPS[0] / S.ORDER_STEPS[-1] == 16


def test_detects_broken_trivializer_derivative():
    # a wrong exact derivative must make the exact-vs-limit comparisons fail
    spec = load_spec(SPECS / "diagonal_phase_1d.yaml")
    bundle = spec.build()
    triv = bundle.triv
    broken = dataclasses.replace(triv, dL=lambda x, mu: 1.01 * triv.dL(x, mu))
    bundle = dataclasses.replace(bundle, triv=broken)
    reports = [S.run_one(bundle, s) for s in select("eq-2.29-limit-vs-exact")]
    assert reports and not any(r.passed for r in reports)


def test_richardson_shrinks_truncation_error():
    """With a coarse step, extra Richardson levels shrink every truncation-dominated residual."""
    base = load_spec(SPECS / "diagonal_phase_2d.yaml")
    fd = ",".join(s.id for s in SUITES.values() if s.kind == "fd")
    runs = []
    for levels in (0, 1, 2):
        scheme = base.scheme.replace(epsilon=1e-2, richardson_levels=levels)
        spec = dataclasses.replace(base, scheme=scheme)
        runs.append({r.suite: r for r in run_suites(spec, fd)})
    checked = 0
    for sid, r0 in runs[0].items():
        if r0.relation != "<=" or r0.residual <= 1e-10:
            continue
        checked += 1
        assert runs[1][sid].residual < r0.residual, sid
        assert runs[2][sid].residual < runs[1][sid].residual, sid
    assert checked >= 5
