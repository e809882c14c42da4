import pytest

from bethe_flow import settings
from bethe_flow.checks import CHECKS, run_checks


def test_every_invariant_holds_on_the_fixtures(fixture_lattice):
    report = run_checks(fixture_lattice, seed=3, trials=3)
    assert [r.name for r in report.results] == [name for name, _, _ in CHECKS]
    failed = [(r.name, r.worst) for r in report.results if not r.passed]
    assert report.passed, failed


def test_same_seed_same_report(triangle_loop):
    assert run_checks(triangle_loop, 11, 2).to_json() == run_checks(triangle_loop, 11, 2).to_json()


def test_invariants_on_the_trivial_lattice(empty_lattice):
    assert run_checks(empty_lattice, 0, 2).passed


def test_oversized_oracle_checks_are_skipped(diamond, monkeypatch):
    monkeypatch.setattr(settings, 'ORACLE_MAX_STATES', 4)
    report = run_checks(diamond, 0, 2)
    skipped = [r for r in report.results if r.skipped]
    assert skipped
    assert all(r.passed and 'limit is 4' in r.detail for r in skipped)
    assert report.passed


@pytest.mark.parametrize('name,tolerance', [('mobius_inversion', 0.0), ('dimension_identity', 0.0)])
def test_exact_invariants_have_zero_tolerance(name, tolerance):
    assert dict((n, t) for n, _, t in CHECKS)[name] == tolerance
