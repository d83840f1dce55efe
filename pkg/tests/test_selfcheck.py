"""Brute-force validation suite: catalog shape and case mechanics."""
from __future__ import annotations

from faircoplan.selfcheck import (
    CaseResult,
    build_catalog,
    check_instance,
    random_instance,
)


class TestCatalog:
    def test_has_named_handmade_instances(self):
        names = [inst.name for inst in build_catalog()]
        assert len(names) == len(set(names))
        assert len(names) >= 10

    def test_covers_every_fairness_weight(self):
        gammas = {inst.gamma for inst in build_catalog()}
        assert {0.0, 1.0, 5.0} <= gammas

    def test_includes_contention_and_occupancy(self):
        catalog = build_catalog()
        assert any(len(inst.requests) == 2 for inst in catalog)
        assert any(inst.base for inst in catalog)
        assert any(inst.now > 0 for inst in catalog)


class TestRandomInstances:
    def test_same_seed_same_instance(self):
        a, b = random_instance(42), random_instance(42)
        assert a.name == b.name
        assert a.requests == b.requests
        assert a.gamma == b.gamma
        assert a.grid.config == b.grid.config

    def test_seeds_vary_the_draw(self):
        draws = {random_instance(s).requests for s in range(10)}
        assert len(draws) > 1


class TestCheckInstance:
    def test_catalog_head_passes_every_case(self):
        for inst in build_catalog()[:4]:
            for case in check_instance(inst):
                assert case.passed, case.line()

    def test_case_lines_are_grep_friendly(self):
        ok = CaseResult("choices: toy", True)
        bad = CaseResult("trajectory: toy/f0", False, "0.3 != 0.0")
        assert ok.line() == "PASS  choices: toy"
        assert bad.line() == "FAIL  trajectory: toy/f0  (0.3 != 0.0)"
