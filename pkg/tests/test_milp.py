"""Model container and both solver backends on small known problems."""
from __future__ import annotations

import pytest

from faircoplan import milp
from faircoplan.milp import (
    BranchAndBoundBackend,
    HighsBackend,
    Model,
    SolveLimits,
    SolveResult,
    check_solution,
    resolve_backend,
    solve,
    write_lp,
)

BACKENDS = ["highs", "branch-bound"]


@pytest.mark.parametrize("backend", BACKENDS)
class TestBackends:
    def test_knapsack_maximum(self, backend):
        # values 6,5,4 / weights 3,2,2 / budget 4 -> pick items 1 and 2
        model = Model(name="knapsack", sense="max")
        x = [model.binary(f"x{i}") for i in range(3)]
        model.add({x[0]: 3.0, x[1]: 2.0, x[2]: 2.0}, "<=", 4.0)
        model.set_objective({x[0]: 6.0, x[1]: 5.0, x[2]: 4.0})
        result = solve(model, backend=backend)
        assert result.status == milp.OPTIMAL
        assert result.objective == pytest.approx(9.0)
        assert result.values["x1"] == 1.0 and result.values["x2"] == 1.0

    def test_equality_with_continuous_variable(self, backend):
        model = Model(name="mix", sense="min")
        x = model.binary("x")
        y = model.continuous("y", lb=0.0, ub=10.0)
        model.add({x: 2.0, y: 1.0}, "=", 3.0)
        model.set_objective({x: 1.0, y: 1.0})
        result = solve(model, backend=backend)
        assert result.status == milp.OPTIMAL
        # x=1, y=1 costs 2; x=0, y=3 costs 3
        assert result.objective == pytest.approx(2.0)
        assert result.values["x"] == 1.0
        assert result.values["y"] == pytest.approx(1.0)

    def test_infeasible_reported(self, backend):
        model = Model(name="bad", sense="min")
        x = model.binary("x")
        model.add({x: 1.0}, ">=", 2.0)
        model.set_objective({x: 1.0})
        assert solve(model, backend=backend).status == milp.INFEASIBLE

    def test_objective_offset_carried_through(self, backend):
        model = Model(name="offset", sense="min")
        x = model.binary("x")
        model.add({x: 1.0}, ">=", 1.0)
        model.set_objective({x: 2.0}, offset=5.0)
        result = solve(model, backend=backend)
        assert result.objective == pytest.approx(7.0)

    def test_empty_model_is_trivially_optimal(self, backend):
        model = Model(name="empty", sense="min")
        model.set_objective({}, offset=1.5)
        result = solve(model, backend=backend)
        assert result.status == milp.OPTIMAL
        assert result.objective == pytest.approx(1.5)


class TestModelContainer:
    def test_duplicate_variable_rejected(self):
        model = Model(name="dup")
        model.binary("x")
        with pytest.raises(ValueError):
            model.binary("x")

    def test_unknown_variable_in_constraint_rejected(self):
        model = Model(name="unknown")
        model.binary("x")
        with pytest.raises(ValueError):
            model.add({"zzz": 1.0}, "<=", 1.0)

    def test_empty_constraint_rejected(self):
        model = Model(name="empty-row")
        with pytest.raises(ValueError):
            model.add({}, "<=", 1.0)

    def test_check_solution_flags_violations(self):
        model = Model(name="check")
        x = model.binary("x")
        model.add({x: 1.0}, "<=", 0.0, label="cap")
        assert check_solution(model, {x: 0.0}) == []
        assert any("cap" in v for v in check_solution(model, {x: 1.0}))
        assert any("not integral" in v for v in check_solution(model, {x: 0.5}))

    def test_write_lp_smoke(self, tmp_path):
        model = Model(name="dump", sense="max")
        x = model.binary("x.f0.r0001.3")
        y = model.continuous("y", lb=0.0, ub=2.0)
        model.add({x: 1.0, y: -1.0}, "<=", 1.0, label="row")
        model.set_objective({x: 1.0, y: 0.5})
        path = tmp_path / "model.lp"
        write_lp(model, str(path))
        text = path.read_text()
        assert "Maximize" in text or "maximize" in text.lower()
        assert "x.f0.r0001.3" in text


class TestBranchBoundGuard:
    def test_refuses_oversized_models(self):
        model = Model(name="big", sense="max")
        xs = [model.binary(f"x{i}") for i in range(31)]
        model.set_objective({x: 1.0 for x in xs})
        result = BranchAndBoundBackend().solve(model)
        assert result.status == milp.ERROR
        assert "31" in result.detail


class TestResolveBackend:
    def test_default_is_highs(self, monkeypatch):
        monkeypatch.delenv(milp.ENV_BACKEND, raising=False)
        assert isinstance(resolve_backend(), HighsBackend)

    def test_env_variable_selects_backend(self, monkeypatch):
        monkeypatch.setenv(milp.ENV_BACKEND, "branch-bound")
        assert isinstance(resolve_backend(), BranchAndBoundBackend)

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError, match="unknown solver backend"):
            resolve_backend("simplex-9000")

    def test_object_with_solve_passes_through(self):
        class Fake:
            def solve(self, model, limits=None):
                return SolveResult(status=milp.OPTIMAL, objective=0.0)

        fake = Fake()
        assert resolve_backend(fake) is fake

    def test_object_without_solve_rejected(self):
        with pytest.raises(ValueError, match="not a solver backend"):
            resolve_backend(42)


class TestSolveRecheck:
    def test_infeasible_point_from_backend_is_rejected(self):
        class Liar:
            def solve(self, model, limits=None):
                return SolveResult(
                    status=milp.OPTIMAL, objective=99.0,
                    values={v.name: 1.0 for v in model.variables},
                )

        model = Model(name="liar-check", sense="max")
        x = model.binary("x")
        model.add({x: 1.0}, "<=", 0.0)
        model.set_objective({x: 1.0})
        result = solve(model, backend=Liar())
        assert result.status == milp.ERROR
        assert "infeasible point" in result.detail
