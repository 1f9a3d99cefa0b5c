import numpy as np
import pytest

from modules.analytic import ErrorTargets, lambda_hat
from modules.core import NoFeasiblePointError, NoRootError
from modules.model import BitChannelModel, EncryptionParams, ToleranceSpec
from modules.optimize import (
    Axis,
    AxisCaps,
    Binding,
    Method,
    algorithm1,
    axis_cap,
    axis_caps,
    check_conditions,
    grid_search,
)

GRID_CELL = 1.0 / 399


class TestAxisCaps:
    def test_design_instance(self, gaussian_model, design_tolerance):
        caps = axis_caps(gaussian_model, design_tolerance)
        assert caps.psi0_cap == pytest.approx(0.080, abs=5e-3)
        assert caps.psi1_cap == pytest.approx(0.100, abs=5e-3)
        assert caps.binding_psi0 is Binding.LAMBDA1
        assert caps.binding_psi1 is Binding.LAMBDA0

    def test_cap_reaches_tolerance(self, gaussian_model, design_tolerance):
        cap, binding = axis_cap(gaussian_model, design_tolerance, Axis.PSI1)
        lam0, lam1 = lambda_hat(gaussian_model, EncryptionParams(0.0, cap))
        assert lam0 == pytest.approx(design_tolerance.kappa0, abs=1e-8)
        assert lam1 <= design_tolerance.kappa1

    def test_axis_accepts_strings(self, gaussian_model, design_tolerance):
        assert axis_cap(gaussian_model, design_tolerance, 'psi0') == axis_cap(
            gaussian_model, design_tolerance, Axis.PSI0)

    def test_zero_tolerance(self, gaussian_model):
        cap, _ = axis_cap(gaussian_model, ToleranceSpec(0.0, 0.3), Axis.PSI0)
        assert cap == 0.0

    def test_unreachable_tolerance(self, gaussian_model):
        with pytest.raises(NoRootError) as info:
            axis_cap(gaussian_model, ToleranceSpec(1e6, 1e6), Axis.PSI1)
        assert info.value.supremum > 0.0

    def test_unreachable_constraint_does_not_bind(self, gaussian_model, design_tolerance):
        cap, binding = axis_cap(gaussian_model, ToleranceSpec(1e6, design_tolerance.kappa1), Axis.PSI0)
        assert binding is Binding.LAMBDA1
        assert cap == pytest.approx(axis_caps(gaussian_model, design_tolerance).psi0_cap)

    def test_caps_grow_with_tolerance(self, gaussian_model):
        small = axis_caps(gaussian_model, ToleranceSpec(0.05, 0.05))
        large = axis_caps(gaussian_model, ToleranceSpec(0.2, 0.2))
        assert small.psi0_cap < large.psi0_cap
        assert small.psi1_cap < large.psi1_cap


class TestConditions:
    def test_hold_on_design_instance(self, gaussian_model, design_tolerance):
        caps = axis_caps(gaussian_model, design_tolerance)
        report = check_conditions(gaussian_model, caps, tol=design_tolerance)
        assert report.c1_holds and report.c2_holds
        assert report.holds
        assert report.c2_violations == []
        assert report.points_checked > 0
        assert min(report.c1_margins) > 0.0

    def test_verdict_survives_finer_grid(self, gaussian_model, design_tolerance):
        caps = axis_caps(gaussian_model, design_tolerance)
        coarse = check_conditions(gaussian_model, caps, grid_resolution=200, tol=design_tolerance)
        fine = check_conditions(gaussian_model, caps, grid_resolution=400, tol=design_tolerance)
        assert (coarse.c1_holds, coarse.c2_holds) == (fine.c1_holds, fine.c2_holds) == (True, True)
        assert fine.points_checked > coarse.points_checked

    def test_caps_beyond_axis_limits(self, model_07):
        caps = AxisCaps(0.3, 0.3, Binding.LAMBDA0, Binding.LAMBDA0)
        report = check_conditions(model_07, caps, grid_resolution=20)
        assert not report.c1_holds
        assert all(m < 0.0 for m in report.c1_margins)


class TestAlgorithm1:
    def test_design_instance(self, gaussian_model, design_tolerance, deep_targets, equal_priors):
        result = algorithm1(gaussian_model, design_tolerance, deep_targets, equal_priors)
        assert result.succeeded
        assert result.method is Method.ALGORITHM1
        assert result.psi_star.psi0 == 0.0
        assert result.psi_star.psi1 == pytest.approx(0.1, abs=5e-3)
        value0, value1 = result.candidate_values
        assert value1 / value0 == pytest.approx(1.756, abs=0.02)
        assert result.objective_value == value1

    def test_ratio_is_independent_of_equal_bounds(self, gaussian_model, design_tolerance, equal_priors):
        ratios = []
        for bound in (1e-3, 1e-9):
            result = algorithm1(gaussian_model, design_tolerance, ErrorTargets.symmetric(bound), equal_priors)
            ratios.append(result.candidate_values[1] / result.candidate_values[0])
        assert ratios[0] == pytest.approx(ratios[1])

    def test_zero_tolerance_keeps_identity(self, gaussian_model, deep_targets, equal_priors):
        result = algorithm1(gaussian_model, ToleranceSpec(0.0, 0.2), deep_targets, equal_priors)
        assert result.psi_star == EncryptionParams(0.0, 0.0)
        assert result.objective_value == 0.0


class TestGridSearch:
    def test_agrees_with_algorithm1(self, gaussian_model, design_tolerance, deep_targets, equal_priors):
        corner = algorithm1(gaussian_model, design_tolerance, deep_targets, equal_priors)
        grid = grid_search(gaussian_model, design_tolerance, deep_targets, equal_priors, resolution=400)
        assert grid.method is Method.GRID_SEARCH
        assert abs(grid.psi_star.psi0 - corner.psi_star.psi0) <= GRID_CELL
        assert abs(grid.psi_star.psi1 - corner.psi_star.psi1) <= GRID_CELL
        assert grid.objective_value <= corner.objective_value + 1e-9

    def test_randomized_small_tolerances(self, deep_targets, equal_priors):
        rng = np.random.default_rng(2024)
        compared = 0
        for _ in range(20):
            model = BitChannelModel.from_p(rng.uniform(0.65, 0.85))
            tol = ToleranceSpec(*rng.uniform(0.02, 0.15, size=2))
            corner = algorithm1(model, tol, deep_targets, equal_priors)
            # near-tied corners can swap once the grid rounds the caps down
            if not corner.succeeded or max(corner.candidate_values) < 1.25 * min(corner.candidate_values):
                continue
            grid = grid_search(model, tol, deep_targets, equal_priors, resolution=400)
            assert abs(grid.psi_star.psi0 - corner.psi_star.psi0) <= GRID_CELL
            assert abs(grid.psi_star.psi1 - corner.psi_star.psi1) <= GRID_CELL
            compared += 1
            if compared == 5:
                break
        assert compared == 5

    def test_only_origin_is_feasible(self, deep_targets, equal_priors):
        model = BitChannelModel.from_p(0.7)
        result = grid_search(model, ToleranceSpec(0.0, 0.0), deep_targets, equal_priors, resolution=20)
        assert result.psi_star == EncryptionParams(0.0, 0.0)

    def test_no_feasible_point(self, monkeypatch, deep_targets, equal_priors):
        import modules.optimize as optimize

        def nothing_feasible(model, tol, resolution):
            axis = np.linspace(0.0, 1.0, resolution)
            psi0, psi1 = np.meshgrid(axis, axis, indexing='ij')
            return psi0, psi1, np.zeros_like(psi0, dtype=bool)

        monkeypatch.setattr(optimize, 'feasible_grid', nothing_feasible)
        with pytest.raises(NoFeasiblePointError):
            grid_search(BitChannelModel.from_p(0.7), ToleranceSpec(0.1, 0.1), deep_targets,
                        equal_priors, resolution=10)

    def test_objective_never_beats_corner(self, gaussian_model, design_tolerance, deep_targets, equal_priors):
        corner = algorithm1(gaussian_model, design_tolerance, deep_targets, equal_priors)
        grid = grid_search(gaussian_model, design_tolerance, deep_targets, equal_priors, resolution=100)
        assert grid.objective_value <= corner.objective_value + 1e-9
