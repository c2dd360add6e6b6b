import math

import numpy as np
import pytest

from mmfp import fp_core, solver
from mmfp.errors import InvalidInputError, InvalidStartError, MonotonicityError
from mmfp.fp_core import MixedFpProblem, OuterFunction, RatioTerm, SmoothFn
from mmfp.solver import (
    FeasibleSet,
    IterationRecord,
    IterationTrace,
    SolveOptions,
    box_set,
    central_diff_grad,
    iterations_to_relative_convergence,
    maximize_subproblem,
    project_ball,
    project_box,
    run_mm,
    stationarity_residual,
)


class TestProjections:
    def test_box_clamp(self):
        assert np.allclose(project_box(np.array([2.0, -1.0]), 0.0, 1.0), [1.0, 0.0])

    def test_box_interior_unchanged(self):
        x = np.array([0.3, 0.7])
        assert np.allclose(project_box(x, 0.0, 1.0), x)

    def test_box_at_lower_bound(self):
        lo = np.array([0.1, 0.2])
        assert np.allclose(project_box(lo, lo, 1.0), lo)

    def test_box_invalid_bounds(self):
        with pytest.raises(InvalidInputError):
            project_box(np.zeros(2), 1.0, 0.0)

    def test_ball_inside_unchanged(self):
        x = np.array([3.0, 4.0])
        assert np.allclose(project_ball(x, 25.0), x)

    def test_ball_scales_to_boundary(self):
        assert np.allclose(project_ball(np.array([3.0, 4.0]), 1.0), [0.6, 0.8])

    def test_ball_zero_fixed(self):
        assert np.allclose(project_ball(np.zeros(3), 4.0), np.zeros(3))

    def test_ball_complex(self):
        z = np.array([3.0 + 4.0j])
        out = project_ball(z, 1.0)
        assert np.real(np.vdot(out, out)) == pytest.approx(1.0)

    def test_projection_idempotent(self):
        rng = np.random.default_rng(0)
        for _ in range(100):
            x = rng.standard_normal(4) * 3
            p1 = project_box(x, -1.0, 1.0)
            assert np.allclose(project_box(p1, -1.0, 1.0), p1, atol=1e-12)
            b1 = project_ball(x, 2.0)
            assert np.allclose(project_ball(b1, 2.0), b1, atol=1e-12)


def _quadratic(center: np.ndarray):
    def fn(x):
        d = x - center
        return -float(d @ d), -2.0 * d

    return fn


class TestMaximizeSubproblem:
    def test_clipped_quadratic(self):
        feasible = box_set(np.zeros(1), np.ones(1))
        x, info = maximize_subproblem(
            _quadratic(np.array([3.0])), feasible, np.array([0.2]), SolveOptions()
        )
        assert x[0] == pytest.approx(1.0, abs=1e-7)
        assert info.converged

    def test_ball_projection_optimum(self):
        center = np.array([3.0, 4.0])
        feasible = FeasibleSet(project=lambda x: project_ball(x, 1.0))
        x, _ = maximize_subproblem(
            _quadratic(center), feasible, np.array([0.1, 0.0]), SolveOptions()
        )
        assert np.allclose(x, [0.6, 0.8], atol=1e-6)

    def test_log_utility_stationary_point(self):
        def fn(x):
            p = float(x[0])
            return math.log1p(p) - 0.5 * p, np.array([1.0 / (1.0 + p) - 0.5])

        x, _ = maximize_subproblem(
            fn, box_set(np.zeros(1), np.full(1, 10.0)), np.array([5.0]), SolveOptions()
        )
        assert x[0] == pytest.approx(1.0, abs=1e-6)

    def test_invalid_start_raises(self):
        feasible = FeasibleSet(
            project=lambda x: project_box(x, 0.0, 1.0),
            in_domain=lambda x: bool(np.all(x > 0.5)),
        )
        with pytest.raises(InvalidStartError):
            maximize_subproblem(
                _quadratic(np.array([1.0])), feasible, np.array([0.2]), SolveOptions()
            )

    def test_accepted_iterates_stay_in_domain(self):
        # objective finite only on the guarded half-box; line search must
        # never step outside it
        visited = []

        def fn(x):
            visited.append(x.copy())
            if x[0] <= 0.25:
                return -math.inf, None
            return -((x[0] - 0.3) ** 2), np.array([-2 * (x[0] - 0.3)])

        feasible = FeasibleSet(
            project=lambda x: project_box(x, 0.0, 1.0),
            in_domain=lambda x: bool(x[0] > 0.25),
        )
        x, _ = maximize_subproblem(fn, feasible, np.array([0.9]), SolveOptions())
        assert x[0] == pytest.approx(0.3, abs=1e-6)
        assert all(v[0] > 0.25 for v in visited)

    def test_never_returns_worse_point(self):
        fn = _quadratic(np.array([0.4, -0.1]))
        feasible = box_set(np.full(2, -1.0), np.ones(2))
        x0 = np.array([0.9, 0.9])
        x, _ = maximize_subproblem(fn, feasible, x0, SolveOptions(max_inner=3))
        assert fn(x)[0] >= fn(x0)[0]


def _ratio_problem(num_fn, den_fn, outer, side, lo, hi):
    return MixedFpProblem(
        terms=(RatioTerm(num_fn, den_fn, outer, side),),
        feasible=box_set(np.asarray(lo, dtype=float), np.asarray(hi, dtype=float)),
    )


class TestRunMm:
    def test_single_max_ratio_hits_upper_bound(self):
        problem = _ratio_problem(
            SmoothFn(value=lambda x: float(x[0]), grad=lambda x: np.array([1.0])),
            SmoothFn(value=lambda x: 1.0, grad=lambda x: np.zeros(1)),
            OuterFunction.identity(),
            "max",
            [0.0],
            [1.0],
        )
        x, trace = run_mm(problem, np.array([0.1]))
        assert x[0] == pytest.approx(1.0, abs=1e-8)
        assert trace.records[-1].objective == pytest.approx(1.0, abs=1e-8)
        assert trace.outer_iterations <= 3

    def test_single_min_ratio_interior_optimum(self):
        problem = _ratio_problem(
            SmoothFn(
                value=lambda x: (float(x[0]) - 2.0) ** 2 + 1.0,
                grad=lambda x: np.array([2.0 * (x[0] - 2.0)]),
            ),
            SmoothFn(value=lambda x: 1.0, grad=lambda x: np.zeros(1)),
            OuterFunction.neg_identity(),
            "min",
            [0.0],
            [5.0],
        )
        x, _ = run_mm(problem, np.array([4.5]))
        assert x[0] == pytest.approx(2.0, abs=1e-5)

    def test_mixed_toy_matches_grid_oracle(self):
        a = np.array([0.8, 0.3])
        b = np.array([0.2, 0.9])
        problem = MixedFpProblem(
            terms=(
                RatioTerm(
                    fp_core.affine_fn(a, 0.5),
                    fp_core.affine_fn(b, 1.0),
                    OuterFunction.log1p(),
                    "max",
                ),
                RatioTerm(
                    fp_core.affine_fn(b, 0.4),
                    fp_core.affine_fn(a, 1.2),
                    OuterFunction.neg_identity(),
                    "min",
                ),
            ),
            feasible=box_set(np.zeros(2), np.ones(2)),
        )
        x0 = np.full(2, 0.5)
        x, trace = run_mm(problem, x0)
        assert trace.records[-1].objective >= problem.objective(x0) - 1e-12
        grid = np.linspace(0.0, 1.0, 201)
        best = max(
            problem.objective(np.array([u, v])) for u in grid for v in grid
        )
        assert trace.records[-1].objective == pytest.approx(best, abs=1e-4)

    def test_trace_is_monotone(self):
        problem = _ratio_problem(
            SmoothFn(value=lambda x: float(x[0]) ** 2, grad=lambda x: np.array([2 * x[0]])),
            SmoothFn(value=lambda x: 1.0 + float(x[0]), grad=lambda x: np.ones(1)),
            OuterFunction.log1p(),
            "max",
            [0.0],
            [4.0],
        )
        _, trace = run_mm(problem, np.array([0.5]))
        vals = trace.objectives
        assert np.all(np.diff(vals) >= -1e-9 * (1 + np.abs(vals[:-1])))

    def test_surrogate_consistency_across_iterations(self):
        # at each outer step the surrogate is tight at the incoming point
        # and the subproblem can only improve it
        a = np.array([0.6, 0.2])
        b = np.array([0.3, 0.8])
        problem = MixedFpProblem(
            terms=(
                RatioTerm(
                    fp_core.affine_fn(a, 0.4),
                    fp_core.affine_fn(b, 1.0),
                    OuterFunction.log1p(),
                    "max",
                ),
                RatioTerm(
                    fp_core.affine_fn(b, 0.3),
                    fp_core.affine_fn(a, 1.1),
                    OuterFunction.neg_identity(),
                    "min",
                ),
            ),
            feasible=box_set(np.zeros(2), np.ones(2)),
        )
        x = np.full(2, 0.5)
        opts = SolveOptions()
        for _ in range(5):
            aux = problem.update_aux(x, opts.eps_safeguard)
            incoming, _ = problem.surrogate(x, aux)
            assert incoming == pytest.approx(problem.objective(x), abs=1e-9)
            x, _ = maximize_subproblem(
                lambda z: problem.surrogate(z, aux), problem.feasible, x, opts
            )
            outgoing, _ = problem.surrogate(x, aux)
            assert outgoing >= incoming - 1e-12

    def test_monotonicity_violation_raises(self):
        class Broken:
            feasible = box_set(np.zeros(1), np.ones(1))

            def __init__(self):
                self.calls = 0

            def objective(self, x):
                self.calls += 1
                return float(-self.calls)  # strictly decreasing: a bug by construction

            def update_aux(self, x, eps):
                return None

            def surrogate(self, x, aux):
                return 0.0, np.zeros(1)

        with pytest.raises(MonotonicityError):
            run_mm(Broken(), np.array([0.5]))


class TestStationarityResidual:
    def test_interior_maximum(self):
        problem = _ratio_problem(
            SmoothFn(
                value=lambda x: (float(x[0]) - 2.0) ** 2 + 1.0,
                grad=lambda x: np.array([2.0 * (x[0] - 2.0)]),
            ),
            SmoothFn(value=lambda x: 1.0, grad=lambda x: np.zeros(1)),
            OuterFunction.neg_identity(),
            "min",
            [0.0],
            [5.0],
        )
        assert stationarity_residual(problem, np.array([2.0])) <= 1e-6

    def test_boundary_optimum_with_inward_gradient(self):
        problem = _ratio_problem(
            SmoothFn(value=lambda x: float(x[0]), grad=lambda x: np.array([1.0])),
            SmoothFn(value=lambda x: 1.0, grad=lambda x: np.zeros(1)),
            OuterFunction.identity(),
            "max",
            [0.0],
            [1.0],
        )
        assert stationarity_residual(problem, np.array([1.0])) <= 1e-6

    def test_non_stationary_point_detected(self):
        problem = _ratio_problem(
            SmoothFn(
                value=lambda x: (float(x[0]) - 2.0) ** 2 + 1.0,
                grad=lambda x: np.array([2.0 * (x[0] - 2.0)]),
            ),
            SmoothFn(value=lambda x: 1.0, grad=lambda x: np.zeros(1)),
            OuterFunction.neg_identity(),
            "min",
            [0.0],
            [5.0],
        )
        assert stationarity_residual(problem, np.array([0.5])) > 0.01

    def test_finite_difference_fallback(self):
        class NoGrad:
            feasible = box_set(np.zeros(1), np.full(1, 5.0))

            def objective(self, x):
                return -((float(x[0]) - 2.0) ** 2)

        assert stationarity_residual(NoGrad(), np.array([2.0])) <= 1e-6


def test_central_diff_grad_on_polynomial():
    fn = lambda x: float(x[0] ** 3 + 2 * x[1] ** 2)
    x = np.array([1.2, -0.7])
    g = central_diff_grad(fn, x)
    assert np.allclose(g, [3 * 1.2**2, 4 * -0.7], rtol=1e-6)


def test_iterations_to_relative_convergence():
    records = [
        IterationRecord(i, v, 0.0, 1)
        for i, v in enumerate([0.0, 1.0, 1.5, 1.5 + 1e-9, 1.5 + 2e-9])
    ]
    trace = IterationTrace(records=records)
    assert iterations_to_relative_convergence(trace, 1e-6) == 3


def test_solve_options_validation():
    with pytest.raises(InvalidInputError):
        SolveOptions(outer_tol=0.0)
    with pytest.raises(InvalidInputError):
        SolveOptions(backtrack_factor=1.5)
    with pytest.raises(InvalidInputError):
        SolveOptions(max_outer=0)
