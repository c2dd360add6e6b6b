import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mmfp import solver
from mmfp.errors import DomainError, InvalidInputError
from mmfp.fp_core import SmoothFn, affine_fn
from mmfp.lagrangian_dual import (
    LogRatioMmProblem,
    LogRatioTerm,
    log_ratio_objective,
    log_ratio_surrogate,
    opt_gamma,
    opt_gamma_tilde,
    zeta_minus,
    zeta_plus,
)


class TestClosedForms:
    def test_opt_gamma_values(self):
        assert opt_gamma(1.0, 2.0) == 0.5
        assert opt_gamma(0.0, 5.0) == 0.0
        assert opt_gamma(3.0, 3.0) == 1.0

    def test_opt_gamma_tilde_values(self):
        assert opt_gamma_tilde(1.0, 3.0) == 0.25
        assert opt_gamma_tilde(0.0, 1.0) == 0.0
        assert opt_gamma_tilde(1.0, 1.0) == 0.5

    def test_gamma_tilde_stays_below_one(self):
        assert opt_gamma_tilde(1e12, 1e-6) < 1.0

    def test_invalid_inputs(self):
        with pytest.raises(InvalidInputError):
            opt_gamma(1.0, 0.0)
        with pytest.raises(InvalidInputError):
            opt_gamma_tilde(-1.0, 1.0)


class TestZetaPlus:
    def test_tight_at_optimum(self):
        assert zeta_plus(1.0, 1.0, 1.0, 1.0) == pytest.approx(math.log(2.0))

    def test_zero_ratio(self):
        assert zeta_plus(1.0, 0.0, 0.0, 1.0) == 0.0

    def test_hand_evaluated_bound_case(self):
        value = zeta_plus(2.0, 0.0, 1.0, 1.0)
        assert value == pytest.approx(1.0)
        assert value <= 2.0 * math.log(2.0)

    @settings(max_examples=300, deadline=None)
    @given(
        st.floats(0.05, 5.0), st.floats(0.05, 5.0),
        st.floats(0.1, 3.0), st.floats(0.0, 10.0),
    )
    def test_recovery_and_bound(self, A, B, w, gamma):
        best = zeta_plus(w, opt_gamma(A, B), A, B)
        assert best == pytest.approx(w * math.log1p(A / B), rel=1e-12, abs=1e-12)
        assert zeta_plus(w, gamma, A, B) <= best + 1e-10


class TestZetaMinus:
    def test_tight_at_optimum(self):
        assert zeta_minus(1.0, 0.5, 1.0, 1.0) == pytest.approx(-math.log(2.0))

    def test_zero_ratio(self):
        assert zeta_minus(1.0, 0.0, 0.0, 1.0) == 0.0

    def test_bound_case(self):
        value = zeta_minus(1.0, 0.0, 1.0, 1.0)
        assert value == pytest.approx(-1.0)
        assert value <= -math.log(2.0)

    def test_domain_error_at_one(self):
        with pytest.raises(DomainError):
            zeta_minus(1.0, 1.0, 1.0, 1.0)

    @settings(max_examples=300, deadline=None)
    @given(
        st.floats(0.05, 5.0), st.floats(0.05, 5.0),
        st.floats(0.1, 3.0), st.floats(0.0, 0.999),
    )
    def test_recovery_and_bound(self, A, B, w, gamma_tilde):
        best = zeta_minus(w, opt_gamma_tilde(A, B), A, B)
        assert best == pytest.approx(-w * math.log1p(A / B), rel=1e-12, abs=1e-12)
        assert zeta_minus(w, gamma_tilde, A, B) <= best + 1e-10


def test_stationarity_of_closed_forms_by_finite_differences():
    rng = np.random.default_rng(0)
    for _ in range(200):
        A = float(rng.uniform(0.05, 5.0))
        B = float(rng.uniform(0.05, 5.0))
        w = float(rng.uniform(0.1, 3.0))
        g = opt_gamma(A, B)
        h = 1e-6 * (1 + g)
        d_plus = (zeta_plus(w, g + h, A, B) - zeta_plus(w, g - h, A, B)) / (2 * h)
        assert abs(d_plus) <= 1e-8
        gt = opt_gamma_tilde(A, B)
        h = 1e-5 * (1 - gt)  # step shrinks with the distance to the log singularity
        d_minus = (zeta_minus(w, gt + h, A, B) - zeta_minus(w, gt - h, A, B)) / (2 * h)
        assert abs(d_minus) <= 1e-8


def _random_terms(rng, dim, n_terms):
    terms = []
    for _ in range(n_terms):
        a = rng.uniform(0.1, 1.0, dim)
        b = rng.uniform(0.1, 1.0, dim)
        terms.append(
            LogRatioTerm(
                affine_fn(a, 0.2),
                affine_fn(b, float(rng.uniform(0.5, 2.0))),
                weight=float(rng.uniform(0.0, 2.0)),
                side="max" if rng.random() < 0.5 else "min",
            )
        )
    return terms


class TestLogRatioSurrogate:
    def test_tight_at_anchor(self):
        rng = np.random.default_rng(1)
        for _ in range(30):
            dim = int(rng.integers(1, 4))
            terms = _random_terms(rng, dim, int(rng.integers(1, 5)))
            x = rng.uniform(0.1, 3.0, dim)
            assert log_ratio_surrogate(terms, x, x) == pytest.approx(
                log_ratio_objective(terms, x), abs=1e-10
            )

    def test_hand_evaluated_single_max_term(self):
        # anchor ratio 1, query ratio 3: ln2 - 1 + 2*(3/4) = ln2 + 0.5 <= ln4
        term = LogRatioTerm(
            SmoothFn(value=lambda x: float(x[0]), grad=lambda x: np.array([1.0])),
            SmoothFn(value=lambda x: 1.0, grad=lambda x: np.zeros(1)),
            weight=1.0,
            side="max",
        )
        value = log_ratio_surrogate([term], np.array([3.0]), np.array([1.0]))
        assert value == pytest.approx(math.log(2.0) + 0.5)
        assert value <= math.log(4.0)

    def test_min_only_instances_stay_below_objective(self):
        rng = np.random.default_rng(2)
        for _ in range(100):
            dim = int(rng.integers(1, 4))
            terms = [
                LogRatioTerm(
                    affine_fn(rng.uniform(0.1, 1.0, dim), 0.2),
                    affine_fn(rng.uniform(0.1, 1.0, dim), 1.0),
                    weight=float(rng.uniform(0.1, 2.0)),
                    side="min",
                )
                for _ in range(int(rng.integers(1, 4)))
            ]
            x = rng.uniform(0.1, 3.0, dim)
            anchor = rng.uniform(0.1, 3.0, dim)
            assert log_ratio_surrogate(terms, x, anchor) <= log_ratio_objective(terms, x) + 1e-10

    def test_bound_random_mixed(self):
        rng = np.random.default_rng(3)
        for _ in range(100):
            dim = int(rng.integers(1, 4))
            terms = _random_terms(rng, dim, int(rng.integers(1, 5)))
            x = rng.uniform(0.1, 3.0, dim)
            anchor = rng.uniform(0.1, 3.0, dim)
            assert log_ratio_surrogate(terms, x, anchor) <= log_ratio_objective(terms, x) + 1e-10

    def test_zeta_depends_on_x_only_through_fractions(self):
        # with the auxiliary frozen, subtracting the fraction term leaves a
        # constant in x
        w, g, gt = 1.3, 0.8, 0.4
        pairs = [(0.5, 1.0), (2.0, 0.7), (4.0, 3.0)]
        from mmfp.lagrangian_dual import zeta_minus, zeta_plus

        consts_plus = {
            round(zeta_plus(w, g, A, B) - w * (1 + g) * A / (A + B), 12) for A, B in pairs
        }
        consts_minus = {
            round(zeta_minus(w, gt, A, B) + w * (1 - gt) * A / B, 12) for A, B in pairs
        }
        assert len(consts_plus) == 1 and len(consts_minus) == 1


class TestLogRatioMmProblem:
    def _problem(self, rng, dim=2):
        terms = []
        for side in ("max", "max", "min"):
            a = rng.uniform(0.2, 1.0, dim)
            b = rng.uniform(0.2, 1.0, dim)
            terms.append(
                LogRatioTerm(affine_fn(a, 0.3), affine_fn(b, 1.0),
                             weight=float(rng.uniform(0.2, 1.5)), side=side)
            )
        return LogRatioMmProblem(
            terms=tuple(terms),
            feasible=solver.box_set(np.zeros(dim), np.ones(dim)),
        )

    def test_surrogate_tight_and_bounded(self):
        rng = np.random.default_rng(4)
        problem = self._problem(rng)
        x = rng.uniform(0.2, 0.9, 2)
        aux = problem.update_aux(x, eps=1e-12)
        value, _ = problem.surrogate(x, aux)
        assert value == pytest.approx(problem.objective(x), abs=1e-10)
        y = rng.uniform(0.2, 0.9, 2)
        value_off, _ = problem.surrogate(y, aux)
        assert value_off <= problem.objective(y) + 1e-10

    def test_gradients_match_finite_differences(self):
        rng = np.random.default_rng(5)
        problem = self._problem(rng)
        x = rng.uniform(0.2, 0.9, 2)
        g = problem.objective_grad(x)
        g_fd = solver.central_diff_grad(problem.objective, x)
        assert np.all(np.abs(g - g_fd) <= 1e-5 * (1 + np.abs(g_fd)))
        aux = problem.update_aux(rng.uniform(0.2, 0.9, 2), eps=1e-12)
        _, gs = problem.surrogate(x, aux)
        gs_fd = solver.central_diff_grad(lambda z: problem.surrogate(z, aux)[0], x)
        assert np.all(np.abs(gs - gs_fd) <= 1e-5 * (1 + np.abs(gs_fd)))

    def test_mm_run_is_monotone(self):
        rng = np.random.default_rng(6)
        problem = self._problem(rng)
        _, trace = solver.run_mm(problem, np.full(2, 0.5))
        vals = trace.objectives
        assert np.all(np.diff(vals) >= -1e-9 * (1 + np.abs(vals[:-1])))

    def test_zero_weight_terms_are_dropped(self):
        dim = 1
        dead = LogRatioTerm(
            affine_fn([1.0], 0.0), affine_fn([1.0], 1.0), weight=0.0, side="min"
        )
        live = LogRatioTerm(
            affine_fn([1.0], 0.5), affine_fn([0.5], 1.0), weight=1.0, side="max"
        )
        problem = LogRatioMmProblem(
            terms=(dead, live), feasible=solver.box_set(np.zeros(dim), np.ones(dim))
        )
        x = np.array([0.0])  # dead term's ratio is 0/1; with weight 0 it must not blow up
        aux = problem.update_aux(x, eps=1e-12)
        value, _ = problem.surrogate(x, aux)
        assert np.isfinite(value)


def test_weight_validation():
    with pytest.raises(InvalidInputError):
        LogRatioTerm(affine_fn([1.0]), affine_fn([1.0]), weight=-0.5, side="max")
    with pytest.raises(InvalidInputError):
        LogRatioTerm(affine_fn([1.0]), affine_fn([1.0]), weight=1.0, side="between")
