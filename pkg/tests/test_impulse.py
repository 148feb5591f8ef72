from unittest.mock import patch

import numpy as np

from acic.exceptions import ACICException, ConvergenceError
from acic.impulse import (MAX_HOWARD_ITERATIONS, ImpulseCost, QviSolution, Strategy, apply_M,
                          evaluate_normalized, howard_iteration_cap, improvement_tolerance,
                          evaluate_policy, extract_strategy, improve_policy, lambda_alpha,
                          lambda_undiscounted, qvi_residual, qvi_sweep, solve_discounted_qvi,
                          solve_normalized_qvi)
from acic.model import Domain, build_model, exit_time_moments, nested_balls
from acic.stopping import StoppingProblem, discount_error_bound

from tests.helpers.base_acic_test_case import BaseACICTestCase
from tests.helpers.test_utils import (constant_cost, line_domain, random_problem, ring_model,
                                      two_state_model)

TWO_STATE_F = [0.0, 10.0]
BOUND_SLACK = 1e-8

def ring_instance(size=6, upto=4):
    model = ring_model(size)
    f = np.array([0.5, 0.0, 1.0, 3.0, 6.0, 2.0])[:size]
    return model, line_domain(model, upto), constant_cost(model, [0], 1.0), f

def bounded_instance(seed, size=None, count=2):
    """Seeded chain of 4 to 8 states with the largest of `count` balls around U."""
    model, f, cost = random_problem(seed, size=size or 4 + seed % 5)
    return model, f, cost, nested_balls(model, cost.targets, count)[-1]

class TestImpulseCost(BaseACICTestCase):
    def test_constant(self):
        cost = ImpulseCost.constant(two_state_model(), [1, 0], 2.0)

        self.assertEqual(cost.targets.tolist(), [0, 1])
        self.assertAllClose(cost.cost, np.full((2, 2), 2.0))
        self.assertEqual(cost.floor, 2.0)
        self.assertEqual(cost.max_cost, 2.0)
        self.assertEqual(cost.size, 2)
        self.assertEqual(cost.target_mask().tolist(), [True, True])

    def test_from_matrix_sorts_targets(self):
        cost = ImpulseCost.from_matrix([2, 0], [[1.0, 2.0], [1.5, 2.5], [1.0, 2.0]])

        self.assertEqual(cost.targets.tolist(), [0, 2])
        self.assertAllClose(cost.cost, [[2.0, 1.0], [2.5, 1.5], [2.0, 1.0]])
        self.assertAllClose(cost.cost_of([1, 1], [0, 2]), [2.5, 1.5])

    def test_explicit_floor(self):
        cost = ImpulseCost.from_matrix([0], [[1.0], [2.0]], floor=0.5)

        self.assertEqual(cost.floor, 0.5)

    def test_affine_on_indices(self):
        cost = ImpulseCost.affine(ring_model(4), [0], 1.0, 0.5)

        self.assertAllClose(cost.cost[:, 0], [1.0, 1.5, 2.0, 2.5])

    def test_affine_on_coordinates(self):
        model = build_model({'kind': 'drift', 'upper': 1.0, 'step': 0.5})
        cost = ImpulseCost.affine(model, [0], 2.0, 1.0)

        self.assertAllClose(cost.cost[:, 0], [2.0, 2.5, 3.0])

    def test_affine_negative_proportional(self):
        with self.assertRaisesRegex(ValueError, r"proportional impulse cost must be >= 0"):
            ImpulseCost.affine(ring_model(3), [0], 1.0, -0.1)

    def test_zero_cost(self):
        with self.assertRaisesRegex(ValueError, r"impulse cost violates c\(x,ξ\) ≥ c > 0"):
            ImpulseCost.from_matrix([0], [[0.0], [1.0]])

    def test_below_floor(self):
        with self.assertRaisesRegex(ValueError, r"smallest cost 1.0, floor 2.0"):
            ImpulseCost.from_matrix([0], [[1.0], [3.0]], floor=2.0)

    def test_triangle_inequality(self):
        with self.assertRaisesRegex(
                ValueError, r"violates the triangle inequality .* at x = 2, ξ = 0"):
            ImpulseCost.from_matrix([0, 1], [[1.0, 1.0], [1.0, 1.0], [5.0, 1.0]])

    def test_empty_targets(self):
        with self.assertRaisesRegex(ValueError, r"target set U must not be empty"):
            ImpulseCost.from_matrix([], np.zeros((2, 0)))

    def test_duplicate_targets(self):
        with self.assertRaisesRegex(ValueError, r"targets must be distinct states"):
            ImpulseCost.from_matrix([0, 0], np.ones((2, 2)))

    def test_wrong_shape(self):
        with self.assertRaisesRegex(ValueError, r"impulse cost must have shape \(states, 2\)"):
            ImpulseCost.from_matrix([0, 1], np.ones((2, 3)))

    def test_target_out_of_range(self):
        with self.assertRaisesRegex(ValueError, r"targets must be state indices"):
            ImpulseCost.from_matrix([5], np.ones((2, 1)))

class TestApplyM(BaseACICTestCase):
    def test_min_over_targets(self):
        cost = ImpulseCost.from_matrix([0, 2], [[1.0, 3.0], [1.0, 1.0], [1.0, 1.0], [2.0, 1.0]])
        m_value, argmin = apply_M([0.0, 3.0, 0.0, 5.0], cost)

        self.assertAllClose(m_value, [1.0, 1.0, 1.0, 1.0])
        self.assertEqual(argmin.tolist(), [0, 0, 0, 2])

    def test_ties_go_to_lowest_target(self):
        cost = ImpulseCost.constant(ring_model(4), [2, 0], 1.0)
        _, argmin = apply_M([0.0, 3.0, 0.0, 5.0], cost)

        self.assertEqual(argmin.tolist(), [0, 0, 0, 0])

    def test_not_finite_on_targets(self):
        with self.assertRaisesRegex(ValueError, r"v must be finite on the targets"):
            apply_M([np.inf, 0.0], ImpulseCost.constant(two_state_model(), [0], 1.0))

class TestStrategy(BaseACICTestCase):
    def test_empty(self):
        strategy = Strategy.empty(3)

        self.assertTrue(strategy.is_empty)
        self.assertEqual(strategy.size, 3)
        self.assertEqual(strategy.target.tolist(), [-1, -1, -1])
        self.assertEqual(strategy.to_dict(('a', 'b', 'c')), {'impulse-region': [], 'targets': {}})

    def test_targets_outside_region_are_dropped(self):
        strategy = Strategy([False, True, True], [2, 0, 0])

        self.assertFalse(strategy.is_empty)
        self.assertEqual(strategy.target.tolist(), [-1, 0, 0])
        self.assertEqual(
            strategy.to_dict((1.0, 2.0, 3.0)),
            {'impulse-region': [2.0, 3.0], 'targets': {'2.0': 1.0, '3.0': 1.0}})

    def test_target_inside_region(self):
        with self.assertRaisesRegex(
                ACICException, r"strategy has an impulse target inside the impulse region"):
            Strategy([True, True, False], [1, 2, -1])

    def test_missing_target(self):
        with self.assertRaisesRegex(ACICException, r"impulse target inside the impulse region"):
            Strategy([True, False], [-1, -1])

    def test_uses_targets(self):
        cost = ImpulseCost.constant(ring_model(3), [0], 1.0)

        self.assertTrue(Strategy([False, True, True], [0, 0, 0]).uses_targets(cost))
        self.assertFalse(Strategy([True, False, True], [1, 0, 1]).uses_targets(cost))

    def test_equality(self):
        first = Strategy([False, True], [0, 0])
        second = Strategy([False, True], [1, 0])

        self.assertEqual(first, second)
        self.assertEqual(len({first, second, Strategy.empty(2)}), 2)
        self.assertEqual(repr(first), 'Strategy(region=1/2)')

class TestPolicyEvaluation(BaseACICTestCase):
    def test_discounted_value(self):
        model = two_state_model()
        strategy = Strategy([False, True], [0, 0])
        value = evaluate_policy(
            model, Domain.full(model), constant_cost(model, [0]), TWO_STATE_F, 1.0, strategy)

        # w1 = 1 + w0 and 2 w0 - w1 = 0
        self.assertAllClose(value, [1.0, 2.0])

    def test_killed_at_exit(self):
        model = two_state_model()
        value = evaluate_policy(
            model, Domain([True, False]), constant_cost(model, [0]), 1.0, 0.0,
            Strategy.empty(2))

        self.assertAllClose(value, [1.0, 0.0])

    def test_singular_never_exits(self):
        model = two_state_model()

        with self.assertRaisesRegex(ACICException, r"Singular linear system|non-finite solution"):
            evaluate_policy(
                model, Domain.full(model), constant_cost(model, [0]), 1.0, 0.0,
                Strategy.empty(2))

    def test_normalized(self):
        model = two_state_model()
        lam, value = evaluate_normalized(
            model, Domain.full(model), constant_cost(model, [0]), TWO_STATE_F, 0.0,
            Strategy([False, True], [0, 0]), 0)

        self.assertAlmostEqual(lam, 1.0)
        self.assertAllClose(value, [0.0, 1.0])

    def test_normalized_no_impulse_is_invariant_average(self):
        model = two_state_model()
        lam, value = evaluate_normalized(
            model, Domain.full(model), constant_cost(model, [0]), TWO_STATE_F, 0.0,
            Strategy.empty(2), 0)

        self.assertAlmostEqual(lam, 10 / 3)
        self.assertAllClose(value, [0.0, 10 / 3], atol=1e-10)

    def test_normalized_reference_outside(self):
        model = two_state_model()

        with self.assertRaisesRegex(ValueError, r"reference state 1 is not in the domain"):
            evaluate_normalized(
                model, Domain([True, False]), constant_cost(model, [0]), TWO_STATE_F, 0.0,
                Strategy.empty(2), 1)

    def test_improve_from_empty(self):
        model = two_state_model()
        domain = Domain.full(model)
        cost = constant_cost(model, [0])
        lam, value = evaluate_normalized(
            model, domain, cost, TWO_STATE_F, 0.0, Strategy.empty(2), 0)
        improved = improve_policy(
            model, domain, cost, np.array(TWO_STATE_F) - lam, 0.0, value, Strategy.empty(2))

        self.assertEqual(improved, Strategy([False, True], [-1, 0]))

class TestNormalizedQvi(BaseACICTestCase):
    def test_cheap_impulse(self):
        model = two_state_model()
        cost = constant_cost(model, [0], 1.0)
        solution = solve_normalized_qvi(model, Domain.full(model), cost, TWO_STATE_F)

        # one impulse per visit to state 1, one visit per unit of time
        self.assertAlmostEqual(solution.lam, 1.0)
        self.assertAllClose(solution.value, [0.0, 1.0])
        self.assertAllClose(solution.m_value, [1.0, 1.0])
        self.assertEqual(solution.strategy.impulse_region.tolist(), [False, True])
        self.assertLess(solution.residual, 1e-10)
        self.assertEqual(solution.alpha, 0.0)
        self.assertGreaterEqual(solution.iterations, 2)

    def test_expensive_impulse(self):
        model = two_state_model()
        cost = constant_cost(model, [0], 5.0)
        solution = solve_normalized_qvi(model, Domain.full(model), cost, TWO_STATE_F)

        self.assertAlmostEqual(solution.lam, 10 / 3)
        self.assertTrue(solution.strategy.is_empty)
        self.assertLess(solution.residual, 1e-10)

    def test_extract_strategy(self):
        model = two_state_model()
        cost = constant_cost(model, [0], 1.0)
        solution = solve_normalized_qvi(model, Domain.full(model), cost, TWO_STATE_F)
        strategy = extract_strategy(solution, cost)

        self.assertEqual(strategy, solution.strategy)
        self.assertEqual(strategy.target.tolist(), [-1, 0])

    def test_extract_strategy_chains_targets(self):
        model = ring_model(3)
        cost = ImpulseCost.constant(model, [0, 1], 1.0)
        domain = Domain.full(model)
        # state 1 is a target inside the region and passes on to 0
        solution = QviSolution(
            0.0, np.array([0.0, 1.0, 1.0]), np.array([1.0, 1.0, 1.0]), np.array([1, 0, 1]),
            Strategy.empty(3), 0.0, 0.0, domain)
        strategy = extract_strategy(solution, cost)

        self.assertEqual(strategy.impulse_region.tolist(), [False, True, True])
        self.assertEqual(strategy.target.tolist(), [-1, 0, 0])

    def test_with_details(self):
        model = two_state_model()
        solution = solve_normalized_qvi(
            model, Domain.full(model), constant_cost(model, [0]), TWO_STATE_F)
        extended = solution.with_details(source='test')

        self.assertEqual(extended.details, {'source': 'test'})
        self.assertEqual(solution.details, {})
        self.assertEqual(extended.lam, solution.lam)

class TestDiscountedQvi(BaseACICTestCase):
    def test_policy_and_sweep_agree(self):
        model, domain, cost, f = ring_instance()
        history = []
        policy, _ = solve_discounted_qvi(model, domain, cost, f, 1.0, 0.5)
        sweep, iterations = solve_discounted_qvi(
            model, domain, cost, f, 1.0, 0.5, method='sweep', history=history)

        self.assertAllClose(policy, sweep, atol=1e-7)
        self.assertEqual(len(history), iterations + 1)
        for previous, current in zip(history, history[1:]):
            self.assertTrue(np.all(current <= previous + 1e-9))

    def test_fixed_point_residual(self):
        model, domain, cost, f = ring_instance()
        value, _ = solve_discounted_qvi(model, domain, cost, f, 1.0, 0.5)

        self.assertLess(qvi_residual(model, domain, cost, f - 1.0, 0.5, value), 1e-9)

    def test_sweep_fixes_solution(self):
        model, domain, cost, f = ring_instance()
        value, _ = solve_discounted_qvi(model, domain, cost, f, 1.0, 0.5)

        self.assertAllClose(qvi_sweep(model, domain, cost, f - 1.0, 0.5, value), value, atol=1e-7)

    def test_sweep_is_monotone(self):
        model, domain, cost, f = ring_instance()
        value, _ = solve_discounted_qvi(model, domain, cost, f, 1.0, 0.5)
        lower = qvi_sweep(model, domain, cost, f - 1.0, 0.5, value)
        upper = qvi_sweep(model, domain, cost, f - 1.0, 0.5, value + 1.0)

        self.assertTrue(np.all(upper >= lower - 1e-9))

    def test_bad_arguments(self):
        model, domain, cost, f = ring_instance()

        with self.assertRaisesRegex(ValueError, r"discounted QVI needs alpha > 0"):
            solve_discounted_qvi(model, domain, cost, f, 1.0, 0.0)
        with self.assertRaisesRegex(ValueError, r"QVI method must be one of"):
            solve_discounted_qvi(model, domain, cost, f, 1.0, 0.5, method='newton')

class TestLambda(BaseACICTestCase):
    def test_lambda_alpha_normalized(self):
        model, domain, cost, f = ring_instance()
        solution = lambda_alpha(model, domain, cost, f, 0.1)

        self.assertAlmostEqual(float(np.min(solution.value[cost.targets])), 0.0, places=7)
        self.assertLess(solution.residual, 1e-6)
        self.assertLessEqual(abs(solution.lam), float(np.max(np.abs(f))))
        self.assertEqual(solution.alpha, 0.1)
        self.assertIs(solution.domain, domain)
        self.assertIn('bracket', solution.details)

    def test_lambda_undiscounted_normalized(self):
        model, domain, cost, f = ring_instance()
        solution = lambda_undiscounted(model, domain, cost, f)

        self.assertAlmostEqual(float(np.min(solution.value[cost.targets])), 0.0, places=7)
        self.assertLess(solution.residual, 1e-6)
        self.assertAllClose(solution.value[~domain.interior], 0.0)

    def test_vanishing_discount(self):
        model, domain, cost, f = ring_instance()
        undiscounted = lambda_undiscounted(model, domain, cost, f)
        gaps = [abs(lambda_alpha(model, domain, cost, f, alpha).lam - undiscounted.lam)
                for alpha in (1e-1, 1e-2, 1e-3)]

        self.assertLess(gaps[-1], 1e-2)
        self.assertLessEqual(gaps[-1], gaps[0] + 1e-9)

    def test_lambda_alpha_needs_discount(self):
        model, domain, cost, f = ring_instance()

        with self.assertRaisesRegex(ValueError, r"lambda_alpha needs alpha > 0"):
            lambda_alpha(model, domain, cost, f, 0.0)

    def test_no_target_in_domain(self):
        model, _, _, f = ring_instance()
        domain = line_domain(model, 3)
        cost = constant_cost(model, [4])

        with self.assertRaisesRegex(ValueError, r"no target state lies inside the domain"):
            lambda_alpha(model, domain, cost, f, 0.1)

class TestHowardSafeguards(BaseACICTestCase):
    def test_iteration_cap_grows_with_interior(self):
        small = line_domain(ring_model(6), 4)
        large = Domain(np.arange(3001) < 3000)

        self.assertEqual(howard_iteration_cap(small), MAX_HOWARD_ITERATIONS)
        self.assertEqual(howard_iteration_cap(large), 6000)
        self.assertEqual(howard_iteration_cap(large, 7), 7)

    def test_improvement_tolerance_scales_with_value(self):
        self.assertEqual(improvement_tolerance(np.zeros(3)), 1e-10)
        self.assertAlmostEqual(improvement_tolerance(np.array([-300.0, 2.0])) / 3e-8, 1.0)

    def test_lambda_alpha_falls_back_to_sweeps(self):
        model, domain, cost, f = ring_instance()
        expected = lambda_alpha(model, domain, cost, f, 0.1)

        with patch('acic.impulse._howard',
                   side_effect=ConvergenceError('Howard iteration did not settle')):
            solution = lambda_alpha(model, domain, cost, f, 0.1)

        self.assertAlmostEqual(solution.lam, expected.lam, places=7)
        self.assertAlmostEqual(float(np.min(solution.value[cost.targets])), 0.0, places=7)


class TestSolutionBounds(BaseACICTestCase):
    def check_bounds(self, model, f, cost, domain, solution, msg):
        interior = domain.interior
        targets = cost.targets[interior[cost.targets]]
        sup_exit_time = exit_time_moments(model, domain).sup_first
        w_bound = float(np.max(np.abs(f - solution.lam))) * sup_exit_time
        m_value = solution.m_value

        self.assertLessEqual(abs(solution.lam), float(np.max(np.abs(f))) + BOUND_SLACK, msg)
        self.assertLessEqual(float(np.max(np.abs(solution.value))), w_bound + BOUND_SLACK, msg)
        self.assertLess(abs(float(np.min(solution.value[targets]))), 1e-8, msg)
        self.assertTrue(np.all(m_value >= float(np.min(cost.cost)) - BOUND_SLACK), msg)
        self.assertTrue(np.all(m_value <= cost.max_cost + BOUND_SLACK), msg)
        # Howard stops improving within a tolerance relative to |w|
        slack = BOUND_SLACK * max(1.0, float(np.max(np.abs(solution.value))))
        self.assertTrue(np.all(solution.value[interior] <= m_value[interior] + slack), msg)

    def test_lambda_alpha(self):
        for seed in range(100):
            model, f, cost, domain = bounded_instance(seed)
            solution = lambda_alpha(model, domain, cost, f, 0.05)

            self.check_bounds(model, f, cost, domain, solution, f"seed {seed}")

    def test_lambda_undiscounted(self):
        for seed in range(100):
            model, f, cost, domain = bounded_instance(seed)
            solution = lambda_undiscounted(model, domain, cost, f)

            self.check_bounds(model, f, cost, domain, solution, f"seed {seed}")

    def test_vanishing_discount_error(self):
        for seed in range(10):
            model, f, cost, domain = bounded_instance(seed, size=8, count=4)
            direct = lambda_undiscounted(model, domain, cost, f)
            prob = StoppingProblem(f - direct.lam, direct.m_value, direct.m_value, 0.0, domain)
            for alpha in (1e-2, 1e-3, 1e-4):
                solution = lambda_alpha(model, domain, cost, f, alpha)

                self.assertLessEqual(
                    abs(solution.lam - direct.lam),
                    discount_error_bound(model, prob, alpha) + BOUND_SLACK,
                    f"seed {seed}, alpha {alpha}")
