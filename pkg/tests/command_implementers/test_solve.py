import os

from testfixtures import TempDirectory

from acic.command_implementers.solve import Solve
from acic.exceptions import AssumptionError

from tests.helpers.base_acic_test_case import BaseACICTestCase
from tests.helpers.test_utils import (REDUCIBLE_PROBLEM, TWO_STATE_PROBLEM, acic_config,
                                      read_csv_rows, run_command_and_load_report)

SCHEDULE = {'alphas': [0.1, 0.01], 'domains': [[0]]}

class TestSolve(BaseACICTestCase):
    def test_config_defaults(self):
        self.assertEqual(Solve.command_implementer_config_defaults(),
                         {'tol': 1e-6, 'grid-points': 20001})
        self.assertEqual(Solve.required_runtime_command_config_keys(), ['tol', 'grid-points'])

    def test_two_state(self):
        with TempDirectory() as temp_dir:
            results, report, results_dir = run_command_and_load_report(
                temp_dir, 'solve', acic_config(TWO_STATE_PROBLEM, SCHEDULE), 'report.json')

            self.assertAlmostEqual(results['lambda'], 1.0, places=8)
            self.assertAlmostEqual(results['mu-f'], 10 / 3)
            self.assertFalse(results['degenerate'])
            self.assertTrue(results['converged'])
            self.assertEqual(results['impulse-region-size'], 1)
            self.assertEqual(results['assumptions']['A.1'], 'pass')
            self.assertTrue(results['verification']['accepted'])
            self.assertNotIn('renewal-oracle', results)
            self.assertAlmostEqual(report['lambda'], results['lambda'])
            self.assertEqual(report['problem']['name'], 'two-state')

            trace = read_csv_rows(os.path.join(results_dir, 'lambda_trace.csv'))
            self.assertEqual(trace[0], ['m', 'alpha', 'lambda', 'residual', 'gap'])
            self.assertEqual(len(trace), 1 + 2 + 2)
            self.assertEqual(trace[-1][:2], ['2', '0'])

            values = read_csv_rows(os.path.join(results_dir, 'value.csv'))
            self.assertEqual(values[0], ['state', 'w', 'Mw', 'impulse', 'target'])
            self.assertEqual([row[3] for row in values[1:]], ['false', 'true'])
            self.assertEqual([row[4] for row in values[1:]], ['', '0'])

            with open(os.path.join(results_dir, 'strategy.json')) as strategy_file:
                self.assertEqual(
                    strategy_file.read(),
                    '{\n  "impulse-region": [\n    1\n  ],\n  "targets": {\n    "1": 0\n  }\n}\n')

    def test_degenerate(self):
        problem = dict(TWO_STATE_PROBLEM, **{
            'impulse-cost': {'kind': 'constant', 'targets': [0], 'value': 5}})
        with TempDirectory() as temp_dir:
            results, _, _ = run_command_and_load_report(
                temp_dir, 'solve', acic_config(problem, SCHEDULE), 'report.json')

            self.assertTrue(results['degenerate'])
            self.assertAlmostEqual(results['lambda'], 10 / 3)
            self.assertEqual(results['impulse-region-size'], 0)
            self.assertIsNone(results['verification'])

    def test_drift_example_reports_renewal_oracle(self):
        problem = {'builtin': 'drift-example', 'parameters': {'upper': 2.0, 'step': 0.05}}
        with TempDirectory() as temp_dir:
            results, _, _ = run_command_and_load_report(
                temp_dir, 'solve', acic_config(problem, {'alphas': [0.1, 0.01]}), 'report.json',
                overrides={'grid-points': 2001})

            self.assertIsNone(results['mu-f'])
            self.assertEqual(results['assumptions']['A.1'], 'fail')
            self.assertAlmostEqual(results['claimed-lambda'], 4 / 3)
            self.assertAlmostEqual(
                results['oracle-delta'], results['lambda'] - results['renewal-oracle']['lambda'])
            self.assertLess(abs(results['oracle-delta']), 0.1)

    def test_reducible_chain(self):
        with TempDirectory() as temp_dir:
            with self.assertRaisesRegex(AssumptionError, r"A.1 fails"):
                run_command_and_load_report(
                    temp_dir, 'solve', acic_config(REDUCIBLE_PROBLEM, {'domains': [[2]]}),
                    'report.json')

    def test_no_problem(self):
        config = {'acic-config': {'schema-version': 1}}
        with TempDirectory() as temp_dir:
            with self.assertRaisesRegex(
                    AssertionError, r"No problem configured, give acic-config.problem or --builtin"):
                run_command_and_load_report(temp_dir, 'solve', config, 'report.json')

    def test_unknown_config_key(self):
        with TempDirectory() as temp_dir:
            with self.assertRaisesRegex(
                    AssertionError, r"Command \(solve\) does not accept configuration keys \['seed'\]"):
                run_command_and_load_report(
                    temp_dir, 'solve', acic_config(TWO_STATE_PROBLEM, SCHEDULE, solve={'seed': 1}),
                    'report.json')
