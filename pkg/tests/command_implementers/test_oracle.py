import os

from testfixtures import TempDirectory

from acic.command_implementers.oracle import Oracle
from acic.exceptions import SolverInputError

from tests.helpers.base_acic_test_case import BaseACICTestCase
from tests.helpers.test_utils import TWO_STATE_PROBLEM, acic_config, run_command_and_load_report

SCHEDULE = {'domains': [[0]]}

class TestOracle(BaseACICTestCase):
    def test_config_defaults(self):
        self.assertEqual(Oracle.command_implementer_config_defaults(),
                         {'max-policies': 500000, 'grid-points': 20001})

    def test_enumeration(self):
        with TempDirectory() as temp_dir:
            results, report, results_dir = run_command_and_load_report(
                temp_dir, 'oracle', acic_config(TWO_STATE_PROBLEM, SCHEDULE))

            self.assertEqual(results['kind'], 'enumeration')
            self.assertAlmostEqual(results['lambda'], 1.0)
            self.assertEqual(results['policies'], 2)
            self.assertEqual(results['impulse-region'], [1])
            self.assertEqual(len(results['closed-classes']), 1)
            self.assertEqual(results['closed-classes'][0]['states'], [0])
            self.assertAlmostEqual(results['closed-classes'][0]['average'], 1.0)
            self.assertEqual(report['policies'], 2)

            with open(os.path.join(results_dir, 'oracle_strategy.json')) as strategy_file:
                self.assertIn('"impulse-region"', strategy_file.read())

    def test_enumeration_budget(self):
        with TempDirectory() as temp_dir:
            with self.assertRaisesRegex(SolverInputError, r"policy enumeration budget exceeded"):
                run_command_and_load_report(
                    temp_dir, 'oracle',
                    acic_config(TWO_STATE_PROBLEM, SCHEDULE, oracle={'max-policies': 1}))

    def test_renewal(self):
        problem = {'builtin': 'drift-example', 'parameters': {'step': 0.01}}
        with TempDirectory() as temp_dir:
            results, _, results_dir = run_command_and_load_report(
                temp_dir, 'oracle', acic_config(problem))

            self.assertEqual(results['kind'], 'renewal')
            self.assertAlmostEqual(results['lambda'], 1.5 / 1.5 ** (1 / 3), places=6)
            self.assertAlmostEqual(results['threshold'], 1.5 ** (1 / 3), places=4)
            self.assertAlmostEqual(results['claimed-lambda'], 4 / 3)
            self.assertEqual(results['xi'], 0.0)
            self.assertFalse(os.path.exists(os.path.join(results_dir, 'oracle_strategy.json')))
