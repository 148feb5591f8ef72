import os

from testfixtures import TempDirectory

from acic.command_implementers.sweep import Sweep

from tests.helpers.base_acic_test_case import BaseACICTestCase
from tests.helpers.test_utils import (TWO_STATE_PROBLEM, acic_config, read_csv_rows,
                                      run_command_and_load_report)

SCHEDULE = {'alphas': [0.1, 0.01], 'domains': [[0]]}
RANDOM_CTMC = {
    'builtin': 'random-ctmc',
    'parameters': {'seed': 2, 'n': 6}
}

class TestSweep(BaseACICTestCase):
    def test_config_defaults(self):
        self.assertEqual(Sweep.command_implementer_config_defaults(), {'alphas': None})
        self.assertEqual(Sweep.required_runtime_command_config_keys(), [])

    def test_two_state(self):
        with TempDirectory() as temp_dir:
            results, report, results_dir = run_command_and_load_report(
                temp_dir, 'sweep', acic_config(TWO_STATE_PROBLEM, SCHEDULE))

            self.assertEqual(results['rows'], 3)
            self.assertTrue(results['lambda-bounded'])
            self.assertTrue(results['exit-time-nondecreasing'])
            self.assertEqual(len(results['lambda-by-domain']), 1)
            self.assertAlmostEqual(results['lambda-by-domain'][0], 1.0, places=6)
            self.assertEqual(report['rows'], 3)

            rows = read_csv_rows(os.path.join(results_dir, 'sweep.csv'))
            self.assertEqual(rows[0][:4], ['m', 'alpha', 'lambda', 'residual'])
            self.assertEqual([row[1] for row in rows[1:]], ['0.10000000000000001', '0.01', '0'])
            # no w bound is claimed at alpha = 0
            self.assertEqual(rows[3][8], '')
            self.assertTrue(results['bound-holds'])
            header = rows[0]
            holds = header.index('bound-holds')
            self.assertEqual(header[holds - 1], 'discount-bound')
            self.assertEqual([row[holds] for row in rows[1:]], ['true', 'true', ''])

    def test_alphas_override(self):
        with TempDirectory() as temp_dir:
            results, _, _ = run_command_and_load_report(
                temp_dir, 'sweep', acic_config(TWO_STATE_PROBLEM, SCHEDULE, sweep={'alphas': [0.5]}))

            self.assertEqual(results['rows'], 2)

    def test_alphas_must_decrease(self):
        with TempDirectory() as temp_dir:
            with self.assertRaisesRegex(ValueError, r"schedule alphas must be strictly decreasing"):
                run_command_and_load_report(
                    temp_dir, 'sweep',
                    acic_config(TWO_STATE_PROBLEM, SCHEDULE, sweep={'alphas': [0.01, 0.1]}))

    def test_nested_domains(self):
        with TempDirectory() as temp_dir:
            results, _, _ = run_command_and_load_report(
                temp_dir, 'sweep',
                acic_config(RANDOM_CTMC, {'alphas': [0.1, 0.01], 'domains': {'count': 3}}))

            self.assertEqual(results['rows'], 3 * 3)
            self.assertTrue(results['exit-time-nondecreasing'])
