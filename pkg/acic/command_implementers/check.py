"""`CommandImplementer` for the check command.

Configuration Keys
------------------
Configuration key | Required? | Default        | Description
------------------|-----------|----------------|-----------
`horizons`        | True      | [1.0, 5.0, 10.0] | Horizons of the exit probability table.

Files
-----
exit_probability.csv and check.json in the results directory. The check passes when the
assumptions of the problem's pipeline pass (A.1 and A.3 for `full`, A.3 for `stopped`). The
report is written before a failed check raises.
"""

from acic.command_implementer import CommandImplementer
from acic.ergodic import DEFAULT_HORIZONS, check_assumptions
from acic.exceptions import AssumptionError

DEFAULT_CONFIG = {
    'horizons': list(DEFAULT_HORIZONS)
}

REQUIRED_CONFIG_KEYS = [
    'horizons'
]


class Check(CommandImplementer):
    """`CommandImplementer` reporting on the structural assumptions.
    """

    @staticmethod
    def command_implementer_config_defaults():
        return DEFAULT_CONFIG

    @staticmethod
    def required_runtime_command_config_keys():
        return REQUIRED_CONFIG_KEYS

    def _run_command(self):
        problem = self.problem
        horizons = [float(horizon) for horizon in self.get_config_value('horizons')]
        report = check_assumptions(
            problem.model, problem.schedule, problem.running_cost, horizons, problem.pipeline)
        self.write_csv_file(
            'exit_probability.csv', ['m', 'horizon', 'exit-probability'],
            [[row['m'], row['horizon'], row['exit-probability']]
             for row in report.exit_probability_rows()])

        results = {'problem': problem.summary(), **report.to_dict()}
        for name, entry in report.entries.items():
            print(f"{name}: {entry['status']}")
        if not report.passed:
            self.write_report(results)
            failed = report.failed
            raise AssumptionError(
                f"Assumption check failed for {failed} ({problem.pipeline} pipeline)",
                assumption=failed[0],
                witness=report.entries[failed[0]]['witness'])
        return results
