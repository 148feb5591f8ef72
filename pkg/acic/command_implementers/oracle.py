"""`CommandImplementer` for the oracle command.

Runs the renewal reward search for problems that have a renewal counterpart (the drift
example) and the exhaustive stationary policy enumeration otherwise.

Configuration Keys
------------------
Configuration key | Required? | Default | Description
------------------|-----------|---------|-----------
`max-policies`    | True      | 500000  | Enumeration budget.
`grid-points`     | True      | 20001   | Grid of the renewal search.

Files
-----
oracle_strategy.json (enumeration only) and oracle.json in the results directory.
"""

from acic.command_implementer import CommandImplementer
from acic.sim import (MAX_ORACLE_POLICIES, evaluate_strategy_average,
                      policy_enumeration_oracle, renewal_oracle)

DEFAULT_CONFIG = {
    'max-policies': MAX_ORACLE_POLICIES,
    'grid-points': 20001
}

REQUIRED_CONFIG_KEYS = [
    'max-policies',
    'grid-points'
]


class Oracle(CommandImplementer):
    """`CommandImplementer` computing lambda* without the QVI solvers.
    """

    @staticmethod
    def command_implementer_config_defaults():
        return DEFAULT_CONFIG

    @staticmethod
    def required_runtime_command_config_keys():
        return REQUIRED_CONFIG_KEYS

    def _run_command(self):
        problem = self.problem
        model = problem.model

        if problem.renewal is not None:
            print("Renewal reward search")
            oracle = renewal_oracle(
                grid_points=int(self.get_config_value('grid-points')), **problem.renewal)
            return {'kind': 'renewal', 'problem': problem.summary(), **oracle.to_dict()}

        print(f"Enumerating stationary policies on {model.size} states")
        lam, strategy, count = policy_enumeration_oracle(
            model, problem.cost, problem.running_cost,
            max_policies=int(self.get_config_value('max-policies')))
        _, details = evaluate_strategy_average(
            model, problem.cost, problem.running_cost, strategy)
        self.write_json_file('oracle_strategy.json', strategy.to_dict(model.states))
        return {
            'kind': 'enumeration',
            'problem': problem.summary(),
            'lambda': lam,
            'policies': count,
            'impulse-region': strategy.to_dict(model.states)['impulse-region'],
            'closed-classes': details['classes']
        }
