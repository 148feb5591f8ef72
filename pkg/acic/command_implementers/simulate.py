"""`CommandImplementer` for the simulate command.

Configuration Keys
------------------
Configuration key    | Required? | Default   | Description
---------------------|-----------|-----------|-----------
`seed`               | True      | 0         | Seed of the first replication, replication r uses seed + r.
`replications`       | True      | 100       | Independent replications, at least 30.
`horizon`            | True      | 10000.0   | Simulated time per replication.
`strategy`           | True      | optimal   | `optimal` (solved strategy) or `none` (never intervene).
`start`              | False     |           | Start state label, defaults to the first target.
`impulse-index`      | False     |           | n of the ratio estimate of J.
`stopped`            | True      | False     | Also estimate the functional killed at exit from the largest domain.
`trajectory-horizon` | True      | 10.0      | Length of the exported sample trajectory.
`tol`                | True      | 1e-6      | Tolerance of the QVI verification, rerun with the simulated Jhat.

Files
-----
estimates.json, trajectory.csv and simulate.json in the results directory.
"""

from acic.command_implementer import CommandImplementer
from acic.command_implementers.solve import solve_problem
from acic.ergodic import VERIFY_TOLERANCE, verify_qvi
from acic.impulse import Strategy
from acic.model import invariant_measure, strongly_connected_components
from acic.sim import estimate_functionals, simulate_controlled, trajectory_rows

DEFAULT_CONFIG = {
    'seed': 0,
    'replications': 100,
    'horizon': 1e4,
    'strategy': 'optimal',
    'start': None,
    'impulse-index': None,
    'stopped': False,
    'trajectory-horizon': 10.0,
    'tol': VERIFY_TOLERANCE
}

REQUIRED_CONFIG_KEYS = [
    'seed',
    'replications',
    'horizon',
    'strategy',
    'trajectory-horizon'
]

STRATEGIES = ('optimal', 'none')


class Simulate(CommandImplementer):
    """`CommandImplementer` estimating the average-cost functionals by simulation.
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
        kind = self.get_config_value('strategy')
        assert kind in STRATEGIES, \
            f"Configuration key (strategy) must be one of {list(STRATEGIES)}, got ({kind})"

        lam = None
        verify = False
        tol = float(self.get_config_value('tol'))
        if kind == 'optimal':
            solution, _ = solve_problem(problem, tol)
            strategy = solution.strategy
            lam = solution.lam
            # the full-space check needs an irreducible chain and lambda < mu(f)
            verify = problem.pipeline == 'full' and not solution.degenerate
        else:
            strategy = Strategy.empty(model.size)

        start_label = self.get_config_value('start')
        if start_label is None:
            start = int(problem.cost.targets[0])
        else:
            start = model.index_of(start_label)

        seed = int(self.get_config_value('seed'))
        domain = problem.schedule.domains[-1] if self.get_config_value('stopped') else None
        impulse_index = self.get_config_value('impulse-index')
        print(f"Simulating {self.get_config_value('replications')} replications from"
              f" state {model.states[start]}")
        estimates = estimate_functionals(
            model, strategy, problem.cost, problem.running_cost, start=start,
            horizon=float(self.get_config_value('horizon')),
            reps=int(self.get_config_value('replications')), seed=seed, domain=domain,
            impulse_index=None if impulse_index is None else int(impulse_index))
        records = {name: estimate.to_dict() for name, estimate in estimates.items()}
        self.write_json_file('estimates.json', records)

        trajectory = simulate_controlled(
            model, strategy, problem.cost, float(self.get_config_value('trajectory-horizon')),
            seed, f=problem.running_cost, start=start)
        self.write_csv_file(
            'trajectory.csv', ['time', 'state', 'kind', 'cost'], trajectory_rows(model, trajectory))

        jhat = estimates['Jhat']
        results = {
            'strategy': kind,
            'impulse-region': strategy.to_dict(model.states)['impulse-region'],
            'lambda': lam,
            'estimates': records
        }
        if lam is not None:
            results['jhat-within-three-se'] = \
                abs(jhat.value - lam) <= 3 * jhat.standard_error
            results['jhat-above-lambda'] = jhat.value >= lam - 3 * jhat.standard_error
        if verify:
            verification = verify_qvi(
                model, problem.cost, problem.running_cost, lam, solution.value, tol,
                estimates=[jhat])
            results['verification'] = verification.to_dict()
            results['lower-bound-holds'] = verification.lower_bound_holds
        if strategy.is_empty and len(strongly_connected_components(model)) == 1:
            mu_f = invariant_measure(model).expectation(problem.running_cost)
            results['mu-f'] = mu_f
            results['jhat-within-three-se-of-mu-f'] = \
                abs(jhat.value - mu_f) <= 3 * jhat.standard_error
        return results
