"""`CommandImplementer` for the sweep command.

Tabulates lambda_alpha and w_alpha for every domain m and discount alpha of the schedule,
with an alpha = 0 row per domain holding lambda_(m). Every alpha > 0 row compares
|lambda_alpha - lambda_(m)| with the discount error bound in `bound-holds`.

Configuration Keys
------------------
Configuration key | Required? | Default | Description
------------------|-----------|---------|-----------
`alphas`          | False     |         | Discounts to sweep, defaults to the schedule's.

Files
-----
sweep.csv and sweep.json in the results directory.
"""

import numpy as np

from acic.command_implementer import CommandImplementer
from acic.ergodic import MONOTONE_SLACK, Schedule
from acic.impulse import lambda_alpha, lambda_undiscounted
from acic.model import exit_time_moments
from acic.stopping import StoppingProblem, discount_error_bound

DEFAULT_CONFIG = {
    'alphas': None
}

SWEEP_HEADER = [
    'm', 'alpha', 'lambda', 'residual', 'inf-u', 'sup-w', 'lambda-bounded', 'w-bound',
    'w-bounded', 'lambda-difference', 'discount-bound', 'bound-holds', 'sup-exit-time'
]


def _row(index, alpha, solution, f_norm, moments, direct, problem, domain):
    interior = domain.interior
    targets = problem.cost.targets[interior[problem.cost.targets]]
    sup_w = float(np.max(np.abs(solution.value[interior])))
    w_bound = float(np.max(np.abs(problem.running_cost - solution.lam))) * moments.sup_first
    if alpha > 0:
        prob = StoppingProblem(
            problem.running_cost - direct.lam, direct.m_value, direct.m_value, 0.0, domain)
        difference = abs(solution.lam - direct.lam)
        bound = discount_error_bound(problem.model, prob, alpha)
    else:
        difference, bound = 0.0, 0.0
    return {
        'm': index,
        'alpha': alpha,
        'lambda': solution.lam,
        'residual': solution.residual,
        'inf-u': float(np.min(solution.value[targets])),
        'sup-w': sup_w,
        'lambda-bounded': abs(solution.lam) <= f_norm + MONOTONE_SLACK,
        'w-bound': w_bound,
        'w-bounded': None if alpha == 0 else sup_w <= w_bound + MONOTONE_SLACK,
        'lambda-difference': difference,
        'discount-bound': bound,
        'bound-holds': None if alpha == 0 else difference <= bound + MONOTONE_SLACK,
        'sup-exit-time': moments.sup_first
    }

class Sweep(CommandImplementer):
    """`CommandImplementer` tabulating the (m, alpha) approximations.
    """

    @staticmethod
    def command_implementer_config_defaults():
        return DEFAULT_CONFIG

    def _run_command(self):
        problem = self.problem
        model = problem.model
        alphas = self.get_config_value('alphas')
        if alphas is None:
            alphas = problem.schedule.alphas
        else:
            alphas = Schedule(alphas, problem.schedule.domains).alphas
        f_norm = float(np.max(np.abs(problem.running_cost)))

        rows = []
        for index, domain in enumerate(problem.schedule.domains, 1):
            moments = exit_time_moments(model, domain)
            direct = lambda_undiscounted(model, domain, problem.cost, problem.running_cost)
            for alpha in alphas:
                print(f"m = {index}, alpha = {alpha}")
                solution = lambda_alpha(model, domain, problem.cost, problem.running_cost, alpha)
                rows.append(_row(index, alpha, solution, f_norm, moments, direct, problem,
                                 domain))
            rows.append(_row(index, 0.0, direct, f_norm, moments, direct, problem, domain))

        self.write_csv_file(
            'sweep.csv', SWEEP_HEADER, [[row[column] for column in SWEEP_HEADER] for row in rows])

        exit_times = [row['sup-exit-time'] for row in rows if row['alpha'] == 0.0]
        return {
            'problem': problem.summary(),
            'rows': len(rows),
            'lambda-bounded': all(row['lambda-bounded'] for row in rows),
            'w-bounded': all(row['w-bounded'] is not False for row in rows),
            'bound-holds': all(row['bound-holds'] is not False for row in rows),
            'exit-time-nondecreasing': all(
                later >= earlier for earlier, later in zip(exit_times, exit_times[1:])),
            'lambda-by-domain': [row['lambda'] for row in rows if row['alpha'] == 0.0]
        }
