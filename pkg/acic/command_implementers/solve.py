"""`CommandImplementer` for the solve command.

Configuration Keys
------------------
Configuration key | Required? | Default  | Description
------------------|-----------|----------|-----------
`tol`             | True      | 1e-6     | Tolerance of the QVI verification.
`grid-points`     | True      | 20001    | Grid of the renewal oracle, for problems that have one.

Files
-----
lambda_trace.csv, value.csv, strategy.json and report.json in the results directory.
"""

import numpy as np

from acic.command_implementer import CommandImplementer
from acic.ergodic import (REQUIRED_ASSUMPTIONS, VERIFY_TOLERANCE, check_assumptions, solve_full,
                          solve_stopped)
from acic.exceptions import AssumptionError
from acic.sim import renewal_oracle

DEFAULT_CONFIG = {
    'tol': VERIFY_TOLERANCE,
    'grid-points': 20001
}

REQUIRED_CONFIG_KEYS = [
    'tol',
    'grid-points'
]

TRACE_HEADER = ['m', 'alpha', 'lambda', 'residual', 'gap']


def require_assumptions(problem, report):
    """
    Raises
    ------
    AssumptionError
        If an assumption the problem's pipeline relies on fails.
    """
    for assumption in REQUIRED_ASSUMPTIONS[problem.pipeline]:
        if report.status(assumption) != 'pass':
            raise AssumptionError(
                f"{assumption} fails: {report.entries[assumption]['witness']}",
                assumption=assumption,
                witness=report.entries[assumption]['witness'])

def solve_problem(problem, tol=VERIFY_TOLERANCE, report=None):
    """Checks the assumptions of a problem, unless a report is given, and solves it with its
    pipeline.

    Returns
    -------
    tuple
        (ErgodicSolution, AssumptionReport)
    """
    if report is None:
        report = check_assumptions(
            problem.model, problem.schedule, problem.running_cost, pipeline=problem.pipeline)
    require_assumptions(problem, report)
    if problem.pipeline == 'stopped':
        solution = solve_stopped(
            problem.model, problem.cost, problem.running_cost, problem.schedule)
    else:
        solution = solve_full(
            problem.model, problem.cost, problem.running_cost, problem.schedule, tol)
    return solution, report

def assumption_statuses(report):
    """Assumption name to status."""
    return {name: entry['status'] for name, entry in report.entries.items()}

class Solve(CommandImplementer):
    """`CommandImplementer` solving the average-cost impulse control problem.
    """

    @staticmethod
    def command_implementer_config_defaults():
        return DEFAULT_CONFIG

    @staticmethod
    def required_runtime_command_config_keys():
        return REQUIRED_CONFIG_KEYS

    def report_file_name(self):
        return 'report.json'

    def _run_command(self):
        problem = self.problem
        model = problem.model
        print(f"Solving {problem.name} on {model.size} states ({problem.pipeline} pipeline)")

        report = check_assumptions(
            model, problem.schedule, problem.running_cost, pipeline=problem.pipeline)
        print(f"Assumptions: {assumption_statuses(report)}")
        solution, _ = solve_problem(problem, float(self.get_config_value('tol')), report)

        self.write_csv_file('lambda_trace.csv', TRACE_HEADER, [
            [row[column] for column in TRACE_HEADER] for row in solution.lambda_trace])

        region = solution.strategy.impulse_region
        targets = solution.strategy.target
        self.write_csv_file(
            'value.csv',
            ['state', 'w', 'Mw', 'impulse', 'target'],
            [[model.states[index], solution.value[index], solution.m_value[index],
              bool(region[index]), model.states[targets[index]] if region[index] else None]
             for index in range(model.size)])
        self.write_json_file('strategy.json', solution.strategy.to_dict(model.states))

        details = solution.details
        results = {
            'problem': problem.summary(),
            'lambda': solution.lam,
            'mu-f': solution.mu_f,
            'gap': solution.gap,
            'residual': solution.residual,
            'degenerate': solution.degenerate,
            'converged': solution.converged,
            'impulse-region-size': int(np.sum(region)),
            'assumptions': assumption_statuses(report),
            'domain-lambdas': details.get('domain-lambdas'),
            'verification': details.get('verification'),
            'z-monotone': details.get('z-monotone'),
            'cauchy-gap': details.get('cauchy-gap')
        }

        if problem.renewal is not None:
            oracle = renewal_oracle(
                grid_points=int(self.get_config_value('grid-points')), **problem.renewal)
            results['renewal-oracle'] = oracle.to_dict()
            results['oracle-delta'] = solution.lam - oracle.lam
            results['claimed-lambda'] = oracle.claimed_lam
            results['claimed-delta'] = solution.lam - oracle.claimed_lam

        print(f"lambda = {solution.lam!r}")
        return results
