"""Average-cost impulse control on the whole state space.

Two limits lead from the discounted stopped problems of `acic.impulse` to the
average-cost problem: the discount alpha goes to 0 on a fixed domain O_m, giving
lambda_(m) and w^m, and the domains grow. On a finite chain the last step is closed by a
normalized policy iteration on the whole space started from the strategy read off the
largest domain, and the result is verified against the ergodic stopping problem
``w(x) = inf_tau E_x[int_0^tau (f - lambda) ds + M w(X_tau)]``.
"""

import math

import numpy as np

from acic.exceptions import AssumptionError, ConvergenceError
from acic.impulse import (Strategy, apply_M, extract_strategy, lambda_alpha,
                          lambda_undiscounted, solve_normalized_qvi)
from acic.model import (as_state_vector, exit_time_moments, invariant_measure, nested_balls,
                        poisson_solve, strongly_connected_components, survival_probability,
                        Domain)
from acic.stopping import (StoppingProblem, solve_ergodic_stopping,
                           solve_undiscounted_stopping)

DEFAULT_ALPHAS = (1e-1, 1e-2, 1e-3, 1e-4)
DEFAULT_DOMAIN_COUNT = 4
DEFAULT_TOL_LAMBDA = 1e-6
DEFAULT_HORIZONS = (1.0, 5.0, 10.0)
VERIFY_TOLERANCE = 1e-6
MONOTONE_SLACK = 1e-9
REQUIRED_ASSUMPTIONS = {'full': ('A.1', 'A.3'), 'stopped': ('A.3',)}


class Schedule:
    """Discounts and nested domains of the approximation.

    Parameters
    ----------
    alphas : sequence of float
        Strictly decreasing and > 0.
    domains : sequence of Domain
        Strictly nested, each with at least one exterior state.
    tol_lambda : float, optional
        Tolerance on the increments of lambda_(m).

    Raises
    ------
    ValueError
        If an invariant fails.
    """

    def __init__(self, alphas=DEFAULT_ALPHAS, domains=(), tol_lambda=DEFAULT_TOL_LAMBDA):
        alphas = tuple(float(alpha) for alpha in alphas)
        if not alphas:
            raise ValueError("schedule needs at least one alpha")
        if any(not (math.isfinite(alpha) and alpha > 0) for alpha in alphas):
            raise ValueError(f"schedule alphas must be > 0, got {list(alphas)}")
        if any(later >= earlier for earlier, later in zip(alphas, alphas[1:])):
            raise ValueError(f"schedule alphas must be strictly decreasing, got {list(alphas)}")

        domains = tuple(domains)
        if not domains:
            raise ValueError("schedule needs at least one domain")
        for index, domain in enumerate(domains):
            if not domain.is_stopped:
                raise ValueError(f"schedule domain {index + 1} has no exterior state")
        for index, (inner, outer) in enumerate(zip(domains, domains[1:])):
            if not inner.is_strict_subset_of(outer):
                raise ValueError(
                    f"schedule domains {index + 1} and {index + 2} are not strictly nested")

        tol_lambda = float(tol_lambda)
        if not tol_lambda > 0:
            raise ValueError(f"tol_lambda must be > 0, got {tol_lambda}")

        self.__alphas = alphas
        self.__domains = domains
        self.__tol_lambda = tol_lambda

    @classmethod
    def default(cls, model, cost, count=DEFAULT_DOMAIN_COUNT, alphas=DEFAULT_ALPHAS,
                tol_lambda=DEFAULT_TOL_LAMBDA):
        """Growing balls around U."""
        return cls(alphas, nested_balls(model, cost.targets, count), tol_lambda)

    @property
    def alphas(self):
        """Discounts, decreasing."""
        return self.__alphas

    @property
    def domains(self):
        """Nested domains, growing."""
        return self.__domains

    @property
    def tol_lambda(self):
        """Tolerance on lambda increments."""
        return self.__tol_lambda

def richardson(first, second):
    """Linear extrapolation to alpha = 0 from two (alpha, lambda_alpha) pairs."""
    (alpha_previous, lam_previous), (alpha, lam) = first, second
    return lam + alpha * (lam - lam_previous) / (alpha_previous - alpha)

def solve_stopped_ergodic(model, domain, cost, f, alphas=DEFAULT_ALPHAS,
                          tol=DEFAULT_TOL_LAMBDA):
    """lambda_(m) and w^m on a stopped domain.

    lambda_(m) is computed twice: extrapolating lambda_alpha over `alphas` and directly
    at alpha = 0. The direct value is returned; a disagreement above 10 tol is flagged in
    the details.

    Returns
    -------
    QviSolution
        Details hold ``alpha-trace`` (list of (alpha, lambda_alpha, residual)),
        ``extrapolated``, ``disagreement`` and ``flagged``.

    Raises
    ------
    AssumptionError
        If the exterior is unreachable from some interior state.
    """
    domain.require_exterior()
    exit_time_moments(model, domain)
    f = as_state_vector(f, model.size, 'f')

    trace = []
    for alpha in alphas:
        solution = lambda_alpha(model, domain, cost, f, alpha)
        trace.append((alpha, solution.lam, solution.residual))
    direct = lambda_undiscounted(model, domain, cost, f)

    pairs = [(alpha, lam) for alpha, lam, _ in trace]
    extrapolated = richardson(pairs[-2], pairs[-1]) if len(pairs) > 1 else pairs[-1][1]
    disagreement = abs(extrapolated - direct.lam)
    return direct.with_details(**{
        'alpha-trace': trace,
        'extrapolated': extrapolated,
        'disagreement': disagreement,
        'flagged': bool(disagreement > 10 * tol)
    })

class QviVerification:
    """Outcome of `verify_qvi`."""

    def __init__(self, residual, tol, inf_u, dominated, good_set, lower_bound_holds,
                 recomputed, bracket_gap=0.0, bracket_converged=True):
        self.__residual = float(residual)
        self.__tol = float(tol)
        self.__inf_u = float(inf_u)
        self.__dominated = bool(dominated)
        self.__good_set = list(good_set)
        self.__lower_bound_holds = lower_bound_holds
        self.__recomputed = recomputed
        self.__bracket_gap = float(bracket_gap)
        self.__bracket_converged = bool(bracket_converged)

    @property
    def residual(self):
        """max |RHS - w|."""
        return self.__residual

    @property
    def accepted(self):
        """True when the stopping bracket closed, the residual is within tolerance and no
        simulated estimate falls below lambda - 3 SE."""
        return (self.__bracket_converged and self.__residual <= self.__tol
                and self.__lower_bound_holds is not False)

    @property
    def bracket_gap(self):
        """Final gap of the ergodic stopping bracket."""
        return self.__bracket_gap

    @property
    def bracket_converged(self):
        """Whether the ergodic stopping bracket reached its gap tolerance."""
        return self.__bracket_converged

    @property
    def inf_u(self):
        """inf_U of the recomputed value."""
        return self.__inf_u

    @property
    def dominated(self):
        """w <= M w."""
        return self.__dominated

    @property
    def good_set(self):
        """Labels of {x : f(x) <= lambda}."""
        return list(self.__good_set)

    @property
    def lower_bound_holds(self):
        """None when no estimates were given, else whether every estimate is >= lambda - 3 SE."""
        return self.__lower_bound_holds

    @property
    def recomputed(self):
        """The recomputed value."""
        return self.__recomputed

    def to_dict(self):
        """Serializable form."""
        return {
            'residual': self.__residual,
            'tol': self.__tol,
            'accepted': self.accepted,
            'bracket-gap': self.__bracket_gap,
            'bracket-converged': self.__bracket_converged,
            'inf-u': self.__inf_u,
            'dominated': self.__dominated,
            'good-set': self.__good_set,
            # w is bounded on a finite chain, so (1/T) E[w(Y_T)] -> 0
            'bounded-value': True,
            'lower-bound-holds': self.__lower_bound_holds
        }

def verify_qvi(model, cost, f, lam, value, tol=VERIFY_TOLERANCE, poisson=None, estimates=()):
    """Recomputes inf_tau E_x[int_0^tau (f - lambda) ds + M w(X_tau)] and compares with w.

    Parameters
    ----------
    model : MarkovModel
    cost : ImpulseCost
    f : array_like
    lam : float
        lambda < mu(f).
    value : array_like
        w.
    tol : float, optional
    poisson : PoissonSolution, optional
    estimates : iterable of FunctionalEstimate, optional
        Simulated Jhat estimates; each must be >= lambda - 3 SE for acceptance.

    Returns
    -------
    QviVerification
    """
    f = as_state_vector(f, model.size, 'f')
    value = as_state_vector(value, model.size, 'w')
    m_value, _ = apply_M(value, cost)
    stopping = solve_ergodic_stopping(model, f, m_value, lam, poisson=poisson)
    recomputed = stopping.value
    residual = float(np.max(np.abs(recomputed - value)))
    lower_bound_holds = None
    checked = [estimate for estimate in estimates if estimate.value is not None]
    if checked:
        lower_bound_holds = all(
            estimate.value >= lam - 3 * estimate.standard_error for estimate in checked)
    return QviVerification(
        residual, tol, float(np.min(recomputed[cost.targets])),
        bool(np.all(value <= m_value + tol)),
        model.labels_of(np.flatnonzero(f <= lam)), lower_bound_holds, recomputed,
        stopping.bracket_gap, stopping.converged)

class ErgodicSolution:
    """Average-cost solution.

    Parameters
    ----------
    lam : float
    value : numpy.ndarray
        w with inf_U w = 0.
    m_value : numpy.ndarray
    strategy : Strategy
    lambda_trace : list of dict
        Rows with keys m, alpha, lambda, residual, gap; alpha = 0 rows hold lambda_(m).
    mu_f : float or None
        None for the stopped pipeline.
    residual : float
    degenerate : bool
    converged : bool
    details : dict, optional
    """

    def __init__(self, lam, value, m_value, strategy, lambda_trace, mu_f, residual,
                 degenerate, converged, details=None):
        self.__lam = float(lam)
        self.__value = value
        self.__m_value = m_value
        self.__strategy = strategy
        self.__lambda_trace = list(lambda_trace)
        self.__mu_f = mu_f
        self.__residual = float(residual)
        self.__degenerate = bool(degenerate)
        self.__converged = bool(converged)
        self.__details = dict(details or {})

    @property
    def lam(self):
        """lambda."""
        return self.__lam

    @property
    def value(self):
        """w."""
        return self.__value

    @property
    def m_value(self):
        """M w."""
        return self.__m_value

    @property
    def strategy(self):
        """V hat."""
        return self.__strategy

    @property
    def lambda_trace(self):
        """Rows of (m, alpha, lambda, residual, gap)."""
        return list(self.__lambda_trace)

    @property
    def mu_f(self):
        """mu(f), None when the uncontrolled chain is not irreducible."""
        return self.__mu_f

    @property
    def gap(self):
        """mu(f) - lambda."""
        return None if self.__mu_f is None else self.__mu_f - self.__lam

    @property
    def residual(self):
        """QVI residual."""
        return self.__residual

    @property
    def degenerate(self):
        """True when no intervention pays, lambda = mu(f)."""
        return self.__degenerate

    @property
    def converged(self):
        """True when the last lambda_(m) increment and the Cauchy gap of w^m on the smallest
        domain are both below tol_lambda; for the stopped pipeline, when the extrapolated and
        direct lambda_(m) agree."""
        return self.__converged

    @property
    def details(self):
        """Extras: domain lambdas, verification, z_m trace."""
        return dict(self.__details)

def _trace_rows(index, solution, mu_f):
    rows = []
    for alpha, lam, residual in solution.details['alpha-trace']:
        rows.append({'m': index, 'alpha': alpha, 'lambda': lam, 'residual': residual,
                     'gap': None if mu_f is None else mu_f - lam})
    rows.append({'m': index, 'alpha': 0.0, 'lambda': solution.lam,
                 'residual': solution.residual,
                 'gap': None if mu_f is None else mu_f - solution.lam})
    return rows

def _domain_sweep(model, cost, f, schedule, mu_f=None):
    solutions = []
    rows = []
    for index, domain in enumerate(schedule.domains, 1):
        solution = solve_stopped_ergodic(
            model, domain, cost, f, schedule.alphas, schedule.tol_lambda)
        solutions.append(solution)
        rows.extend(_trace_rows(index, solution, mu_f))
    return solutions, rows

def _domain_summary(solutions):
    return [{
        'm': index,
        'lambda': solution.lam,
        'extrapolated': solution.details['extrapolated'],
        'disagreement': solution.details['disagreement'],
        'flagged': solution.details['flagged'],
        'interior-states': int(solution.domain.interior.sum())
    } for index, solution in enumerate(solutions, 1)]

def _settled(solutions, tol):
    if len(solutions) < 2:
        return True
    return abs(solutions[-1].lam - solutions[-2].lam) < tol

def _cauchy_gap(solutions):
    """sup over the smallest domain of |w^M - w^(M-1)|."""
    if len(solutions) < 2:
        return 0.0
    core = solutions[0].domain.interior
    return float(np.max(np.abs(solutions[-1].value[core] - solutions[-2].value[core])))

def z_trace(model, cost, f, lam, value, domains):
    """z_m(x) = inf_tau E_x[int_0^{tau ^ tau_m} (f - lambda) ds + M w(X_{tau ^ tau_m})] for
    every domain, nonincreasing in m for nested domains."""
    m_value, _ = apply_M(value, cost)
    running = as_state_vector(f, model.size, 'f') - float(lam)
    return [solve_undiscounted_stopping(
        model, StoppingProblem(running, m_value, m_value, 0.0, domain)).value
            for domain in domains]

def _is_nonincreasing(vectors):
    return all(np.all(later <= earlier + MONOTONE_SLACK)
               for earlier, later in zip(vectors, vectors[1:]))

def solve_stopped(model, cost, f, schedule):
    """lambda_(m) and w^m on the largest domain of the schedule only.

    Used for problems whose uncontrolled chain is reducible, such as a drift with an
    absorbing end, where the full space average is not defined by mu(f).

    Returns
    -------
    ErgodicSolution
    """
    f = as_state_vector(f, model.size, 'f')
    domain = schedule.domains[-1]
    solution = solve_stopped_ergodic(
        model, domain, cost, f, schedule.alphas, schedule.tol_lambda)
    strategy = extract_strategy(solution, cost)
    return ErgodicSolution(
        solution.lam, solution.value, solution.m_value, strategy,
        _trace_rows(len(schedule.domains), solution, None), None, solution.residual,
        degenerate=False, converged=not solution.details['flagged'],
        details={'domain-lambdas': _domain_summary([solution]), 'pipeline': 'stopped'})

def solve_full(model, cost, f, schedule, verify_tol=VERIFY_TOLERANCE):
    """(lambda, w, V hat) of the average-cost problem.

    Runs `solve_stopped_ergodic` along the domains, refines on the whole space from the
    strategy of the largest domain, verifies the result with the ergodic stopping solver
    and records z_m for every domain.

    Parameters
    ----------
    model : MarkovModel
        Irreducible.
    cost : ImpulseCost
    f : array_like
    schedule : Schedule
    verify_tol : float, optional

    Returns
    -------
    ErgodicSolution
        The degenerate regime (lambda = mu(f), empty strategy, w = q - min_U q) is returned
        when no intervention pays.

    Raises
    ------
    AssumptionError
        If the chain is reducible or a domain exterior is unreachable.
    ConvergenceError
        If the final solution fails verification.
    """
    f = as_state_vector(f, model.size, 'f')
    poisson = poisson_solve(model, f)
    mu_f = poisson.mu_f
    tol = schedule.tol_lambda

    solutions, rows = _domain_sweep(model, cost, f, schedule, mu_f)
    details = {
        'domain-lambdas': _domain_summary(solutions),
        'cauchy-gap': _cauchy_gap(solutions),
        'pipeline': 'full'
    }
    converged = _settled(solutions, tol) and details['cauchy-gap'] < tol

    refined = None
    if not all(solution.lam >= mu_f - tol for solution in solutions):
        start = extract_strategy(solutions[-1], cost)
        full = Domain.full(model)
        try:
            refined = solve_normalized_qvi(model, full, cost, f, 0.0, start)
        except ConvergenceError:
            refined = solve_normalized_qvi(model, full, cost, f, 0.0)
        if refined.lam >= mu_f - tol:
            refined = None

    if refined is None:
        value = poisson.q - float(np.min(poisson.q[cost.targets]))
        m_value, _ = apply_M(value, cost)
        details['verification'] = None
        return ErgodicSolution(
            mu_f, value, m_value, Strategy.empty(model.size), rows, mu_f, 0.0,
            degenerate=True, converged=converged, details=details)

    rows.append({'m': len(solutions) + 1, 'alpha': 0.0, 'lambda': refined.lam,
                 'residual': refined.residual, 'gap': mu_f - refined.lam})
    verification = verify_qvi(model, cost, f, refined.lam, refined.value, verify_tol, poisson)
    if not verification.accepted:
        raise ConvergenceError(
            f"QVI verification failed: residual {verification.residual} (tol {verify_tol}),"
            f" stopping bracket gap {verification.bracket_gap}"
            f" ({'closed' if verification.bracket_converged else 'not closed'})")
    strategy = extract_strategy(refined, cost)

    traces = z_trace(model, cost, f, refined.lam, refined.value, schedule.domains)
    details.update({
        'verification': verification.to_dict(),
        'z-trace': traces,
        'z-monotone': _is_nonincreasing(traces),
        'refined-iterations': refined.iterations
    })
    return ErgodicSolution(
        refined.lam, refined.value, refined.m_value, strategy, rows, mu_f, refined.residual,
        degenerate=False, converged=converged, details=details)

class AssumptionReport:
    """Status and witnesses of the assumptions A.1 to A.4.

    Parameters
    ----------
    entries : dict
        Assumption name to a dict with ``status`` (pass, fail or auto) and ``witness``.
    exit_rows : list of dict
        Rows with keys m, horizon, exit-probability.
    required : sequence of str, optional
        Assumptions that must pass, by default those of the full pipeline.
    """

    def __init__(self, entries, exit_rows, required=REQUIRED_ASSUMPTIONS['full']):
        self.__entries = dict(entries)
        self.__exit_rows = list(exit_rows)
        self.__required = tuple(required)

    @property
    def entries(self):
        """Assumption name to status and witness."""
        return dict(self.__entries)

    def status(self, assumption):
        """pass, fail or auto."""
        return self.__entries[assumption]['status']

    @property
    def required(self):
        """Assumptions that must pass."""
        return self.__required

    @property
    def failed(self):
        """Required assumptions that do not pass."""
        return [name for name in self.__required if self.status(name) != 'pass']

    @property
    def passed(self):
        """Every required assumption passes."""
        return not self.failed

    def exit_probability_rows(self):
        """Rows of the A.4 table."""
        return list(self.__exit_rows)

    def to_dict(self):
        """Serializable form."""
        return {'assumptions': self.__entries, 'required': list(self.__required),
                'passed': self.passed}

def check_assumptions(model, schedule, f=None, horizons=DEFAULT_HORIZONS, pipeline='full'):
    """Report on A.1 (irreducibility, mu, q, K), A.2, A.3 (exit moments per domain) and A.4
    (exit probabilities from the smallest domain and expected exit times).

    A.4 passes when the exit probabilities are nonincreasing in m, the core expected exit
    time increases with m and, on the largest domain, exceeds the longest horizon. The
    report passes when the assumptions its pipeline relies on pass: A.1 and A.3 for
    ``full``, A.3 alone for ``stopped``.

    Never raises for a violated assumption; the report says which one failed.

    Returns
    -------
    AssumptionReport
    """
    if pipeline not in REQUIRED_ASSUMPTIONS:
        raise ValueError(
            f"pipeline must be one of {list(REQUIRED_ASSUMPTIONS)}, got ({pipeline})")
    entries = {}
    components = strongly_connected_components(model)
    if len(components) == 1:
        measure = invariant_measure(model)
        witness = {'mu': measure.weights, 'uniform-integrability': 'auto (finite chain)'}
        if f is not None:
            poisson = poisson_solve(model, f, measure)
            witness.update({'q': poisson.q, 'K': poisson.bound, 'mu-f': poisson.mu_f})
        entries['A.1'] = {'status': 'pass', 'witness': witness}
    else:
        entries['A.1'] = {'status': 'fail', 'witness': {
            'components': [model.labels_of(component) for component in components]}}

    entries['A.2'] = {'status': 'auto', 'witness': 'finite state space'}

    moments = []
    failures = []
    for index, domain in enumerate(schedule.domains, 1):
        try:
            moment = exit_time_moments(model, domain)
        except AssumptionError as error:
            failures.append({'m': index, 'unreachable-from': error.witness})
            moments.append(None)
            continue
        moments.append(moment)
    entries['A.3'] = {
        'status': 'fail' if failures else 'pass',
        'witness': {
            'sup-first': [None if moment is None else moment.sup_first for moment in moments],
            'sup-second': [None if moment is None else moment.sup_second for moment in moments],
            'failures': failures
        }
    }

    core = schedule.domains[0].interior
    rows = []
    columns = {horizon: [] for horizon in horizons}
    for index, domain in enumerate(schedule.domains, 1):
        for horizon in horizons:
            exit_probability = float(np.max(
                1.0 - survival_probability(model, domain, horizon)[core]))
            columns[horizon].append(exit_probability)
            rows.append({'m': index, 'horizon': horizon, 'exit-probability': exit_probability})
    decreasing = all(
        all(later <= earlier + MONOTONE_SLACK for earlier, later in zip(values, values[1:]))
        for values in columns.values())
    expected = [None if moment is None else float(np.min(moment.first[core]))
                for moment in moments]
    known = [time for time in expected if time is not None]
    increasing = all(later > earlier for earlier, later in zip(known, known[1:]))
    exceeds = expected[-1] is not None and expected[-1] > max(horizons)
    entries['A.4'] = {
        'status': 'pass' if decreasing and increasing and exceeds else 'fail',
        'witness': {
            'exit-probability-nonincreasing': decreasing,
            'core-min-expected-exit-time': expected,
            'expected-exit-time-increasing': increasing,
            'expected-exit-time-exceeds-horizon': exceeds
        }
    }
    return AssumptionReport(entries, rows, REQUIRED_ASSUMPTIONS[pipeline])
