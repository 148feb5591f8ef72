"""Optimal stopping solvers.

Three problems are covered, all as minimization:

* discounted stopping with an exit boundary,
  ``w(x) = inf_tau E_x[int_0^{tau ^ tau_O} e^{-alpha s} running ds
  + 1{tau < tau_O} e^{-alpha tau} G(X_tau) + 1{tau >= tau_O} e^{-alpha tau_O} H(X_tau_O)]``,
* its undiscounted version (alpha = 0), which needs an exterior reachable from every
  interior state,
* ergodic stopping ``z(x) = inf_tau E_x[int_0^tau (f - lambda) ds + w(X_tau)]`` for
  lambda < mu(f), reduced to a nonnegative problem through the Poisson equation.

Values at jump epochs satisfy
``cont(x) = (running(x) + sum_{y != x} q_xy v(y)) / (alpha + q_x)`` with v = H outside O,
and the Bellman operator is ``T v = min(G, cont(v))`` on the interior.
"""

import math

import numpy as np
import scipy.sparse as sp

from acic.exceptions import ConvergenceError, SolverInputError
from acic.model import (as_state_vector, exit_time_moments, poisson_solve,
                        require_reachable_exterior, solve_linear, transition_kernel, Domain)

STOP_TOLERANCE = 1e-9
GAP_TOLERANCE = 1e-10
MAX_SWEEPS = 2_000_000
MAX_POLICY_ITERATIONS = 10_000
DENSE_SWEEP_LIMIT = 400

STOPPING_METHODS = ('policy', 'value')
PENALTY_SCHEMES = ('auto', 'explicit', 'implicit')
ERGODIC_SCHEMES = ('uniformized', 'sampled')


class StoppingProblem:
    """Data of a stopping problem on a domain.

    Parameters
    ----------
    running : array_like
        Integrand, cost per unit time.
    obstacle : array_like
        G, paid when stopping strictly before exit.
    exit_payoff : array_like
        H, paid at exit from the domain.
    discount : float
        alpha >= 0.
    domain : Domain
    """

    def __init__(self, running, obstacle, exit_payoff, discount, domain):
        size = domain.size
        self.__running = as_state_vector(running, size, 'running')
        self.__obstacle = as_state_vector(obstacle, size, 'obstacle')
        self.__exit_payoff = as_state_vector(exit_payoff, size, 'exit_payoff')
        discount = float(discount)
        if not (math.isfinite(discount) and discount >= 0):
            raise ValueError(f"discount must be >= 0, got {discount}")
        self.__discount = discount
        self.__domain = domain

    @property
    def running(self):
        """Integrand."""
        return self.__running

    @property
    def obstacle(self):
        """G."""
        return self.__obstacle

    @property
    def exit_payoff(self):
        """H."""
        return self.__exit_payoff

    @property
    def discount(self):
        """alpha."""
        return self.__discount

    @property
    def domain(self):
        """Domain the process is stopped at."""
        return self.__domain

    def is_ordered(self):
        """True when G >= H on the exterior, the ordering the theory assumes."""
        exterior = self.__domain.exterior
        return bool(np.all(self.__obstacle[exterior] >= self.__exit_payoff[exterior]))

class StoppingSolution:
    """Result of a stopping solve.

    Parameters
    ----------
    value : numpy.ndarray
    stop_region : numpy.ndarray of bool
    bracket_gap : float
        Certified max of upper - lower.
    iterations : int
    lower, upper : numpy.ndarray
        Certified brackets.
    gap_trace : sequence of float, optional
        Bracket gap after every sweep of a bracketed iteration.
    converged : bool, optional
    details : dict, optional
        Solver specific extras.
    """

    def __init__(self, value, stop_region, bracket_gap, iterations, lower, upper,
                 gap_trace=(), converged=True, details=None):
        self.__value = value
        self.__stop_region = stop_region
        self.__bracket_gap = float(bracket_gap)
        self.__iterations = int(iterations)
        self.__lower = lower
        self.__upper = upper
        self.__gap_trace = tuple(float(gap) for gap in gap_trace)
        self.__converged = bool(converged)
        self.__details = dict(details or {})

    @property
    def value(self):
        """Value function."""
        return self.__value

    @property
    def stop_region(self):
        """Mask of interior states where stopping is optimal."""
        return self.__stop_region

    @property
    def bracket_gap(self):
        """Certified max of upper - lower."""
        return self.__bracket_gap

    @property
    def iterations(self):
        """Sweeps or policy iterations done."""
        return self.__iterations

    @property
    def lower(self):
        """Certified lower bracket."""
        return self.__lower

    @property
    def upper(self):
        """Certified upper bracket."""
        return self.__upper

    @property
    def gap_trace(self):
        """Bracket gap per sweep, empty for policy iteration."""
        return self.__gap_trace

    @property
    def converged(self):
        """False when an iteration cap stopped a bracketed iteration early."""
        return self.__converged

    @property
    def details(self):
        """Solver specific extras."""
        return dict(self.__details)

def continuation_value(model, running, discount, values, states=None):
    """Value of waiting for the next jump and then following `values`.

    Parameters
    ----------
    model : MarkovModel
    running : numpy.ndarray
    discount : float
    values : numpy.ndarray
        Full length vector, already holding the exit payoff on the exterior.
    states : numpy.ndarray of int, optional
        States to evaluate, all by default.

    Returns
    -------
    numpy.ndarray
        (running + sum_{y != x} q_xy values(y)) / (discount + q_x); inf where the
        denominator vanishes.
    """
    flow = model.off_diagonal @ values
    rates = model.exit_rates + discount
    if states is not None:
        flow = flow[states]
        rates = rates[states]
        running = running[states]
    with np.errstate(divide='ignore', invalid='ignore'):
        return np.where(rates > 0, (running + flow) / np.where(rates > 0, rates, 1.0), np.inf)

def _bellman(model, prob, values):
    """T v on the interior, H on the exterior."""
    interior = prob.domain.interior_states
    result = prob.exit_payoff.copy()
    cont = continuation_value(model, prob.running, prob.discount, values, interior)
    result[interior] = np.minimum(prob.obstacle[interior], cont)
    return result

def _bellman_residual(model, prob, values):
    return float(np.max(np.abs(_bellman(model, prob, values) - values)))

def _evaluate_stop_set(model, prob, stop):
    """Value of stopping on `stop` (interior mask) and continuing elsewhere in the domain."""
    domain = prob.domain
    fixed = np.where(domain.interior, 0.0, prob.exit_payoff)
    fixed[stop] = prob.obstacle[stop]
    waiting = np.flatnonzero(domain.interior & ~stop)
    value = fixed.copy()
    if waiting.size == 0:
        return value
    rows = model.generator[waiting]
    system = prob.discount * sp.identity(waiting.size, format='csr') - rows[:, waiting]
    rhs = prob.running[waiting] + rows @ fixed
    value[waiting] = solve_linear(system, rhs)
    return value

def _expected_jumps_to_exit(model, domain):
    """Expected number of jumps before exit, solves -Q_O n = q on the interior."""
    interior = domain.interior_states
    system = -model.generator[interior][:, interior]
    jumps = np.zeros(model.size)
    jumps[interior] = solve_linear(system, model.exit_rates[interior])
    return jumps

def _policy_iteration(model, prob, tol, max_iterations):
    interior = prob.domain.interior_states
    stop = np.zeros(model.size, dtype=bool)
    seen = set()
    for iteration in range(1, max_iterations + 1):
        value = _evaluate_stop_set(model, prob, stop)
        seen.add(stop.tobytes())
        cont = continuation_value(model, prob.running, prob.discount, value, interior)
        obstacle = prob.obstacle[interior]
        improve = obstacle < cont - tol
        keep = stop[interior] & (obstacle <= cont + tol)
        new_stop = np.zeros(model.size, dtype=bool)
        new_stop[interior] = improve | keep
        # a revisited stop set only comes from round-off in the evaluations
        if np.array_equal(new_stop, stop) or new_stop.tobytes() in seen:
            return value, iteration
        stop = new_stop
    raise ConvergenceError(
        f"Stopping policy iteration did not settle within {max_iterations} iterations")

def _bracketed_iteration(operator, lower, upper, gap_tolerance, max_sweeps):
    """Iterates a monotone operator from a sub- and a super-solution.

    Returns
    -------
    tuple
        (lower, upper, sweeps, gap trace, converged)
    """
    gaps = []
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        lower = operator(lower)
        upper = operator(upper)
        gap = float(np.max(upper - lower))
        gaps.append(gap)
        if gap <= gap_tolerance:
            converged = True
            break
    return lower, upper, sweeps, gaps, converged

def _lower_start(model, prob):
    """A sub-solution below the value: T L >= L."""
    domain = prob.domain
    interior = domain.interior_states
    floor = float(np.min(prob.obstacle[interior]))
    if domain.is_stopped:
        floor = min(floor, float(np.min(prob.exit_payoff[domain.exterior])))
    if prob.discount > 0:
        floor = min(floor, float(np.min(prob.running[interior])) / prob.discount)
        start = np.full(model.size, floor)
    else:
        floor = min(floor, 0.0)
        slope = min(float(np.min(prob.running[interior])), 0.0)
        start = floor + slope * exit_time_moments(model, domain).first
    start[domain.exterior] = prob.exit_payoff[domain.exterior]
    return start

def _solve_stopping(model, prob, method, tol, gap_tolerance, max_iterations):
    if method not in STOPPING_METHODS:
        raise ValueError(f"stopping method must be one of {list(STOPPING_METHODS)}, got ({method})")
    domain = prob.domain
    interior = domain.interior

    if method == 'policy':
        value, iterations = _policy_iteration(model, prob, tol, max_iterations)
        residual = _bellman_residual(model, prob, value)
        if prob.discount > 0:
            rate = model.uniformization_rate
            bound = residual * (prob.discount + rate) / prob.discount
        else:
            bound = residual * float(np.max(_expected_jumps_to_exit(model, domain)))
        lower = np.where(interior, value - bound, value)
        upper = np.where(interior, value + bound, value)
        return StoppingSolution(
            value, interior & (value >= prob.obstacle - tol), 2 * bound, iterations,
            lower, upper, details={'residual': residual})

    upper = np.where(interior, prob.obstacle, prob.exit_payoff)
    lower, upper, sweeps, gaps, converged = _bracketed_iteration(
        lambda values: _bellman(model, prob, values),
        _lower_start(model, prob), upper, gap_tolerance, max_iterations)
    value = 0.5 * (lower + upper)
    return StoppingSolution(
        value, interior & (value >= prob.obstacle - tol), gaps[-1] if gaps else 0.0, sweeps,
        lower, upper, gap_trace=gaps, converged=converged,
        details={'residual': _bellman_residual(model, prob, value)})

def solve_discounted_stopping(model, prob, method='policy', tol=STOP_TOLERANCE,
                              gap_tolerance=GAP_TOLERANCE, max_iterations=None):
    """Discounted stopping with exit payoff H.

    Parameters
    ----------
    model : MarkovModel
    prob : StoppingProblem
        With discount > 0.
    method : str, optional
        ``policy`` (Howard iteration on the stopping set, exact up to a linear solve) or
        ``value`` (bracketed value iteration from a sub-solution and from G).
    tol : float, optional
        Tie tolerance of the stop region.
    gap_tolerance : float, optional
        Target bracket gap of the value method.
    max_iterations : int, optional

    Returns
    -------
    StoppingSolution
        For the value method `converged` is False when the cap was hit; the current gap is
        reported.

    Raises
    ------
    ValueError
        If the discount is not > 0.
    ConvergenceError
        If policy iteration does not settle.
    """
    if not prob.discount > 0:
        raise ValueError(f"discounted stopping needs discount > 0, got {prob.discount}")
    if max_iterations is None:
        max_iterations = MAX_POLICY_ITERATIONS if method == 'policy' else MAX_SWEEPS
    return _solve_stopping(model, prob, method, tol, gap_tolerance, max_iterations)

def solve_undiscounted_stopping(model, prob, method='policy', tol=STOP_TOLERANCE,
                                gap_tolerance=GAP_TOLERANCE, max_iterations=None):
    """The alpha = 0 stopping problem on a domain with reachable exterior.

    Parameters are those of `solve_discounted_stopping`.

    Raises
    ------
    ValueError
        If the discount is not 0 or the domain has no exterior.
    AssumptionError
        If the exterior is unreachable from some interior state.
    """
    if prob.discount != 0:
        raise ValueError(f"undiscounted stopping needs discount 0, got {prob.discount}")
    require_reachable_exterior(model, prob.domain)
    if max_iterations is None:
        max_iterations = MAX_POLICY_ITERATIONS if method == 'policy' else MAX_SWEEPS
    return _solve_stopping(model, prob, method, tol, gap_tolerance, max_iterations)

def discount_error_bound(model, prob, alpha):
    """Bound on |w_alpha - w| for the undiscounted problem `prob`.

    alpha * (1/2 ||running|| max E[tau_O^2] + max E[tau_O] max(||G||, ||H||)) with the
    norms taken over the interior for running and G and over the exterior for H.
    """
    domain = prob.domain
    moments = exit_time_moments(model, domain)
    interior = domain.interior
    running = float(np.max(np.abs(prob.running[interior])))
    payoff = max(float(np.max(np.abs(prob.obstacle[interior]))),
                 float(np.max(np.abs(prob.exit_payoff[domain.exterior]))))
    return float(alpha) * (0.5 * running * moments.sup_second + moments.sup_first * payoff)

def solve_penalty(model, prob, beta, scheme='auto', tol=1e-12, max_iterations=1_000_000):
    """Solves the penalized equation (alpha - Q) w + beta (w - G)^+ = running on the interior.

    Parameters
    ----------
    model : MarkovModel
    prob : StoppingProblem
        With discount > 0.
    beta : float
        Penalty rate, >= 0. The value decreases in beta toward the stopping value.
    scheme : str, optional
        ``explicit`` pseudo-time relaxation with step model.delta, ``implicit`` active set
        Newton iteration, or ``auto`` (implicit when beta * delta > 0.5).
    tol : float, optional
        Stopping tolerance of the explicit relaxation.
    max_iterations : int, optional

    Returns
    -------
    numpy.ndarray
        The penalized value, H on the exterior.

    Raises
    ------
    SolverInputError
        If the explicit scheme would diverge.
    ConvergenceError
        If the iteration cap is hit.
    """
    beta = float(beta)
    if not (math.isfinite(beta) and beta >= 0):
        raise ValueError(f"beta must be >= 0, got {beta}")
    if not prob.discount > 0:
        raise ValueError(f"penalty solve needs discount > 0, got {prob.discount}")
    if scheme not in PENALTY_SCHEMES:
        raise ValueError(f"penalty scheme must be one of {list(PENALTY_SCHEMES)}, got ({scheme})")

    delta = model.delta
    explicit_stable = beta * delta <= 0.5 and delta * model.uniformization_rate <= 0.5
    if scheme == 'auto':
        scheme = 'explicit' if explicit_stable else 'implicit'
    if scheme == 'explicit':
        if not explicit_stable:
            raise SolverInputError(
                f"explicit penalty scheme diverges for beta*delta = {beta * delta} and "
                f"delta*max q = {delta * model.uniformization_rate} (both must be <= 0.5); "
                "use scheme='implicit'")
        return _penalty_explicit(model, prob, beta, tol, max_iterations)
    return _penalty_implicit(model, prob, beta, max_iterations)

def _penalty_explicit(model, prob, beta, tol, max_iterations):
    domain = prob.domain
    interior = domain.interior
    delta = model.delta
    generator = model.generator
    value = np.where(interior, 0.0, prob.exit_payoff)
    for _ in range(max_iterations):
        drift = generator @ value + prob.running - beta * np.maximum(value - prob.obstacle, 0.0) \
            - prob.discount * value
        step = np.where(interior, delta * drift, 0.0)
        value = value + step
        if float(np.max(np.abs(step))) < tol:
            return value
    raise ConvergenceError(
        f"Explicit penalty relaxation did not settle within {max_iterations} iterations")

def _penalty_implicit(model, prob, beta, max_iterations):
    domain = prob.domain
    interior = domain.interior_states
    rows = model.generator[interior]
    fixed = np.where(domain.interior, 0.0, prob.exit_payoff)
    base = prob.discount * sp.identity(interior.size, format='csr') - rows[:, interior]
    base_rhs = prob.running[interior] + rows @ fixed
    obstacle = prob.obstacle[interior]
    active = np.zeros(interior.size, dtype=bool)
    for _ in range(max_iterations):
        penalty = beta * active.astype(float)
        solution = solve_linear(base + sp.diags(penalty), base_rhs + penalty * obstacle)
        new_active = solution > obstacle
        if np.array_equal(new_active, active):
            value = fixed.copy()
            value[interior] = solution
            return value
        active = new_active
    raise ConvergenceError(
        f"Implicit penalty iteration did not settle within {max_iterations} iterations")

def solve_ergodic_stopping(model, f, payoff, lam, scheme='uniformized', tol=STOP_TOLERANCE,
                           gap_tolerance=GAP_TOLERANCE, max_sweeps=MAX_SWEEPS, poisson=None,
                           refine_tol=1e-6, max_refinements=8):
    """Ergodic stopping z(x) = inf_tau E_x[int_0^tau (f - lambda) ds + w(X_tau)].

    With g = -q + K + w + ||w|| >= 0 and a = mu(f) - lambda > 0 the problem becomes
    v = inf_tau E[a tau + g(X_tau)], computed from below (start 0) and from above (start g)
    by the monotone operator T r = min(g, a step + P r), and z = q + v - K - ||w||.

    Parameters
    ----------
    model : MarkovModel
        Irreducible.
    f : array_like
    payoff : array_like
        w.
    lam : float
        lambda < mu(f).
    scheme : str, optional
        ``uniformized`` uses P = I + Q / max q with step 1 / max q, which is exact for a
        chain that can only stop at jump epochs. ``sampled`` uses P = exp(Q step) with
        step = 0.1 / max q halved until successive values differ by less than refine_tol.
    tol : float, optional
        Tie tolerance of the stop region.
    gap_tolerance : float, optional
        Target bracket gap.
    max_sweeps : int, optional
    poisson : PoissonSolution, optional
        Reused when given.
    refine_tol : float, optional
    max_refinements : int, optional

    Returns
    -------
    StoppingSolution
        `lower` and `upper` are brackets of z, `details` holds v, g, the step and, for the
        sampled scheme, the achieved refinement change.

    Raises
    ------
    SolverInputError
        If lambda >= mu(f).
    """
    if scheme not in ERGODIC_SCHEMES:
        raise ValueError(f"ergodic scheme must be one of {list(ERGODIC_SCHEMES)}, got ({scheme})")
    f = as_state_vector(f, model.size, 'f')
    payoff = as_state_vector(payoff, model.size, 'payoff')
    if poisson is None:
        poisson = poisson_solve(model, f)
    lam = float(lam)
    rate_gap = poisson.mu_f - lam
    if not rate_gap > 0:
        raise SolverInputError(
            f"ergodic stopping needs lambda < mu(f); got lambda = {lam}, mu(f) = {poisson.mu_f}")

    shift = poisson.bound + float(np.max(np.abs(payoff)))
    obstacle = -poisson.q + shift + payoff
    rate = model.uniformization_rate
    details = {'g': obstacle, 'mu-f': poisson.mu_f}

    if rate <= 0:
        lower = upper = obstacle.copy()
        sweeps, gaps, converged = 0, [0.0], True
        details['step'] = 0.0
    elif scheme == 'uniformized':
        jump = sp.identity(model.size, format='csr') + model.generator / rate
        lower, upper, sweeps, gaps, converged = _ergodic_brackets(
            jump, rate_gap / rate, obstacle, gap_tolerance, max_sweeps)
        details['step'] = 1.0 / rate
    else:
        step = 0.1 / rate
        previous = None
        sweeps = 0
        for refinement in range(max_refinements + 1):
            kernel = transition_kernel(model, step)
            lower, upper, done, gaps, converged = _ergodic_brackets(
                kernel, rate_gap * step, obstacle, gap_tolerance, max_sweeps)
            sweeps += done
            current = 0.5 * (lower + upper)
            if previous is not None:
                change = float(np.max(np.abs(current - previous)))
                details['refinement-change'] = change
                if change < refine_tol:
                    break
            previous = current
            if refinement < max_refinements:
                step /= 2
        details['step'] = step

    value_v = 0.5 * (lower + upper)
    details['v'] = value_v
    offset = poisson.q - shift
    value = value_v + offset
    return StoppingSolution(
        value, value >= payoff - tol, gaps[-1], sweeps, lower + offset, upper + offset,
        gap_trace=gaps, converged=converged, details=details)

def _ergodic_brackets(jump, increment, obstacle, gap_tolerance, max_sweeps):
    if jump.shape[0] <= DENSE_SWEEP_LIMIT:
        jump = jump.toarray() if sp.issparse(jump) else np.asarray(jump)
    return _bracketed_iteration(
        lambda values: np.minimum(obstacle, increment + jump @ values),
        np.zeros(obstacle.size), obstacle.copy(), gap_tolerance, max_sweeps)

def expected_time_bound(poisson, payoff, lam):
    """(||w|| - q(x) + K) / (mu(f) - lambda), the bound on E_x[tau] for near-optimal rules."""
    payoff = np.asarray(payoff, dtype=float)
    rate_gap = poisson.mu_f - float(lam)
    if not rate_gap > 0:
        raise SolverInputError(
            f"time bound needs lambda < mu(f); got lambda = {lam}, mu(f) = {poisson.mu_f}")
    return (float(np.max(np.abs(payoff))) - poisson.q + poisson.bound) / rate_gap

def check_bellman_residual(model, f, payoff, lam, z, sigma_states):
    """Residual of the conditional Bellman form at a stopping rule sigma.

    Evaluates inf_tau E_x[int_0^{tau ^ sigma} (f - lambda) ds + 1{tau < sigma} w(X_tau)
    + 1{sigma <= tau} z(X_sigma)] with sigma the first hitting time of `sigma_states` and
    returns max |RHS - z|.

    Parameters
    ----------
    model : MarkovModel
    f, payoff, z : array_like
    lam : float
    sigma_states : array_like of int
        Nonempty proper subset of the states.

    Returns
    -------
    float
    """
    mask = np.zeros(model.size, dtype=bool)
    mask[np.asarray(sigma_states, dtype=int)] = True
    if not mask.any() or mask.all():
        raise ValueError("sigma_states must be a nonempty proper subset of the states")
    f = as_state_vector(f, model.size, 'f')
    z = as_state_vector(z, model.size, 'z')
    prob = StoppingProblem(f - float(lam), payoff, z, 0.0, Domain(~mask))
    solution = solve_undiscounted_stopping(model, prob)
    return float(np.max(np.abs(solution.value - z)))
