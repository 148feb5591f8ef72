"""Impulse control on a domain.

An impulse at state x moves the process to a target xi in U at cost c(x, xi). The
intervention operator is ``M v(x) = min_{xi in U} [c(x, xi) + v(xi)]`` and the stopped
problem at discount alpha solves the quasi-variational inequality

    w = min(M w, continuation value of w)  on the interior, 0 outside,

with integrand f - lambda. ``lambda_alpha`` picks lambda so that inf_U w = 0;
``lambda_undiscounted`` does the same at alpha = 0.

Stationary impulse policies are `Strategy` objects. Their values come from one sparse
linear solve: continuation rows ``(alpha + q_x) w(x) - sum_{y in O, y != x} q_xy w(y) = r(x)``
and impulse rows ``w(x) - w(xi(x)) = c(x, xi(x))``.
"""

import numpy as np
import scipy.sparse as sp

from acic.exceptions import ACICException, ConvergenceError
from acic.model import (as_state_vector, reaching_states, require_reachable_exterior,
                        solve_linear)
from acic.stopping import (STOP_TOLERANCE, StoppingProblem, continuation_value,
                           solve_discounted_stopping, solve_undiscounted_stopping)

IMPROVEMENT_TOLERANCE = 1e-12
BISECTION_TOLERANCE = 1e-10
NORMALIZATION_TOLERANCE = 1e-8
SWEEP_TOLERANCE = 1e-9
MAX_HOWARD_ITERATIONS = 1000
HOWARD_PASSES_PER_STATE = 2
RELATIVE_IMPROVEMENT_TOLERANCE = 1e-10
MAX_POLISH_ITERATIONS = 100
MAX_SWEEPS = 100_000
QVI_METHODS = ('policy', 'sweep')


class ImpulseCost:
    """Impulse cost c(x, xi) for every state x and every target xi in U.

    Parameters
    ----------
    targets : sequence of int
        State indices of U. Stored in ascending order so ties resolve to the lowest index.
    cost : array_like
        Matrix of shape (n, |U|), column j belongs to the j-th target as given.
    floor : float, optional
        c > 0 with c(x, xi) >= c; defaults to the smallest cost.
    tol : float, optional
        Slack allowed in the invariant checks.

    Raises
    ------
    ValueError
        If U is empty, a cost is below the floor or the floor is not positive, or the
        triangle inequality c(x, xi) <= c(x, xi') + c(xi', xi) fails.
    """

    def __init__(self, targets, cost, floor=None, tol=1e-12):
        targets = np.asarray(targets, dtype=int).ravel()
        if targets.size == 0:
            raise ValueError("target set U must not be empty")
        if np.unique(targets).size != targets.size:
            raise ValueError("targets must be distinct states")
        cost = np.array(cost, dtype=float)
        if cost.ndim != 2 or cost.shape[1] != targets.size:
            raise ValueError(
                f"impulse cost must have shape (states, {targets.size}), got {cost.shape}")
        if np.any(targets < 0) or np.any(targets >= cost.shape[0]):
            raise ValueError("targets must be state indices")
        if not np.all(np.isfinite(cost)):
            raise ValueError("impulse cost has non-finite entries")

        order = np.argsort(targets)
        targets = targets[order]
        cost = cost[:, order]

        smallest = float(np.min(cost))
        floor = smallest if floor is None else float(floor)
        if not floor > 0 or smallest < floor - tol:
            raise ValueError(
                f"impulse cost violates c(x,ξ) ≥ c > 0: smallest cost {smallest}, floor {floor}")

        on_targets = cost[targets, :]
        chained = np.min(cost[:, :, None] + on_targets[None, :, :], axis=1)
        broken = np.argwhere(cost > chained + tol)
        if broken.size:
            state, column = broken[0]
            raise ValueError(
                "impulse cost violates the triangle inequality c(x,ξ) ≤ c(x,ξ') + c(ξ',ξ) "
                f"at x = {state}, ξ = {targets[column]}")

        targets.setflags(write=False)
        cost.setflags(write=False)
        self.__targets = targets
        self.__cost = cost
        self.__floor = floor

    @classmethod
    def constant(cls, model, targets, value):
        """c(x, xi) = value."""
        targets = np.asarray(targets, dtype=int)
        return cls(targets, np.full((model.size, targets.size), float(value)))

    @classmethod
    def affine(cls, model, targets, fixed, proportional):
        """c(x, xi) = fixed + proportional |x - xi|, on coordinates when the model has them
        and on state indices otherwise."""
        targets = np.asarray(targets, dtype=int)
        if float(proportional) < 0:
            raise ValueError(f"proportional impulse cost must be >= 0, got {proportional}")
        positions = model.coordinates
        if positions is None:
            positions = np.arange(model.size, dtype=float)
        distance = np.abs(positions[:, None] - positions[None, targets])
        return cls(targets, float(fixed) + float(proportional) * distance)

    @classmethod
    def from_matrix(cls, targets, matrix, floor=None):
        """c given as a full matrix with one column per target."""
        return cls(targets, matrix, floor=floor)

    @property
    def targets(self):
        """Read only ascending state indices of U."""
        return self.__targets

    @property
    def cost(self):
        """Read only matrix c(x, xi), columns follow `targets`."""
        return self.__cost

    @property
    def floor(self):
        """c > 0."""
        return self.__floor

    @property
    def max_cost(self):
        """max c."""
        return float(np.max(self.__cost))

    @property
    def size(self):
        """Number of states."""
        return self.__cost.shape[0]

    def target_mask(self):
        """Boolean mask of U."""
        mask = np.zeros(self.size, dtype=bool)
        mask[self.__targets] = True
        return mask

    def cost_of(self, states, targets):
        """c(states[i], targets[i]) for matching arrays of state indices."""
        columns = np.searchsorted(self.__targets, targets)
        return self.__cost[np.asarray(states, dtype=int), columns]

def apply_M(values, cost):
    """Intervention operator.

    Parameters
    ----------
    values : array_like
        Finite on U.
    cost : ImpulseCost

    Returns
    -------
    tuple of numpy.ndarray
        (M v, argmin target state per state), ties broken by lowest state index.
    """
    values = np.asarray(values, dtype=float)
    on_targets = values[cost.targets]
    if not np.all(np.isfinite(on_targets)):
        raise ValueError("v must be finite on the targets")
    totals = cost.cost + on_targets[None, :]
    best = np.argmin(totals, axis=1)
    return totals[np.arange(cost.size), best], cost.targets[best]

class Strategy:
    """Stationary impulse policy.

    Parameters
    ----------
    impulse_region : array_like of bool
    target : array_like of int
        Target state for every state of the region, ignored elsewhere.

    Raises
    ------
    ACICException
        If a target lies in the impulse region.
    """

    def __init__(self, impulse_region, target):
        region = np.array(impulse_region, dtype=bool)
        target = np.where(region, np.asarray(target, dtype=int), -1)
        inside = region & (target >= 0)
        if np.any(region & (target < 0)) or np.any(region[target[inside]]):
            raise ACICException("strategy has an impulse target inside the impulse region")
        region.setflags(write=False)
        target.setflags(write=False)
        self.__region = region
        self.__target = target

    @classmethod
    def empty(cls, size):
        """Never intervene."""
        return cls(np.zeros(size, dtype=bool), np.full(size, -1))

    @property
    def impulse_region(self):
        """Read only mask."""
        return self.__region

    @property
    def target(self):
        """Read only targets, -1 outside the region."""
        return self.__target

    @property
    def is_empty(self):
        """True when the region is empty."""
        return not bool(self.__region.any())

    @property
    def size(self):
        """Number of states."""
        return self.__region.size

    def uses_targets(self, cost):
        """True when every target is in U."""
        used = self.__target[self.__region]
        return bool(np.all(np.isin(used, cost.targets)))

    def to_dict(self, states):
        """Serializable form keyed by state labels."""
        region = np.flatnonzero(self.__region)
        return {
            'impulse-region': [states[index] for index in region],
            'targets': {str(states[index]): states[self.__target[index]] for index in region}
        }

    def __eq__(self, other):
        return isinstance(other, Strategy) and \
            np.array_equal(self.__region, other.impulse_region) and \
            np.array_equal(self.__target, other.target)

    def __hash__(self):
        return hash((self.__region.tobytes(), self.__target.tobytes()))

    def __repr__(self):
        return f"Strategy(region={int(self.__region.sum())}/{self.__region.size})"

class QviSolution:
    """Solution of a stopped or full-space quasi-variational inequality.

    Parameters
    ----------
    lam : float
        lambda.
    value : numpy.ndarray
        w with inf_U w = 0.
    m_value : numpy.ndarray
        M w.
    argmin : numpy.ndarray
        Best target per state.
    strategy : Strategy
    residual : float
        max over the interior of |min(cont - w, M w - w)|.
    alpha : float
    domain : Domain
    iterations : int, optional
    details : dict, optional
    """

    def __init__(self, lam, value, m_value, argmin, strategy, residual, alpha, domain,
                 iterations=0, details=None):
        self.__lam = float(lam)
        self.__value = value
        self.__m_value = m_value
        self.__argmin = argmin
        self.__strategy = strategy
        self.__residual = float(residual)
        self.__alpha = float(alpha)
        self.__domain = domain
        self.__iterations = int(iterations)
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
    def argmin(self):
        """Best target per state."""
        return self.__argmin

    @property
    def strategy(self):
        """Policy the solver settled on."""
        return self.__strategy

    @property
    def residual(self):
        """QVI residual."""
        return self.__residual

    @property
    def alpha(self):
        """Discount, 0 for the undiscounted problems."""
        return self.__alpha

    @property
    def domain(self):
        """Domain solved on."""
        return self.__domain

    @property
    def iterations(self):
        """Bisection steps plus policy iterations."""
        return self.__iterations

    @property
    def details(self):
        """Solver specific extras."""
        return dict(self.__details)

    def with_details(self, **details):
        """Copy with extra details merged in."""
        merged = dict(self.__details)
        merged.update(details)
        return QviSolution(
            self.__lam, self.__value, self.__m_value, self.__argmin, self.__strategy,
            self.__residual, self.__alpha, self.__domain, self.__iterations, merged)

def _policy_system(model, domain, cost, running, alpha, strategy):
    """Sparse system of a stationary policy on the interior, exterior value 0."""
    interior = domain.interior_states
    position = np.full(model.size, -1)
    position[interior] = np.arange(interior.size)
    region = strategy.impulse_region[interior]

    base = (alpha * sp.identity(model.size, format='csr') - model.generator)[interior][:, interior]
    base = base.tocoo()
    keep = ~region[base.row]
    rows = [base.row[keep]]
    cols = [base.col[keep]]
    data = [base.data[keep]]

    impulse_rows = np.flatnonzero(region)
    target_states = strategy.target[interior[impulse_rows]]
    target_positions = position[target_states]
    inside = target_positions >= 0
    rows += [impulse_rows, impulse_rows[inside]]
    cols += [impulse_rows, target_positions[inside]]
    data += [np.ones(impulse_rows.size), -np.ones(int(inside.sum()))]

    rhs = running[interior].copy()
    rhs[impulse_rows] = cost.cost_of(interior[impulse_rows], target_states)
    matrix = sp.csr_matrix(
        (np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
        shape=(interior.size, interior.size))
    return matrix, rhs, region

def evaluate_policy(model, domain, cost, running, alpha, strategy):
    """Value of a stationary impulse policy killed at exit from the domain.

    Parameters
    ----------
    model : MarkovModel
    domain : Domain
    cost : ImpulseCost
    running : array_like
        Integrand, for example f - lambda.
    alpha : float
        Discount >= 0; with alpha = 0 the policy must reach the exterior.
    strategy : Strategy

    Returns
    -------
    numpy.ndarray
        Policy value, 0 on the exterior.

    Raises
    ------
    ACICException
        If the system is singular (alpha = 0 and a policy that never exits).
    """
    running = as_state_vector(running, model.size, 'running')
    matrix, rhs, _ = _policy_system(model, domain, cost, running, alpha, strategy)
    value = np.zeros(model.size)
    value[domain.interior_states] = solve_linear(matrix, rhs)
    return value

def evaluate_normalized(model, domain, cost, f, alpha, strategy, reference):
    """Joint solve of (lambda, w) for a policy with w(reference) = 0.

    Exit from the domain is a free reset to the best target, which is the normalized form
    of the stopped problem; on a domain without exterior it is the average-cost
    evaluation of the policy.

    Parameters
    ----------
    model, domain, cost : as in `evaluate_policy`
    f : array_like
        Running cost before the lambda shift.
    alpha : float
    strategy : Strategy
    reference : int
        Interior state with w(reference) = 0, normally a target.

    Returns
    -------
    tuple
        (lambda, w), w being 0 on the exterior.

    Raises
    ------
    ACICException
        If the joint system is singular (for example a policy with several recurrent classes).
    """
    f = as_state_vector(f, model.size, 'f')
    interior = domain.interior_states
    position = np.full(model.size, -1)
    position[interior] = np.arange(interior.size)
    if position[reference] < 0:
        raise ValueError(f"reference state {reference} is not in the domain")

    matrix, rhs, region = _policy_system(model, domain, cost, f, alpha, strategy)
    size = interior.size
    waiting = np.flatnonzero(~region)
    lam_column = sp.csr_matrix(
        (np.ones(waiting.size), (waiting, np.zeros(waiting.size, dtype=int))), shape=(size, 1))
    pin = sp.csr_matrix(([1.0], ([0], [position[reference]])), shape=(1, size + 1))
    system = sp.vstack([sp.hstack([matrix, lam_column]), pin], format='csc')
    solution = solve_linear(system, np.append(rhs, 0.0))

    value = np.zeros(model.size)
    value[interior] = solution[:-1]
    return float(solution[-1]), value

def _resolve_targets(region, target):
    """Replaces targets inside the region by their own target, once."""
    target = np.where(region, target, -1)
    inside = region & (target >= 0)
    landing = np.zeros(region.size, dtype=bool)
    landing[inside] = region[target[inside]]
    if landing.any():
        hops = target[landing]
        target = target.copy()
        target[landing] = np.where(region[hops], target[hops], hops)
        if np.any(region[target[landing]]):
            raise ACICException(
                "impulse target stays inside the impulse region after one chained application")
    return target

def improve_policy(model, domain, cost, running, alpha, value, strategy,
                   tol=IMPROVEMENT_TOLERANCE):
    """Howard improvement step.

    Impulse where M w < continuation - tol, keep the current action within tol. Targets
    are the argmin of M w unless the current target is within tol of it.

    Returns
    -------
    Strategy
    """
    interior = domain.interior_states
    m_value, argmin = apply_M(value, cost)
    cont = continuation_value(model, running, alpha, value, interior)
    current = strategy.impulse_region[interior]
    better = m_value[interior] < cont - tol
    keep = current & (m_value[interior] <= cont + tol)

    region = np.zeros(model.size, dtype=bool)
    region[interior] = better | keep

    target = argmin.copy()
    held = region & strategy.impulse_region
    if held.any():
        states = np.flatnonzero(held)
        old = strategy.target[states]
        old_total = cost.cost_of(states, old) + value[old]
        target[states] = np.where(old_total <= m_value[states] + tol, old, argmin[states])

    for _ in range(cost.targets.size):
        landing = region & region[target]
        if not landing.any():
            break
        target = np.where(landing, target[target], target)
    if np.any(region & region[target]):
        # a cycle through U: targets inside the region keep waiting instead
        region[cost.targets] = False
    return Strategy(region, np.where(region, target, -1))

def qvi_residual(model, domain, cost, running, alpha, value):
    """max over the interior of |min(cont - w, M w - w)|."""
    interior = domain.interior_states
    m_value, _ = apply_M(value, cost)
    cont = continuation_value(model, running, alpha, value, interior)
    gap = np.minimum(cont - value[interior], m_value[interior] - value[interior])
    return float(np.max(np.abs(gap)))

def howard_iteration_cap(domain, max_iterations=None):
    """Iteration cap of Howard iteration on `domain`, growing with its interior."""
    if max_iterations is not None:
        return int(max_iterations)
    return max(MAX_HOWARD_ITERATIONS, HOWARD_PASSES_PER_STATE * int(domain.interior.sum()))

def improvement_tolerance(value):
    """Improvement threshold above the round-off of a policy evaluation of size |value|."""
    return max(IMPROVEMENT_TOLERANCE,
               RELATIVE_IMPROVEMENT_TOLERANCE * float(np.max(np.abs(value), initial=1.0)))

def _howard(model, domain, cost, running, alpha, strategy, max_iterations=None):
    """Howard iteration from `strategy`.

    Stops when improvement changes nothing or leads back to a policy already evaluated,
    which only round-off in the evaluations can cause.

    Raises
    ------
    ConvergenceError
        If the cap of `howard_iteration_cap` is hit.
    """
    cap = howard_iteration_cap(domain, max_iterations)
    seen = set()
    for iteration in range(1, cap + 1):
        value = evaluate_policy(model, domain, cost, running, alpha, strategy)
        seen.add(hash(strategy))
        improved = improve_policy(
            model, domain, cost, running, alpha, value, strategy, improvement_tolerance(value))
        if improved == strategy or hash(improved) in seen:
            return value, strategy, iteration
        strategy = improved
    raise ConvergenceError(f"Howard iteration did not settle within {cap} iterations")

def _sweep_from(model, domain, cost, running, alpha, strategy, max_sweeps=MAX_SWEEPS):
    """F iteration started from the value of `strategy`, which lies above the fixed point.

    Returns the fixed point, the improved policy read off it and the number of sweeps.
    """
    value = evaluate_policy(model, domain, cost, running, alpha, strategy)
    for sweep in range(1, max_sweeps + 1):
        updated = qvi_sweep(model, domain, cost, running, alpha, value)
        change = float(np.max(np.abs(updated - value)))
        value = updated
        if change < SWEEP_TOLERANCE * max(1.0, float(np.max(np.abs(value)))):
            improved = improve_policy(
                model, domain, cost, running, alpha, value, strategy,
                improvement_tolerance(value))
            return value, improved, sweep
    raise ConvergenceError(f"QVI sweeps did not settle within {max_sweeps} iterations")

def _settle(model, domain, cost, running, alpha, strategy):
    """Howard iteration, falling back to F iteration when Howard hits its cap."""
    try:
        return _howard(model, domain, cost, running, alpha, strategy)
    except ConvergenceError:
        return _sweep_from(model, domain, cost, running, alpha, strategy)

def qvi_sweep(model, domain, cost, running, alpha, values, method='policy'):
    """One application of F: the stopping value with obstacle M v, exit payoff 0.

    Parameters
    ----------
    model : MarkovModel
    domain : Domain
    cost : ImpulseCost
    running : array_like
        f - lambda.
    alpha : float
        Discount >= 0.
    values : array_like
        v, finite on U.
    method : str, optional
        Stopping method.

    Returns
    -------
    numpy.ndarray
        F v.
    """
    m_value, _ = apply_M(values, cost)
    prob = StoppingProblem(running, m_value, np.zeros(model.size), alpha, domain)
    if alpha > 0:
        return solve_discounted_stopping(model, prob, method=method).value
    return solve_undiscounted_stopping(model, prob, method=method).value

def solve_discounted_qvi(model, domain, cost, f, lam, alpha, method='policy',
                         tol=SWEEP_TOLERANCE, max_iterations=None, history=None):
    """Fixed point of F at discount alpha for the integrand f - lambda.

    Parameters
    ----------
    model, domain, cost : see `qvi_sweep`
    f : array_like
    lam : float
    alpha : float
        > 0.
    method : str, optional
        ``sweep`` iterates F from the no-impulse value until the sup-norm change is below
        tol; ``policy`` reaches the same fixed point by Howard iteration.
    tol : float, optional
    max_iterations : int, optional
    history : list, optional
        Receives every iterate of the sweep method, starting with the no-impulse value.

    Returns
    -------
    tuple
        (w, iterations)

    Raises
    ------
    ConvergenceError
        If the iteration cap is hit.
    """
    if not alpha > 0:
        raise ValueError(f"discounted QVI needs alpha > 0, got {alpha}")
    if method not in QVI_METHODS:
        raise ValueError(f"QVI method must be one of {list(QVI_METHODS)}, got ({method})")
    running = as_state_vector(f, model.size, 'f') - float(lam)
    empty = Strategy.empty(model.size)

    if method == 'policy':
        value, _, iterations = _howard(
            model, domain, cost, running, alpha, empty, max_iterations)
        return value, iterations

    value = evaluate_policy(model, domain, cost, running, alpha, empty)
    if history is not None:
        history.append(value.copy())
    for iteration in range(1, (max_iterations or MAX_SWEEPS) + 1):
        updated = qvi_sweep(model, domain, cost, running, alpha, value)
        change = float(np.max(np.abs(updated - value)))
        value = updated
        if history is not None:
            history.append(value.copy())
        if change < tol:
            return value, iteration
    raise ConvergenceError(f"QVI sweeps did not settle within {max_iterations} iterations")

def _solution(model, domain, cost, f, lam, alpha, value, strategy, iterations, details):
    m_value, argmin = apply_M(value, cost)
    residual = qvi_residual(model, domain, cost, f - lam, alpha, value)
    return QviSolution(
        lam, value, m_value, argmin, strategy, residual, alpha, domain, iterations, details)

def _interior_targets(domain, cost):
    inside = cost.targets[domain.interior[cost.targets]]
    if inside.size == 0:
        raise ValueError("no target state lies inside the domain")
    return inside

def _normalized_howard(model, domain, cost, f, alpha, strategy, max_iterations):
    """Howard iteration on the joint (lambda, w) evaluation, pinning w at the lowest target."""
    targets = _interior_targets(domain, cost)
    reference = int(targets[0])
    seen = set()
    for iteration in range(1, max_iterations + 1):
        lam, value = evaluate_normalized(model, domain, cost, f, alpha, strategy, reference)
        lowest = int(targets[np.argmin(value[targets])])
        if value[lowest] < -NORMALIZATION_TOLERANCE:
            reference = lowest
            continue
        seen.add(hash(strategy))
        improved = improve_policy(
            model, domain, cost, f - lam, alpha, value, strategy, improvement_tolerance(value))
        if improved == strategy or hash(improved) in seen:
            return lam, value, strategy, iteration
        strategy = improved
    raise ConvergenceError(
        f"Normalized Howard iteration did not settle within {max_iterations} iterations")

def _bisect(sign, lower, upper, tolerance):
    """Bisection on the decreasing map lambda -> inf_U w; returns the final bracket, the
    policy seen last at the upper end and the number of steps."""
    steps = 0
    strategy = None
    while upper - lower > tolerance:
        middle = 0.5 * (lower + upper)
        minimum, middle_strategy = sign(middle)
        if minimum > 0:
            lower = middle
        else:
            upper = middle
            strategy = middle_strategy
        steps += 1
    return lower, upper, strategy, steps

def _root(model, domain, cost, f, alpha, sign, tol, current):
    bound = float(np.max(np.abs(f)))
    lower, upper = -bound, bound
    low_minimum, _ = sign(lower)
    high_minimum, high_strategy = sign(upper)
    if low_minimum < -NORMALIZATION_TOLERANCE or high_minimum > NORMALIZATION_TOLERANCE:
        raise ACICException(
            f"lambda bisection bracket [{lower}, {upper}] does not bracket a sign change "
            f"(inf_U w = {low_minimum} and {high_minimum})")

    lower, upper, strategy, steps = _bisect(sign, lower, upper, tol)
    for candidate in (strategy or high_strategy, current['strategy']):
        try:
            lam, value, polished, iterations = _normalized_howard(
                model, domain, cost, f, alpha, candidate, MAX_POLISH_ITERATIONS)
        except ACICException:
            continue
        if lower - NORMALIZATION_TOLERANCE <= lam <= upper + NORMALIZATION_TOLERANCE:
            return _solution(
                model, domain, cost, f, lam, alpha, value, polished, steps + iterations,
                {'bracket': [lower, upper], 'polished': True})

    # bracket midpoint with the last policy of the upper side of the sign test
    lam = 0.5 * (lower + upper)
    strategy = current['strategy']
    value = evaluate_policy(model, domain, cost, f - lam, alpha, strategy)
    targets = _interior_targets(domain, cost)
    value = np.where(domain.interior, value - float(np.min(value[targets])), 0.0)
    return _solution(
        model, domain, cost, f, lam, alpha, value, strategy, steps,
        {'bracket': [lower, upper], 'polished': False})

def lambda_alpha(model, domain, cost, f, alpha, tol=BISECTION_TOLERANCE):
    """lambda_alpha with inf_U w(.; lambda_alpha) = 0 on a domain at discount alpha.

    Bisection on [-||f||, ||f||] using the decreasing map lambda -> inf_U w(.; lambda), then
    a normalized Howard polish of the final policy.

    Parameters
    ----------
    model : MarkovModel
    domain : Domain
    cost : ImpulseCost
    f : array_like
    alpha : float
        > 0.
    tol : float, optional
        Bisection tolerance on lambda.

    Returns
    -------
    QviSolution
        Normalized so inf_U w = 0.

    Raises
    ------
    ACICException
        If the bisection bracket does not bracket a sign change.
    """
    if not alpha > 0:
        raise ValueError(f"lambda_alpha needs alpha > 0, got {alpha}")
    f = as_state_vector(f, model.size, 'f')
    targets = _interior_targets(domain, cost)
    current = {'strategy': Strategy.empty(model.size)}

    def sign(lam):
        value, strategy, _ = _settle(model, domain, cost, f - lam, alpha, current['strategy'])
        current['strategy'] = strategy
        return float(np.min(value[targets])), strategy

    return _root(model, domain, cost, f, alpha, sign, tol, current)

def _is_proper(model, domain, strategy):
    """True when every continuation state of the domain reaches the exterior."""
    region = strategy.impulse_region
    destination = np.where(region, strategy.target, np.arange(model.size))
    redirect = sp.csr_matrix(
        (np.ones(model.size), (np.arange(model.size), destination)),
        shape=(model.size, model.size))
    controlled = model.adjacency().astype(float) @ redirect
    reaching = reaching_states(controlled, domain.exterior)
    waiting = domain.interior & ~region
    return bool(np.all(reaching[waiting]))

def lambda_undiscounted(model, domain, cost, f, tol=BISECTION_TOLERANCE):
    """lambda_(m) with inf_U w = 0 for the alpha = 0 problem on a stopped domain.

    The sign of inf_U w(.; lambda) comes from Howard iteration on the stochastic shortest
    path problem: an improved policy that never reaches the exterior means lambda is at
    or above lambda_(m), where inf_U w is -inf. The bracket is then polished by
    normalized Howard iteration.

    Returns
    -------
    QviSolution

    Raises
    ------
    AssumptionError
        If the exterior is unreachable from some interior state.
    """
    require_reachable_exterior(model, domain)
    f = as_state_vector(f, model.size, 'f')
    targets = _interior_targets(domain, cost)
    current = {'strategy': Strategy.empty(model.size)}

    def sign(lam):
        running = f - lam
        strategy = current['strategy']
        cap = howard_iteration_cap(domain)
        seen = set()
        for _ in range(cap):
            value = evaluate_policy(model, domain, cost, running, 0.0, strategy)
            seen.add(hash(strategy))
            improved = improve_policy(
                model, domain, cost, running, 0.0, value, strategy, improvement_tolerance(value))
            if improved == strategy or hash(improved) in seen:
                current['strategy'] = strategy
                return float(np.min(value[targets])), strategy
            if not _is_proper(model, domain, improved):
                current['strategy'] = strategy
                return -np.inf, improved
            strategy = improved
        raise ConvergenceError(f"Howard iteration did not settle within {cap} iterations")

    return _root(model, domain, cost, f, 0.0, sign, tol, current)

def solve_normalized_qvi(model, domain, cost, f, alpha=0.0, strategy=None,
                         max_iterations=MAX_POLISH_ITERATIONS):
    """Normalized Howard iteration for (lambda, w) from a starting policy.

    On a domain without exterior and alpha = 0 this solves the average-cost QVI of the
    finite chain.

    Returns
    -------
    QviSolution

    Raises
    ------
    ConvergenceError
        If the iteration does not settle or a policy system is singular.
    """
    f = as_state_vector(f, model.size, 'f')
    if strategy is None:
        strategy = Strategy.empty(model.size)
    try:
        lam, value, strategy, iterations = _normalized_howard(
            model, domain, cost, f, alpha, strategy, max_iterations)
    except ConvergenceError:
        raise
    except ACICException as error:
        raise ConvergenceError(f"Normalized policy evaluation failed: {error}") from error
    return _solution(model, domain, cost, f, lam, alpha, value, strategy, iterations, {})

def extract_strategy(solution, cost, tol=STOP_TOLERANCE):
    """Impulse where w >= M w - tol, towards the argmin target.

    Parameters
    ----------
    solution : QviSolution
    cost : ImpulseCost
    tol : float, optional

    Returns
    -------
    Strategy

    Raises
    ------
    ACICException
        If a target stays inside the region after one chained application.
    """
    interior = solution.domain.interior
    region = interior & (solution.value >= solution.m_value - tol)
    target = _resolve_targets(region, solution.argmin)
    if np.any(region & ~np.isin(target, cost.targets)):
        raise ACICException("extracted strategy has a target outside U")
    return Strategy(region, target)
