"""Simulation of the controlled chain and exact oracles.

The controlled process follows the chain until it enters the impulse region of a
`Strategy`, is moved at once to the target and pays the impulse cost. Trajectories are
exact event simulations: exponential holding times with rate q_x and jumps drawn from the
rows of the generator.

Two oracles do not depend on the QVI machinery: a renewal-reward search for a
deterministic drift with one impulse per cycle, and an exhaustive enumeration of the
stationary impulse policies of a small chain.
"""

import itertools
import math
from collections import namedtuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.sparse.csgraph import connected_components

from acic.exceptions import ACICException, SolverInputError
from acic.impulse import Strategy
from acic.model import as_state_vector, reaching_states

MIN_REPLICATIONS = 30
MAX_ORACLE_STATES = 12
MAX_ORACLE_TARGETS = 3
MAX_ORACLE_POLICIES = 500_000

TrajectoryEvent = namedtuple('TrajectoryEvent', ['time', 'state', 'kind', 'source', 'cost'])
Checkpoint = namedtuple(
    'Checkpoint', ['time', 'impulse_count', 'running_cost', 'impulse_cost'])


def make_generator(seed):
    """numpy Generator over a Philox counter-based bit generator."""
    return np.random.Generator(np.random.Philox(int(seed)))

class Trajectory:
    """One simulated path of the controlled chain.

    Parameters
    ----------
    events : list of TrajectoryEvent
    running_cost_integral : float
    impulse_cost_total : float
    impulse_times : list of float
    impulse_totals : list of float
        Total cost (running plus impulses) right after every impulse.
    checkpoints : list of Checkpoint
    end_time : float
    exit_time : float or None
    seed : int
    """

    def __init__(self, events, running_cost_integral, impulse_cost_total, impulse_times,
                 impulse_totals, checkpoints, end_time, exit_time, seed):
        self.__events = events
        self.__running_cost_integral = running_cost_integral
        self.__impulse_cost_total = impulse_cost_total
        self.__impulse_times = impulse_times
        self.__impulse_totals = impulse_totals
        self.__checkpoints = checkpoints
        self.__end_time = end_time
        self.__exit_time = exit_time
        self.__seed = seed

    @property
    def events(self):
        """Time ordered events, the first one is the start."""
        return list(self.__events)

    @property
    def running_cost_integral(self):
        """int f(Y_s) ds up to the end time."""
        return self.__running_cost_integral

    @property
    def impulse_cost_total(self):
        """Sum of the impulse costs."""
        return self.__impulse_cost_total

    @property
    def total_cost(self):
        """Running plus impulse costs."""
        return self.__running_cost_integral + self.__impulse_cost_total

    @property
    def impulse_count(self):
        """N(0, end time)."""
        return len(self.__impulse_times)

    @property
    def impulse_times(self):
        """Times of the impulses."""
        return list(self.__impulse_times)

    @property
    def impulse_totals(self):
        """Total cost right after each impulse."""
        return list(self.__impulse_totals)

    @property
    def checkpoints(self):
        """Accumulated counts and costs at the requested times."""
        return list(self.__checkpoints)

    @property
    def end_time(self):
        """Horizon, exit time or time of the last allowed impulse."""
        return self.__end_time

    @property
    def exit_time(self):
        """Exit time from the domain, None when the path did not exit."""
        return self.__exit_time

    @property
    def seed(self):
        """RNG seed."""
        return self.__seed

def trajectory_rows(model, trajectory):
    """CSV rows (time, state, kind, cost) of a trajectory."""
    return [(event.time, model.states[event.state], event.kind, event.cost)
            for event in trajectory.events]

def _jump_tables(model):
    off_diagonal = model.off_diagonal
    return off_diagonal.indptr, off_diagonal.indices, off_diagonal.data

def simulate_controlled(model, strategy, cost, horizon, seed, f=None, start=0, domain=None,
                        max_impulses=None, checkpoints=(), record_events=True):
    """Event simulation of the chain under a stationary impulse policy.

    Parameters
    ----------
    model : MarkovModel
    strategy : Strategy
    cost : ImpulseCost
    horizon : float
        > 0.
    seed : int
    f : array_like, optional
        Running cost, 0 by default.
    start : int, optional
        Start state index. An impulse at time 0 happens when it lies in the region.
    domain : Domain, optional
        Stop at the first exit from the domain.
    max_impulses : int, optional
        Stop right after this many impulses.
    checkpoints : sequence of float, optional
        Times at which the accumulated counts and costs are recorded.
    record_events : bool, optional

    Returns
    -------
    Trajectory

    Raises
    ------
    ACICException
        If a target lies in the impulse region.
    """
    horizon = float(horizon)
    if not horizon > 0:
        raise ValueError(f"horizon must be > 0, got {horizon}")
    region = strategy.impulse_region
    target = strategy.target
    if np.any(region[target[region]]):
        raise ACICException("strategy has an impulse target inside the impulse region")
    running = np.zeros(model.size) if f is None else as_state_vector(f, model.size, 'f')
    rates = model.exit_rates
    indptr, indices, data = _jump_tables(model)
    rng = make_generator(seed)
    pending = sorted(float(time) for time in checkpoints if 0 <= time <= horizon)

    events = []
    recorded = []
    impulse_times = []
    impulse_totals = []
    running_total = 0.0
    impulse_total = 0.0
    exit_time = None
    time = 0.0
    state = int(start)
    if record_events:
        events.append(TrajectoryEvent(0.0, state, 'start', None, 0.0))

    def impulse(at):
        nonlocal state, impulse_total
        destination = int(target[state])
        price = float(cost.cost_of([state], [destination])[0])
        impulse_total += price
        impulse_times.append(at)
        impulse_totals.append(running_total + impulse_total)
        if record_events:
            events.append(TrajectoryEvent(at, destination, 'impulse', state, price))
        state = destination

    def stop_now():
        return max_impulses is not None and len(impulse_times) >= max_impulses

    if domain is not None and not domain.interior[state]:
        exit_time = 0.0
    elif region[state]:
        impulse(0.0)

    while exit_time is None and not stop_now():
        rate = rates[state]
        next_time = time + rng.exponential(1.0 / rate) if rate > 0 else math.inf
        end = min(next_time, horizon)
        while pending and pending[0] <= end:
            checkpoint = pending.pop(0)
            recorded.append(Checkpoint(
                checkpoint, len(impulse_times),
                running_total + running[state] * (checkpoint - time), impulse_total))
        running_total += running[state] * (end - time)
        if next_time >= horizon:
            time = horizon
            break
        time = next_time

        row = slice(indptr[state], indptr[state + 1])
        position = np.searchsorted(
            np.cumsum(data[row]), rng.random() * rate, side='right')
        state = int(indices[row][min(position, indptr[state + 1] - indptr[state] - 1)])
        if record_events:
            events.append(TrajectoryEvent(time, state, 'jump', None, 0.0))

        if domain is not None and not domain.interior[state]:
            exit_time = time
        elif region[state]:
            impulse(time)

    return Trajectory(
        events, running_total, impulse_total, impulse_times, impulse_totals, recorded,
        time, exit_time, seed)

class FunctionalEstimate:
    """Monte Carlo estimate of one of the average-cost functionals.

    Parameters
    ----------
    kind : str
        ``Jhat``, ``J`` or ``J_stopped``.
    value : float or None
        None when the functional is undefined (no impulses for J).
    standard_error : float or None
    replications : int
    horizon : float
    impulse_index : int or None
        n of the ratio form of J.
    tail_value : float or None
        Estimate at half the horizon (or half the impulse count).
    undefined_replications : int, optional
    """

    def __init__(self, kind, value, standard_error, replications, horizon, impulse_index,
                 tail_value, undefined_replications=0):
        self.__kind = kind
        self.__value = value
        self.__standard_error = standard_error
        self.__replications = replications
        self.__horizon = horizon
        self.__impulse_index = impulse_index
        self.__tail_value = tail_value
        self.__undefined_replications = undefined_replications

    @property
    def kind(self):
        """Jhat, J or J_stopped."""
        return self.__kind

    @property
    def value(self):
        """Point estimate or None."""
        return self.__value

    @property
    def standard_error(self):
        """Standard error or None."""
        return self.__standard_error

    @property
    def replications(self):
        """Replications used."""
        return self.__replications

    @property
    def horizon(self):
        """Simulated horizon."""
        return self.__horizon

    @property
    def impulse_index(self):
        """n of the ratio form."""
        return self.__impulse_index

    @property
    def tail_value(self):
        """Tail stability diagnostic."""
        return self.__tail_value

    @property
    def undefined_replications(self):
        """Replications without enough impulses."""
        return self.__undefined_replications

    def to_dict(self):
        """Serializable form."""
        return {
            'kind': self.__kind,
            'value': self.__value,
            'standard-error': self.__standard_error,
            'replications': self.__replications,
            'horizon': self.__horizon,
            'impulse-index': self.__impulse_index,
            'tail-value': self.__tail_value,
            'undefined-replications': self.__undefined_replications
        }

def _mean_and_error(samples):
    samples = np.asarray(samples, dtype=float)
    return float(np.mean(samples)), float(np.std(samples, ddof=1) / math.sqrt(samples.size))

def _ratio_estimate(costs, times):
    """Ratio of means with its delta-method standard error."""
    costs = np.asarray(costs, dtype=float)
    times = np.asarray(times, dtype=float)
    ratio = float(np.mean(costs) / np.mean(times))
    spread = np.std(costs - ratio * times, ddof=1)
    return ratio, float(spread / (np.mean(times) * math.sqrt(costs.size)))

def estimate_functionals(model, strategy, cost, f, start=0, horizon=1e4, reps=100, seed=0,
                         domain=None, impulse_index=None):
    """Estimates Jhat, J and, with a domain, J_stopped.

    Replication r uses seed + r. Jhat is total cost over the horizon; J is the ratio of
    mean cost to mean time at the n-th impulse, n being `impulse_index` or the smallest
    positive impulse count over the replications; J_stopped kills the path at exit from
    the domain (or at the horizon) and takes the ratio of means.

    Returns
    -------
    dict
        Kind to FunctionalEstimate.

    Raises
    ------
    ValueError
        If fewer than 30 replications are asked for, or a domain is given that does not
        contain the start state.
    """
    reps = int(reps)
    if reps < MIN_REPLICATIONS:
        raise ValueError(f"need at least {MIN_REPLICATIONS} replications, got {reps}")
    if domain is not None and not domain.interior[int(start)]:
        raise ValueError(f"start state {start} is outside the domain of J_stopped")
    f = as_state_vector(f, model.size, 'f')
    horizon = float(horizon)

    paths = [simulate_controlled(
        model, strategy, cost, horizon, seed + replication, f=f, start=start,
        checkpoints=(horizon / 2,), record_events=False) for replication in range(reps)]

    value, error = _mean_and_error([path.total_cost / horizon for path in paths])
    halves = [path.checkpoints[0] for path in paths]
    tail = float(np.mean([(half.running_cost + half.impulse_cost) / (horizon / 2)
                          for half in halves]))
    estimates = {'Jhat': FunctionalEstimate('Jhat', value, error, reps, horizon, None, tail)}

    counts = [path.impulse_count for path in paths]
    positive = [count for count in counts if count > 0]
    index = impulse_index if impulse_index is not None else (min(positive) if positive else 0)
    usable = [path for path in paths if index > 0 and path.impulse_count >= index]
    if len(usable) >= 2:
        lam, error = _ratio_estimate(
            [path.impulse_totals[index - 1] for path in usable],
            [path.impulse_times[index - 1] for path in usable])
        half = max(index // 2, 1)
        tail, _ = _ratio_estimate(
            [path.impulse_totals[half - 1] for path in usable],
            [path.impulse_times[half - 1] for path in usable])
        estimates['J'] = FunctionalEstimate(
            'J', lam, error, len(usable), horizon, index, tail, reps - len(usable))
    else:
        estimates['J'] = FunctionalEstimate(
            'J', None, None, reps, horizon, index or None, None, reps - len(usable))

    if domain is not None:
        stopped = [simulate_controlled(
            model, strategy, cost, horizon, seed + replication, f=f, start=start,
            domain=domain, max_impulses=impulse_index, record_events=False)
                   for replication in range(reps)]
        lam, error = _ratio_estimate(
            [path.total_cost for path in stopped], [path.end_time for path in stopped])
        estimates['J_stopped'] = FunctionalEstimate(
            'J_stopped', lam, error, reps, horizon, impulse_index, None)
    return estimates

def _stationary(generator):
    """Stationary distribution of a small dense irreducible generator."""
    size = generator.shape[0]
    if size == 1:
        return np.ones(1)
    system = generator.T.copy()
    system[-1, :] = 1.0
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    weights = np.clip(np.linalg.solve(system, rhs), 0.0, None)
    return weights / weights.sum()

def evaluate_strategy_average(model, cost, f, strategy):
    """Exact long-run average of a stationary impulse policy.

    The controlled generator lives on the states outside the region; a jump into the
    region is redirected to its target and books rate times impulse cost. Every closed
    class gives its own average; the best class reachable from the targets is returned.

    Returns
    -------
    tuple
        (lambda, details) with details listing every closed class and its average.
    """
    f = as_state_vector(f, model.size, 'f')
    region = strategy.impulse_region
    target = strategy.target
    rates = model.off_diagonal.toarray()
    destination = np.where(region, target, np.arange(model.size))
    waiting = np.flatnonzero(~region)
    position = np.full(model.size, -1)
    position[waiting] = np.arange(waiting.size)

    controlled = np.zeros((waiting.size, waiting.size))
    impulse_rate_cost = np.zeros(waiting.size)
    prices = np.zeros(model.size)
    if region.any():
        prices[region] = cost.cost_of(np.flatnonzero(region), target[region])
    for row, state in enumerate(waiting):
        np.add.at(controlled[row], position[destination], rates[state])
        impulse_rate_cost[row] = rates[state] @ prices
    np.fill_diagonal(controlled, 0.0)
    np.fill_diagonal(controlled, -controlled.sum(axis=1))
    reward = f[waiting] + impulse_rate_cost

    count, labels = connected_components(
        controlled - np.diag(np.diag(controlled)) > 0, directed=True, connection='strong')
    classes = []
    for label in range(count):
        members = np.flatnonzero(labels == label)
        outside = np.setdiff1d(np.arange(waiting.size), members)
        if outside.size and np.any(controlled[np.ix_(members, outside)] > 0):
            continue
        weights = _stationary(controlled[np.ix_(members, members)])
        classes.append((members, float(weights @ reward[members])))

    starts = np.zeros(waiting.size, dtype=bool)
    starts[position[np.setdiff1d(cost.targets, np.flatnonzero(region))]] = True
    reachable = np.zeros(waiting.size, dtype=bool)
    graph = (controlled - np.diag(np.diag(controlled))) > 0
    for member in np.flatnonzero(starts):
        mask = np.zeros(waiting.size, dtype=bool)
        mask[member] = True
        reachable |= reaching_states(graph.T, mask)
    candidates = [(average, members) for members, average in classes
                  if reachable[members].any()]
    lam = min(average for average, _ in candidates)
    return lam, {
        'classes': [{'states': model.labels_of(waiting[members]), 'average': average}
                    for members, average in classes]
    }

def count_policies(states, targets):
    """Number of (impulse region, target map) pairs with targets outside the region."""
    total = 0
    others = states - targets
    for inside in range(targets + 1):
        choices = targets - inside
        if inside and not choices:
            continue
        total += math.comb(targets, inside) * choices ** inside * (1 + choices) ** others
    return total

def _policies(size, targets):
    for mask in range(1 << size):
        region = np.array([(mask >> state) & 1 for state in range(size)], dtype=bool)
        allowed = [target for target in targets if not region[target]]
        members = np.flatnonzero(region)
        if members.size and not allowed:
            continue
        for choice in itertools.product(allowed, repeat=members.size):
            target = np.full(size, -1)
            target[members] = choice
            yield Strategy(region, target)

def policy_enumeration_oracle(model, cost, f, max_states=MAX_ORACLE_STATES,
                              max_targets=MAX_ORACLE_TARGETS, max_policies=MAX_ORACLE_POLICIES):
    """Exact minimum of the long-run average over every stationary impulse policy.

    Returns
    -------
    tuple
        (lambda*, strategy*, number of policies evaluated). Ties keep the first policy in
        enumeration order.

    Raises
    ------
    SolverInputError
        If the enumeration budget is exceeded.
    """
    count = count_policies(model.size, cost.targets.size)
    if model.size > max_states or cost.targets.size > max_targets or count > max_policies:
        raise SolverInputError(
            f"policy enumeration budget exceeded: {count} policies on {model.size} states "
            f"with {cost.targets.size} targets (limits {max_states} states, "
            f"{max_targets} targets, {max_policies} policies)")
    best = None
    for strategy in _policies(model.size, cost.targets):
        lam, _ = evaluate_strategy_average(model, cost, f, strategy)
        if best is None or lam < best[0]:
            best = (lam, strategy)
    return best[0], best[1], count

class RenewalOracleResult:
    """Optimum of the renewal-reward search with the closed form claim beside it."""

    def __init__(self, lam, xi, threshold, grid_lam, claimed_lam, claimed_threshold):
        self.lam = lam
        self.xi = xi
        self.threshold = threshold
        self.grid_lam = grid_lam
        self.claimed_lam = claimed_lam
        self.claimed_threshold = claimed_threshold

    def to_dict(self):
        """Serializable form."""
        return {
            'lambda': self.lam,
            'xi': self.xi,
            'threshold': self.threshold,
            'grid-lambda': self.grid_lam,
            'claimed-lambda': self.claimed_lam,
            'claimed-threshold': self.claimed_threshold,
            'claimed-delta': self.claimed_lam - self.lam
        }

def _capped_quadratic_integral(base, cap, point):
    """Antiderivative F(point) of min(base + s^2, cap) from 0, for point >= 0."""
    if cap <= base:
        return cap * point
    knee = math.sqrt(cap - base)
    if point <= knee:
        return base * point + point ** 3 / 3
    return base * knee + knee ** 3 / 3 + cap * (point - knee)

def renewal_oracle(cost, base=0.0, cap=math.inf, targets=(0.0,), upper=10.0,
                   grid_points=20001, speed=1.0):
    """Best cycle of a deterministic drift with one impulse per cycle.

    The drift moves at `speed` from xi to b, pays int_xi^b f(s) ds / speed with
    f(s) = min(base + s^2, cap) and jumps back to xi at cost c. The average
    A(xi, b) = (int_xi^b f + c speed) / (b - xi) is minimized over xi in `targets` and
    b in (xi, upper] on a grid, then refined by a bounded scalar search.

    Returns
    -------
    RenewalOracleResult
        With the closed form base + c/3 + sqrt(c) + base/sqrt(c) at threshold sqrt(c)
        recorded for comparison.

    Raises
    ------
    SolverInputError
        If no target lies below `upper`.
    """
    cost = float(cost)
    if not cost > 0:
        raise ValueError(f"impulse cost must satisfy c(x,ξ) ≥ c > 0, got {cost}")
    feasible = [float(xi) for xi in targets if 0 <= float(xi) < upper]
    if not feasible:
        raise SolverInputError(f"no (xi, b) pair with 0 <= xi < b <= {upper}")

    def average(xi, threshold):
        integral = _capped_quadratic_integral(base, cap, threshold) - \
            _capped_quadratic_integral(base, cap, xi)
        return (integral + cost * speed) / (threshold - xi)

    best = None
    grid_best = None
    for xi in feasible:
        thresholds = xi + (upper - xi) * np.linspace(0.0, 1.0, grid_points)[1:]
        values = np.array([average(xi, threshold) for threshold in thresholds])
        index = int(np.argmin(values))
        if grid_best is None or values[index] < grid_best[0]:
            grid_best = (float(values[index]), xi, float(thresholds[index]))
        left = thresholds[max(index - 1, 0)]
        right = thresholds[min(index + 1, thresholds.size - 1)]
        candidate = (float(values[index]), xi, float(thresholds[index]))
        if right > left:
            refined = minimize_scalar(
                lambda threshold, xi=xi: average(xi, threshold),
                bounds=(left, right), method='bounded', options={'xatol': 1e-12})
            if refined.success and refined.fun < candidate[0]:
                candidate = (float(refined.fun), xi, float(refined.x))
        if best is None or candidate[0] < best[0]:
            best = candidate

    claimed = base + cost / 3 + math.sqrt(cost) + base / math.sqrt(cost)
    return RenewalOracleResult(
        best[0], best[1], best[2], grid_best[0], claimed, math.sqrt(cost))
