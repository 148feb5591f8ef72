"""Finite-state continuous-time Markov chains.

A `MarkovModel` holds a sparse generator Q together with optional real coordinates of its
states (grid positions for discretized drift models) and a time step used by the explicit
schemes. The functions in this module compute kernels, the invariant measure, solutions of
the Poisson equation and moments of exit times from a `Domain`.
"""

import math

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import breadth_first_order, connected_components, shortest_path
from scipy.stats import poisson

from acic.exceptions import ACICException, AssumptionError
from acic.utils.dict import unknown_keys
from acic.utils.report import write_csv

ROW_SUM_TOLERANCE = 1e-12
POISSON_TAIL = 1e-12

MODEL_KINDS = ('generator', 'drift', 'birth-death')
BOUNDARY_KINDS = ('reflecting', 'absorbing')


def as_state_vector(values, size, name):
    """Validates a real vector indexed by states.

    Parameters
    ----------
    values : array_like or float
        A scalar is broadcast to every state.
    size : int
        Number of states.
    name : str
        Name used in error messages.

    Returns
    -------
    numpy.ndarray
        A new float array of length `size`.

    Raises
    ------
    ValueError
        If the shape is wrong or an entry is not finite.
    """
    vector = np.array(values, dtype=float)
    if vector.ndim == 0:
        vector = np.full(size, float(vector))
    if vector.shape != (size,):
        raise ValueError(f"{name} must have one entry per state ({size}), got shape {vector.shape}")
    if not np.all(np.isfinite(vector)):
        raise ValueError(f"{name} has non-finite entries")
    return vector

def solve_linear(matrix, rhs):
    """Solves a sparse square linear system with an LU factorization.

    Parameters
    ----------
    matrix : scipy.sparse matrix
    rhs : numpy.ndarray

    Returns
    -------
    numpy.ndarray

    Raises
    ------
    ACICException
        If the matrix is singular or the solution is not finite.
    """
    rhs = np.asarray(rhs, dtype=float)
    if matrix.shape[0] == 0:
        return np.zeros(0)
    try:
        solution = spla.splu(sp.csc_matrix(matrix)).solve(rhs)
    except RuntimeError as error:
        raise ACICException(f"Singular linear system of size {matrix.shape[0]}: {error}") from error
    if not np.all(np.isfinite(solution)):
        raise ACICException(f"Linear system of size {matrix.shape[0]} has a non-finite solution")
    return solution

class MarkovModel:
    """Finite-state continuous-time Markov chain.

    Parameters
    ----------
    generator : array_like or scipy.sparse matrix
        Square rate matrix Q. Off-diagonal entries must be >= 0 and rows must sum to 0.
    delta : float
        Time step of the explicit schemes, > 0.
    states : sequence, optional
        State labels, defaults to 0..n-1.
    coordinates : array_like, optional
        Real position of every state.

    Raises
    ------
    ValueError
        If any of the invariants of a generator is violated.
    """

    def __init__(self, generator, delta, states=None, coordinates=None):
        if sp.issparse(generator):
            matrix = sp.csr_matrix(generator, dtype=float)
        else:
            array = np.asarray(generator, dtype=float)
            if array.ndim != 2:
                raise ValueError(f"generator must be a square matrix, got shape {array.shape}")
            matrix = sp.csr_matrix(array)
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"generator must be a square matrix, got shape {matrix.shape}")
        size = matrix.shape[0]
        if size == 0:
            raise ValueError("generator must have at least one state")
        if not np.all(np.isfinite(matrix.data)):
            raise ValueError("generator has non-finite entries")

        rows, cols, rates = sp.find(matrix)
        negative = (rows != cols) & (rates < 0)
        if negative.any():
            first = np.flatnonzero(negative)[0]
            raise ValueError(
                f"generator has negative off-diagonal rate {rates[first]} "
                f"at ({rows[first]}, {cols[first]})")

        scale = max(1.0, float(np.max(np.abs(rates)))) if rates.size else 1.0
        row_sums = np.asarray(matrix.sum(axis=1)).ravel()
        bad = np.flatnonzero(np.abs(row_sums) > ROW_SUM_TOLERANCE * scale)
        if bad.size:
            raise ValueError(f"generator row {bad[0]} sums to {row_sums[bad[0]]}, expected 0")

        delta = float(delta)
        if not (math.isfinite(delta) and delta > 0):
            raise ValueError(f"delta must be > 0, got {delta}")

        if states is None:
            states = tuple(range(size))
        states = tuple(states)
        if len(states) != size:
            raise ValueError(f"states must have {size} labels, got {len(states)}")
        if len(set(states)) != size:
            raise ValueError("state labels must be distinct")

        if coordinates is not None:
            coordinates = as_state_vector(coordinates, size, 'coordinates')
            coordinates.setflags(write=False)

        matrix.eliminate_zeros()
        matrix.sort_indices()
        exit_rates = -matrix.diagonal()
        exit_rates.setflags(write=False)

        off_diagonal = matrix - sp.diags(matrix.diagonal())
        off_diagonal = sp.csr_matrix(off_diagonal)
        off_diagonal.eliminate_zeros()

        self.__generator = matrix
        self.__off_diagonal = off_diagonal
        self.__exit_rates = exit_rates
        self.__delta = delta
        self.__states = states
        self.__index = {label: index for index, label in enumerate(states)}
        self.__coordinates = coordinates

    @property
    def generator(self):
        """
        Returns
        -------
        scipy.sparse.csr_matrix
            Copy of the generator Q.
        """
        return self.__generator.copy()

    @property
    def off_diagonal(self):
        """
        Returns
        -------
        scipy.sparse.csr_matrix
            Copy of Q with its diagonal removed (the jump rates q_xy, x != y).
        """
        return self.__off_diagonal.copy()

    @property
    def exit_rates(self):
        """
        Returns
        -------
        numpy.ndarray
            Read only vector of total jump rates q_x = -Q_xx.
        """
        return self.__exit_rates

    @property
    def uniformization_rate(self):
        """
        Returns
        -------
        float
            max_x q_x.
        """
        return float(np.max(self.__exit_rates))

    @property
    def size(self):
        """
        Returns
        -------
        int
            Number of states.
        """
        return len(self.__states)

    @property
    def delta(self):
        """
        Returns
        -------
        float
            Time step of the explicit schemes.
        """
        return self.__delta

    @property
    def states(self):
        """
        Returns
        -------
        tuple
            State labels.
        """
        return self.__states

    @property
    def coordinates(self):
        """
        Returns
        -------
        numpy.ndarray or None
            Read only coordinates of the states.
        """
        return self.__coordinates

    def index_of(self, label):
        """Index of a state label.

        Raises
        ------
        ValueError
            If there is no such state.
        """
        try:
            return self.__index[label]
        except (KeyError, TypeError):
            raise ValueError(f"unknown state label ({label})") from None

    def dense_generator(self):
        """
        Returns
        -------
        numpy.ndarray
            Dense copy of Q, for small chains.
        """
        return self.__generator.toarray()

    def adjacency(self):
        """
        Returns
        -------
        scipy.sparse.csr_matrix
            Boolean rate graph, x -> y whenever q_xy > 0.
        """
        return sp.csr_matrix(self.__off_diagonal > 0)

    def labels_of(self, indices):
        """Labels of the given state indices, as a list."""
        return [self.__states[int(index)] for index in indices]

class Domain:
    """Subset O of the state space given as a boolean mask.

    Parameters
    ----------
    interior : array_like of bool
        True for the states in O.

    Raises
    ------
    ValueError
        If the mask selects no state.
    """

    def __init__(self, interior):
        mask = np.array(interior, dtype=bool)
        if mask.ndim != 1 or not mask.any():
            raise ValueError("domain must contain at least one interior state")
        mask.setflags(write=False)
        self.__interior = mask

    @classmethod
    def full(cls, model):
        """The whole state space."""
        return cls(np.ones(model.size, dtype=bool))

    @classmethod
    def from_states(cls, model, labels):
        """Domain made of the given state labels."""
        mask = np.zeros(model.size, dtype=bool)
        for label in labels:
            mask[model.index_of(label)] = True
        return cls(mask)

    @classmethod
    def ball(cls, model, centers, radius):
        """Open ball of the given radius around a set of state indices.

        The distance is |coordinate - center| when the model has coordinates and the hop
        distance on the rate graph otherwise.
        """
        return cls(distance_to(model, centers) < radius)

    @property
    def interior(self):
        """
        Returns
        -------
        numpy.ndarray
            Read only interior mask.
        """
        return self.__interior

    @property
    def exterior(self):
        """
        Returns
        -------
        numpy.ndarray
            Exterior mask.
        """
        return ~self.__interior

    @property
    def interior_states(self):
        """Indices of the interior states."""
        return np.flatnonzero(self.__interior)

    @property
    def exterior_states(self):
        """Indices of the exterior states."""
        return np.flatnonzero(~self.__interior)

    @property
    def size(self):
        """Number of states of the underlying model."""
        return self.__interior.size

    @property
    def is_stopped(self):
        """True when at least one state lies outside the domain."""
        return not bool(self.__interior.all())

    def require_exterior(self):
        """
        Raises
        ------
        ValueError
            If the domain has no exterior state.
        """
        if not self.is_stopped:
            raise ValueError("a stopped domain needs at least one exterior state")

    def is_strict_subset_of(self, other):
        """True when this domain is contained in `other` and differs from it."""
        return bool(np.all(other.interior[self.__interior])) and \
            int(other.interior.sum()) > int(self.__interior.sum())

    def __eq__(self, other):
        return isinstance(other, Domain) and np.array_equal(self.__interior, other.interior)

    def __hash__(self):
        return hash(self.__interior.tobytes())

    def __repr__(self):
        return f"Domain(interior={int(self.__interior.sum())}/{self.__interior.size})"

def distance_to(model, centers):
    """Distance of every state to the nearest of the given state indices.

    Parameters
    ----------
    model : MarkovModel
    centers : sequence of int

    Returns
    -------
    numpy.ndarray
        Coordinate distance, or hop distance on the rate graph (inf when unreachable).
    """
    centers = np.asarray(centers, dtype=int)
    if centers.size == 0:
        raise ValueError("need at least one center state")
    if model.coordinates is not None:
        coordinates = model.coordinates
        return np.min(np.abs(coordinates[:, None] - coordinates[None, centers]), axis=1)
    hops = shortest_path(
        model.adjacency(), directed=False, unweighted=True, indices=centers)
    return np.min(np.atleast_2d(hops), axis=0)

def nested_balls(model, centers, count=4):
    """A strictly nested sequence of proper domains around the center states.

    With coordinates the radii are spread evenly up to the largest distance. Hop balls are
    used otherwise; when they skip straight to the whole space, as on dense rate graphs,
    states are added in (distance, index) order instead.

    Parameters
    ----------
    model : MarkovModel
    centers : sequence of int
    count : int, optional
        Number of domains wanted.

    Returns
    -------
    list of Domain
        At most `count` domains, each leaving at least one exterior state.

    Raises
    ------
    ValueError
        If no proper domain contains all the centers.
    """
    count = int(count)
    if count < 1:
        raise ValueError(f"domain count must be >= 1, got {count}")
    distances = distance_to(model, centers)
    finite = distances[np.isfinite(distances)]
    largest = float(np.max(finite))

    if model.coordinates is not None:
        radii = [largest * k / (count + 1) for k in range(1, count + 1)]
        candidates = [distances < radius for radius in radii if radius > 0]
    else:
        candidates = [distances < radius for radius in range(1, int(largest) + 1)]

    domains = _strictly_nested(candidates)
    if len(domains) < min(count, model.size - 1) and model.coordinates is None:
        order = np.lexsort((np.arange(model.size), distances))
        smallest = int(np.sum(distances == 0))
        sizes = np.unique(np.round(
            np.linspace(smallest, model.size - 1, count)).astype(int))
        prefixes = []
        for size in sizes:
            mask = np.zeros(model.size, dtype=bool)
            mask[order[:size]] = True
            prefixes.append(mask)
        domains = _strictly_nested(prefixes)

    if not domains:
        raise ValueError("no proper domain contains the center states")
    return domains[:count]

def _strictly_nested(masks):
    domains = []
    for mask in masks:
        if not mask.any() or mask.all():
            continue
        domain = Domain(mask)
        if domains and not domains[-1].is_strict_subset_of(domain):
            continue
        domains.append(domain)
    return domains

def build_model(spec):
    """Builds a MarkovModel from a declarative description.

    Parameters
    ----------
    spec : dict
        ``kind`` is one of ``generator`` (keys ``generator``, ``states``, ``delta``),
        ``drift`` (keys ``lower``, ``upper``, ``step``, ``drift``, ``diffusion``,
        ``left-boundary``, ``right-boundary``, ``delta``) or ``birth-death`` (keys ``size``,
        ``birth``, ``death``, ``delta``). ``drift`` is a number or a list of polynomial
        coefficients in x, ``birth`` and ``death`` are numbers or per-state lists.

    Returns
    -------
    MarkovModel

    Raises
    ------
    ValueError
        With the offending field named.
    """
    if not isinstance(spec, dict):
        raise ValueError(f"model must be a mapping, got {type(spec).__name__}")
    kind = spec.get('kind')
    if kind not in MODEL_KINDS:
        raise ValueError(f"model field 'kind' must be one of {list(MODEL_KINDS)}, got ({kind})")

    if kind == 'generator':
        return _build_generator_model(spec)
    if kind == 'drift':
        return _build_drift_model(spec)
    return _build_birth_death_model(spec)

def _check_keys(spec, allowed):
    unknown = unknown_keys(spec, ('kind',) + allowed)
    if unknown:
        raise ValueError(f"model has unknown keys {unknown}")

def _number(spec, key, default=None):
    value = spec.get(key, default)
    if value is None:
        raise ValueError(f"model field '{key}' is required")
    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"model field '{key}' must be a number, got ({value})") from None
    if not math.isfinite(value):
        raise ValueError(f"model field '{key}' must be finite")
    return value

def _default_delta(spec, generator):
    if 'delta' in spec:
        return _number(spec, 'delta')
    rate = float(np.max(-generator.diagonal())) if generator.shape[0] else 0.0
    return 0.1 / rate if rate > 0 else 0.1

def _build_generator_model(spec):
    _check_keys(spec, ('generator', 'states', 'delta'))
    if 'generator' not in spec:
        raise ValueError("model field 'generator' is required")
    try:
        generator = np.array(spec['generator'], dtype=float)
    except (TypeError, ValueError):
        raise ValueError("model field 'generator' must be a matrix of numbers") from None
    if generator.ndim != 2 or generator.shape[0] != generator.shape[1]:
        raise ValueError(f"model field 'generator' must be square, got shape {generator.shape}")
    try:
        return MarkovModel(
            generator, _default_delta(spec, generator), states=spec.get('states'))
    except ValueError as error:
        raise ValueError(f"model field 'generator' is invalid: {error}") from None

def _rates(spec, key, size, default):
    value = spec.get(key, default)
    try:
        rates = np.array(value, dtype=float)
    except (TypeError, ValueError):
        raise ValueError(f"model field '{key}' must be a number or a list of numbers") from None
    if rates.ndim == 0:
        rates = np.full(size, float(rates))
    if rates.shape != (size,):
        raise ValueError(f"model field '{key}' must have {size} entries, got {rates.size}")
    if not np.all(np.isfinite(rates)):
        raise ValueError(f"model field '{key}' has non-finite rates")
    if np.any(rates < 0):
        raise ValueError(f"model field '{key}' has a negative rate")
    return rates

def _build_drift_model(spec):
    _check_keys(spec, (
        'lower', 'upper', 'step', 'drift', 'diffusion',
        'left-boundary', 'right-boundary', 'delta'))
    lower = _number(spec, 'lower', 0.0)
    upper = _number(spec, 'upper')
    step = _number(spec, 'step')
    if step <= 0:
        raise ValueError(f"model field 'step' must be > 0, got {step}")
    cells = int(round((upper - lower) / step))
    if cells < 1:
        raise ValueError(f"model field 'upper' gives an empty grid on [{lower}, {upper}]")
    grid = lower + step * np.arange(cells + 1)

    drift = spec.get('drift', 1.0)
    try:
        coefficients = np.atleast_1d(np.array(drift, dtype=float))
    except (TypeError, ValueError):
        raise ValueError("model field 'drift' must be a number or polynomial coefficients") from None
    if coefficients.ndim != 1 or not np.all(np.isfinite(coefficients)):
        raise ValueError("model field 'drift' must be a number or polynomial coefficients")
    velocity = np.polynomial.polynomial.polyval(grid, coefficients)

    diffusion = _number(spec, 'diffusion', 0.0)
    if diffusion < 0:
        raise ValueError(f"model field 'diffusion' must be >= 0, got {diffusion}")

    boundaries = {}
    for key in ('left-boundary', 'right-boundary'):
        boundaries[key] = spec.get(key, 'reflecting')
        if boundaries[key] not in BOUNDARY_KINDS:
            raise ValueError(
                f"model field '{key}' must be one of {list(BOUNDARY_KINDS)}, "
                f"got ({boundaries[key]})")

    # upwind differences for the drift, central for the diffusion
    up = np.maximum(velocity, 0.0) / step + diffusion / step ** 2
    down = np.maximum(-velocity, 0.0) / step + diffusion / step ** 2
    up[-1] = 0.0
    down[0] = 0.0
    if boundaries['left-boundary'] == 'absorbing':
        up[0] = 0.0
    if boundaries['right-boundary'] == 'absorbing':
        down[-1] = 0.0

    generator = _tridiagonal(up, down)
    return MarkovModel(
        generator, _default_delta(spec, generator), states=tuple(float(x) for x in grid),
        coordinates=grid)

def _build_birth_death_model(spec):
    _check_keys(spec, ('size', 'birth', 'death', 'delta'))
    size = spec.get('size')
    if not isinstance(size, int) or isinstance(size, bool) or size < 1:
        raise ValueError(f"model field 'size' must be a positive integer, got ({size})")
    birth = _rates(spec, 'birth', size, 1.0)
    death = _rates(spec, 'death', size, 1.0)
    birth[-1] = 0.0
    death[0] = 0.0
    generator = _tridiagonal(birth, death)
    return MarkovModel(
        generator, _default_delta(spec, generator), coordinates=np.arange(size, dtype=float))

def _tridiagonal(up, down):
    """Generator with rate up[i] from i to i+1 and down[i] from i to i-1."""
    size = up.size
    if size == 1:
        return sp.csr_matrix((1, 1))
    return sp.diags(
        [down[1:], -(up + down), up[:-1]], [-1, 0, 1], shape=(size, size), format='csr')

def _uniformized_kernel(generator, horizon):
    """exp(generator * horizon) for a dense (sub)generator by scaling and squaring the
    uniformized series."""
    size = generator.shape[0]
    rate = float(np.max(-np.diag(generator))) if size else 0.0
    if rate <= 0:
        return np.eye(size)

    squarings = max(0, int(math.ceil(math.log2(rate * horizon))))
    mean = rate * horizon / 2 ** squarings
    terms = int(poisson.isf(POISSON_TAIL, mean)) + 1
    weights = poisson.pmf(np.arange(terms + 1), mean)

    jump = np.eye(size) + generator / rate
    kernel = np.zeros((size, size))
    power = np.eye(size)
    for weight in weights:
        kernel += weight * power
        power = power @ jump
    kernel /= weights.sum()

    for _ in range(squarings):
        kernel = kernel @ kernel

    if not np.all(np.isfinite(kernel)):
        raise ACICException(
            f"Uniformized kernel is not finite (uniformization rate {rate}, horizon {horizon})")
    return kernel

def _check_horizon(horizon):
    horizon = float(horizon)
    if not (math.isfinite(horizon) and horizon > 0):
        raise ValueError(f"horizon must be > 0, got {horizon}")
    return horizon

def transition_kernel(model, horizon):
    """Row-stochastic matrix exp(Q horizon), computed by scaled uniformization.

    Parameters
    ----------
    model : MarkovModel
    horizon : float
        Time, > 0.

    Returns
    -------
    numpy.ndarray
        Dense n x n kernel.

    Raises
    ------
    ValueError
        If the horizon is not > 0.
    ACICException
        If the kernel is not finite.
    """
    return _uniformized_kernel(model.dense_generator(), _check_horizon(horizon))

def stopped_kernel(model, domain, horizon):
    """Kernel of the chain killed at exit from the domain.

    Rows of exterior states are zero, interior rows sum to the survival probability.
    """
    horizon = _check_horizon(horizon)
    interior = domain.interior_states
    sub_generator = model.dense_generator()[np.ix_(interior, interior)]
    kernel = np.zeros((model.size, model.size))
    kernel[np.ix_(interior, interior)] = _uniformized_kernel(sub_generator, horizon)
    return kernel

def survival_probability(model, domain, horizon):
    """P_x(tau_O > horizon) for every state, 0 on the exterior.

    Uses sparse products of the uniformized jump matrix with the all-ones vector, so it
    scales to grids where a dense kernel does not fit.
    """
    horizon = _check_horizon(horizon)
    interior = domain.interior_states
    generator = model.generator[interior][:, interior]
    rate = float(np.max(model.exit_rates[interior]))
    survival = np.zeros(model.size)
    if rate <= 0:
        survival[interior] = 1.0
        return survival

    mean = rate * horizon
    first = int(poisson.ppf(POISSON_TAIL / 2, mean))
    last = int(poisson.isf(POISSON_TAIL / 2, mean)) + 1
    weights = poisson.pmf(np.arange(first, last + 1), mean)

    jump = sp.identity(interior.size, format='csr') + generator / rate
    power = np.ones(interior.size)
    for _ in range(first):
        power = jump @ power
    total = np.zeros(interior.size)
    for weight in weights:
        total += weight * power
        power = jump @ power
    survival[interior] = np.clip(total / weights.sum(), 0.0, 1.0)
    return survival

def strongly_connected_components(model):
    """Strongly connected components of the rate graph.

    Returns
    -------
    list of numpy.ndarray
        State indices of every component, ordered by their smallest index.
    """
    count, labels = connected_components(model.adjacency(), directed=True, connection='strong')
    components = [np.flatnonzero(labels == label) for label in range(count)]
    return sorted(components, key=lambda component: int(component[0]))

def reaching_states(adjacency, targets):
    """States from which one of the target states can be reached along the graph.

    Parameters
    ----------
    adjacency : scipy.sparse matrix
        Directed graph, x -> y for nonzero (x, y).
    targets : array_like of bool
        Target mask.

    Returns
    -------
    numpy.ndarray
        Boolean mask, True on the targets themselves.
    """
    targets = np.flatnonzero(np.asarray(targets, dtype=bool))
    size = adjacency.shape[0]
    reached = np.zeros(size + 1, dtype=bool)
    if targets.size == 0:
        return reached[:size]
    reverse = sp.coo_matrix(adjacency).T.tocoo()
    rows = np.concatenate([reverse.row, np.full(targets.size, size)])
    cols = np.concatenate([reverse.col, targets])
    graph = sp.csr_matrix(
        (np.ones(rows.size), (rows, cols)), shape=(size + 1, size + 1))
    order = breadth_first_order(graph, size, directed=True, return_predecessors=False)
    reached[order] = True
    return reached[:size]

class InvariantMeasure:
    """Invariant probability measure of an irreducible chain.

    Parameters
    ----------
    weights : array_like
        Probability vector.
    """

    def __init__(self, weights):
        weights = np.array(weights, dtype=float)
        weights.setflags(write=False)
        self.__weights = weights

    @property
    def weights(self):
        """Read only probability vector."""
        return self.__weights

    def expectation(self, values):
        """mu(values)."""
        return float(self.__weights @ np.asarray(values, dtype=float))

    def residual(self, model):
        """max |mu^T Q|."""
        return float(np.max(np.abs(model.generator.T @ self.__weights)))

def invariant_measure(model):
    """The unique mu with mu^T Q = 0 and sum(mu) = 1.

    Raises
    ------
    AssumptionError
        If the chain is reducible; the strongly connected components are named.
    """
    components = strongly_connected_components(model)
    if len(components) > 1:
        named = [model.labels_of(component) for component in components]
        raise AssumptionError(
            f"A.1 fails: the generator is reducible, strongly connected components {named}",
            assumption='A.1', witness=named)
    size = model.size
    if size == 1:
        return InvariantMeasure([1.0])

    # one balance equation is redundant, replace it by the normalization
    system = model.generator.T.tolil()
    system[size - 1, :] = np.ones(size)
    rhs = np.zeros(size)
    rhs[-1] = 1.0
    weights = np.clip(solve_linear(system, rhs), 0.0, None)
    return InvariantMeasure(weights / weights.sum())

class PoissonSolution:
    """Solution q of Q q = -(f - mu(f)), normalized by mu(q) = 0."""

    def __init__(self, q, mu_f, measure):
        q = np.array(q, dtype=float)
        q.setflags(write=False)
        self.__q = q
        self.__mu_f = float(mu_f)
        self.__measure = measure

    @property
    def q(self):
        """Read only potential q."""
        return self.__q

    @property
    def mu_f(self):
        """mu(f), the uncontrolled long-run average."""
        return self.__mu_f

    @property
    def measure(self):
        """The InvariantMeasure used."""
        return self.__measure

    @property
    def bound(self):
        """K = max(q)."""
        return float(np.max(self.__q))

    def residual(self, model, f):
        """max |Q q + f - mu(f)|."""
        return float(np.max(np.abs(model.generator @ self.__q + np.asarray(f) - self.__mu_f)))

def poisson_solve(model, f, measure=None):
    """Solves the Poisson equation Q q = -(f - mu(f)) with mu(q) = 0.

    Parameters
    ----------
    model : MarkovModel
    f : array_like
    measure : InvariantMeasure, optional
        Reused when given.

    Returns
    -------
    PoissonSolution

    Raises
    ------
    AssumptionError
        If the chain is reducible.
    ACICException
        If the system is singular beyond its rank one deficiency.
    """
    f = as_state_vector(f, model.size, 'f')
    if measure is None:
        measure = invariant_measure(model)
    mu_f = measure.expectation(f)
    rhs = -(f - mu_f)

    # pin q at the heaviest state, the dropped equation follows from mu^T Q = 0
    pivot = int(np.argmax(measure.weights))
    system = model.generator.tolil()
    system[pivot, :] = np.zeros(model.size)
    system[pivot, pivot] = 1.0
    rhs[pivot] = 0.0
    try:
        q = solve_linear(system, rhs)
    except ACICException as error:
        raise ACICException(f"Poisson equation system is singular: {error}") from error
    q = q - measure.expectation(q)
    return PoissonSolution(q, mu_f, measure)

class ExitMoments:
    """First and second moments of the exit time from a domain, 0 on the exterior."""

    def __init__(self, first, second):
        first = np.array(first, dtype=float)
        second = np.array(second, dtype=float)
        first.setflags(write=False)
        second.setflags(write=False)
        self.__first = first
        self.__second = second

    @property
    def first(self):
        """E_x[tau_O]."""
        return self.__first

    @property
    def second(self):
        """E_x[tau_O^2]."""
        return self.__second

    @property
    def sup_first(self):
        """max_x E_x[tau_O]."""
        return float(np.max(self.__first))

    @property
    def sup_second(self):
        """max_x E_x[tau_O^2]."""
        return float(np.max(self.__second))

def states_not_exiting(model, domain):
    """Interior states from which the exterior of the domain can not be reached."""
    reaching = reaching_states(model.adjacency(), domain.exterior)
    return domain.interior & ~reaching

def require_reachable_exterior(model, domain):
    """
    Raises
    ------
    ValueError
        If the domain has no exterior.
    AssumptionError
        If some interior state can not reach the exterior (A.3).
    """
    domain.require_exterior()
    trapped = np.flatnonzero(states_not_exiting(model, domain))
    if trapped.size:
        labels = model.labels_of(trapped[:10])
        raise AssumptionError(
            f"A.3 fails: the exterior is unreachable from {trapped.size} interior states, "
            f"for example {labels}",
            assumption='A.3', witness=model.labels_of(trapped))

def exit_time_moments(model, domain):
    """Solves -Q_O u1 = 1 and -Q_O u2 = 2 u1 on the interior.

    Returns
    -------
    ExitMoments

    Raises
    ------
    AssumptionError
        If the exterior is unreachable from some interior state.
    """
    require_reachable_exterior(model, domain)
    interior = domain.interior_states
    system = sp.csc_matrix(-model.generator[interior][:, interior])
    factor = spla.splu(system)
    first_interior = factor.solve(np.ones(interior.size))
    second_interior = factor.solve(2.0 * first_interior)
    first = np.zeros(model.size)
    second = np.zeros(model.size)
    first[interior] = first_interior
    second[interior] = second_interior
    return ExitMoments(first, second)

def export_matrix_csv(matrix, labels, path):
    """Writes a matrix as CSV with a header row of state labels.

    Parameters
    ----------
    matrix : array_like or scipy.sparse matrix
    labels : sequence
        One label per column.
    path : str

    Returns
    -------
    str
        The path written.
    """
    if sp.issparse(matrix):
        matrix = matrix.toarray()
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    if matrix.shape[1] != len(labels):
        raise ValueError(f"need {matrix.shape[1]} labels, got {len(labels)}")
    return write_csv(path, list(labels), matrix.tolist())
