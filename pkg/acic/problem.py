"""Impulse control problems built from configuration.

A problem bundles a `MarkovModel`, the running cost f, the `ImpulseCost` and the
`Schedule` of discounts and domains. It is described either by a builtin name with
parameters or explicitly::

    problem:
      name: two-state
      model:
        kind: generator
        generator: [[-1, 1], [2, -2]]
      running-cost: [0, 10]
      impulse-cost:
        kind: constant
        targets: [0]
        value: 1
    schedule:
      alphas: [0.1, 0.01, 0.001]
      domains:
        count: 1
      tol-lambda: 1.0e-6
"""

import numpy as np

from acic.ergodic import DEFAULT_ALPHAS, DEFAULT_DOMAIN_COUNT, DEFAULT_TOL_LAMBDA, Schedule
from acic.impulse import ImpulseCost
from acic.model import Domain, MarkovModel, build_model, nested_balls
from acic.utils.dict import unknown_keys

PIPELINES = ('full', 'stopped')
COST_KINDS = ('constant', 'affine', 'matrix')
PROBLEM_KEYS = ('name', 'builtin', 'parameters', 'model', 'running-cost', 'impulse-cost',
                'pipeline')
SCHEDULE_KEYS = ('alphas', 'domains', 'tol-lambda')


class ImpulseProblem:
    """A fully built problem.

    Parameters
    ----------
    name : str
    model : MarkovModel
    running_cost : numpy.ndarray
    cost : ImpulseCost
    schedule : Schedule
    pipeline : str
        ``full`` or ``stopped``.
    renewal : dict, optional
        Keyword arguments of `acic.sim.renewal_oracle` when the problem has a renewal
        reward counterpart.
    """

    def __init__( # pylint: disable=too-many-arguments
            self,
            name,
            model,
            running_cost,
            cost,
            schedule,
            pipeline='full',
            renewal=None):
        if pipeline not in PIPELINES:
            raise ValueError(f"problem field 'pipeline' must be one of {list(PIPELINES)}")
        self.__name = name
        self.__model = model
        self.__running_cost = running_cost
        self.__cost = cost
        self.__schedule = schedule
        self.__pipeline = pipeline
        self.__renewal = renewal

    @property
    def name(self):
        """Problem name."""
        return self.__name

    @property
    def model(self):
        """MarkovModel."""
        return self.__model

    @property
    def running_cost(self):
        """f as a vector."""
        return self.__running_cost

    @property
    def cost(self):
        """ImpulseCost."""
        return self.__cost

    @property
    def schedule(self):
        """Schedule."""
        return self.__schedule

    @property
    def pipeline(self):
        """full or stopped."""
        return self.__pipeline

    @property
    def renewal(self):
        """Renewal oracle arguments or None."""
        return None if self.__renewal is None else dict(self.__renewal)

    def summary(self):
        """Short serializable description."""
        return {
            'name': self.__name,
            'states': self.__model.size,
            'targets': self.__model.labels_of(self.__cost.targets),
            'pipeline': self.__pipeline,
            'alphas': list(self.__schedule.alphas),
            'domain-sizes': [int(domain.interior.sum()) for domain in self.__schedule.domains]
        }

def build_running_cost(model, spec):
    """f from a number, a per-state list, or a mapping with ``kind: polynomial``
    (``coefficients`` in the state coordinate, optional ``cap``).

    Raises
    ------
    ValueError
        With the offending field named.
    """
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return np.full(model.size, float(spec))
    if isinstance(spec, (list, tuple)):
        values = np.array(spec, dtype=float)
        if values.shape != (model.size,):
            raise ValueError(
                f"problem field 'running-cost' must have {model.size} entries, got {values.size}")
    elif isinstance(spec, dict):
        unknown = unknown_keys(spec, ('kind', 'coefficients', 'cap'))
        if unknown or spec.get('kind') != 'polynomial':
            raise ValueError(
                "problem field 'running-cost' mapping must be kind polynomial with "
                f"coefficients and an optional cap, got keys {sorted(spec)}")
        positions = model.coordinates
        if positions is None:
            positions = np.arange(model.size, dtype=float)
        values = np.polynomial.polynomial.polyval(
            positions, np.array(spec.get('coefficients', [0.0]), dtype=float))
        if spec.get('cap') is not None:
            values = np.minimum(values, float(spec['cap']))
    else:
        raise ValueError(
            "problem field 'running-cost' must be a number, a list or a polynomial mapping")
    if not np.all(np.isfinite(values)):
        raise ValueError("problem field 'running-cost' has non-finite entries")
    return values

def build_impulse_cost(model, spec):
    """ImpulseCost from a mapping with ``kind`` constant (``value``), affine (``fixed``,
    ``proportional``) or matrix (``matrix``, optional ``floor``); ``targets`` are labels.

    Raises
    ------
    ValueError
        With the offending field or violated invariant named.
    """
    if not isinstance(spec, dict):
        raise ValueError("problem field 'impulse-cost' must be a mapping")
    kind = spec.get('kind', 'constant')
    if kind not in COST_KINDS:
        raise ValueError(f"impulse-cost field 'kind' must be one of {list(COST_KINDS)}")
    allowed = {
        'constant': ('value',),
        'affine': ('fixed', 'proportional'),
        'matrix': ('matrix', 'floor')
    }[kind]
    unknown = unknown_keys(spec, ('kind', 'targets') + allowed)
    if unknown:
        raise ValueError(f"impulse-cost has unknown keys {unknown}")
    if not spec.get('targets'):
        raise ValueError("impulse-cost field 'targets' must list at least one state")
    targets = [model.index_of(label) for label in spec['targets']]

    if kind == 'constant':
        return ImpulseCost.constant(model, targets, _required(spec, 'value'))
    if kind == 'affine':
        return ImpulseCost.affine(
            model, targets, _required(spec, 'fixed'), spec.get('proportional', 0.0))
    return ImpulseCost.from_matrix(targets, _required(spec, 'matrix'), spec.get('floor'))

def _required(spec, key):
    if spec.get(key) is None:
        raise ValueError(f"impulse-cost field '{key}' is required")
    return spec[key]

def build_schedule(model, cost, spec=None, domains=None):
    """Schedule from a mapping with ``alphas``, ``tol-lambda`` and ``domains``.

    ``domains`` is either ``{count: n}`` for nested balls around U or a list of state
    label lists. Explicit `domains` (Domain objects) take precedence over the mapping.

    Raises
    ------
    ValueError
        With the offending field named.
    """
    spec = {} if spec is None else spec
    unknown = unknown_keys(spec, SCHEDULE_KEYS)
    if unknown:
        raise ValueError(f"schedule has unknown keys {unknown}")
    alphas = spec.get('alphas', DEFAULT_ALPHAS)
    tol_lambda = spec.get('tol-lambda', DEFAULT_TOL_LAMBDA)

    if domains is None:
        domain_spec = spec.get('domains', {'count': DEFAULT_DOMAIN_COUNT})
        if isinstance(domain_spec, dict):
            unknown = unknown_keys(domain_spec, ('count',))
            if unknown:
                raise ValueError(f"schedule field 'domains' has unknown keys {unknown}")
            domains = nested_balls(
                model, cost.targets, domain_spec.get('count', DEFAULT_DOMAIN_COUNT))
        elif isinstance(domain_spec, list):
            domains = [Domain.from_states(model, labels) for labels in domain_spec]
        else:
            raise ValueError(
                "schedule field 'domains' must be a mapping with count or a list of state lists")
    return Schedule(alphas, domains, tol_lambda)

def _drift_example(parameters):
    """Unit drift on [0, upper] with an absorbing end, f = min(base + x^2, cap), shift to 0
    at cost c."""
    cost_value = float(parameters.get('c', 1.0))
    base = float(parameters.get('fbar', 0.0))
    upper = float(parameters.get('upper', 10.0))
    step = float(parameters.get('step', 1e-3))
    cap = float(parameters.get('cap', base + upper ** 2))
    model = build_model({
        'kind': 'drift', 'lower': 0.0, 'upper': upper, 'step': step, 'drift': 1.0,
        'right-boundary': 'absorbing'})
    f = np.minimum(base + model.coordinates ** 2, cap)
    cost = ImpulseCost.constant(model, [model.index_of(0.0)], cost_value)
    domain = Domain(model.coordinates < upper - step / 2)
    renewal = {'cost': cost_value, 'base': base, 'cap': cap, 'targets': (0.0,),
               'upper': upper, 'speed': 1.0}
    return model, f, cost, [domain], 'stopped', renewal

def _birth_death_inventory(parameters):
    """Stock level drained by demand, holding and shortage costs, reorder up to one of the
    target levels at a fixed plus per-unit cost."""
    size = int(parameters.get('size', 21))
    demand = float(parameters.get('demand', 1.0))
    returns = float(parameters.get('returns', 0.2))
    holding = float(parameters.get('holding', 0.1))
    shortage = float(parameters.get('shortage', 5.0))
    model = build_model({'kind': 'birth-death', 'size': size, 'birth': returns,
                         'death': demand})
    levels = np.arange(size, dtype=float)
    f = holding * levels + np.where(levels == 0, shortage, 0.0)
    targets = parameters.get('targets', [size // 2, (3 * size) // 4])
    cost = ImpulseCost.affine(
        model, targets, parameters.get('fixed', 2.0), parameters.get('per-unit', 0.1))
    return model, f, cost, None, 'full', None

def random_instance(seed, size, target_count, density=0.6, fixed=1.0, proportional=0.1):
    """Seeded irreducible random chain with running cost and affine impulse cost.

    A ring of positive rates keeps every instance irreducible.
    """
    rng = np.random.Generator(np.random.Philox(int(seed)))
    size = int(size)
    rates = rng.uniform(0.1, 2.0, (size, size)) * (rng.random((size, size)) < density)
    ring = np.roll(np.eye(size, dtype=bool), 1, axis=1)
    rates[ring] = np.maximum(rates[ring], rng.uniform(0.1, 2.0, size))
    np.fill_diagonal(rates, 0.0)
    np.fill_diagonal(rates, -rates.sum(axis=1))
    model = MarkovModel(rates, 0.1 / float(np.max(-np.diag(rates))))
    f = rng.uniform(0.0, 10.0, size)
    targets = np.sort(rng.choice(size, int(target_count), replace=False))
    cost = ImpulseCost.affine(model, targets, fixed, proportional)
    return model, f, cost

def _random_ctmc(parameters):
    model, f, cost = random_instance(
        parameters.get('seed', 0), parameters.get('n', 8), parameters.get('targets', 2),
        parameters.get('density', 0.6), parameters.get('fixed', 1.0),
        parameters.get('proportional', 0.1))
    return model, f, cost, None, 'full', None

def _constant_f(parameters):
    kappa = float(parameters.get('kappa', 1.0))
    size = int(parameters.get('size', 5))
    model = build_model({'kind': 'birth-death', 'size': size, 'birth': 1.0, 'death': 1.0})
    cost = ImpulseCost.constant(model, [0], parameters.get('c', 1.0))
    return model, np.full(size, kappa), cost, None, 'full', None

BUILTINS = {
    'drift-example': _drift_example,
    'birth-death-inventory': _birth_death_inventory,
    'random-ctmc': _random_ctmc,
    'constant-f': _constant_f
}

def build_problem(problem_spec, schedule_spec=None):
    """Builds an ImpulseProblem.

    Parameters
    ----------
    problem_spec : dict
        Either ``builtin`` (one of `BUILTINS`) with optional ``parameters``, or ``model``,
        ``running-cost`` and ``impulse-cost``. ``name`` and ``pipeline`` are optional.
    schedule_spec : dict, optional

    Returns
    -------
    ImpulseProblem

    Raises
    ------
    ValueError
        With the offending field or violated invariant named.
    """
    if not isinstance(problem_spec, dict):
        raise ValueError("problem must be a mapping")
    unknown = unknown_keys(problem_spec, PROBLEM_KEYS)
    if unknown:
        raise ValueError(f"problem has unknown keys {unknown}")

    if 'builtin' in problem_spec:
        builtin = problem_spec['builtin']
        if builtin not in BUILTINS:
            raise ValueError(
                f"problem field 'builtin' must be one of {sorted(BUILTINS)}, got ({builtin})")
        explicit = sorted(set(problem_spec) & {'model', 'running-cost', 'impulse-cost'})
        if explicit:
            raise ValueError(f"problem field 'builtin' can not be combined with {explicit}")
        parameters = problem_spec.get('parameters') or {}
        if not isinstance(parameters, dict):
            raise ValueError("problem field 'parameters' must be a mapping")
        model, f, cost, domains, pipeline, renewal = BUILTINS[builtin](parameters)
        name = problem_spec.get('name', builtin)
    else:
        for key in ('model', 'running-cost', 'impulse-cost'):
            if key not in problem_spec:
                raise ValueError(f"problem field '{key}' is required")
        model = build_model(problem_spec['model'])
        f = build_running_cost(model, problem_spec['running-cost'])
        cost = build_impulse_cost(model, problem_spec['impulse-cost'])
        domains, pipeline, renewal = None, 'full', None
        name = problem_spec.get('name', 'problem')

    pipeline = problem_spec.get('pipeline', pipeline)
    if schedule_spec and 'domains' in schedule_spec:
        domains = None
    schedule = build_schedule(model, cost, schedule_spec, domains)
    return ImpulseProblem(name, model, f, cost, schedule, pipeline, renewal)
