# pylint: disable=line-too-long
"""Average-cost impulse control (acic) of finite continuous-time Markov chains.

The library computes the optimal long-run average cost lambda of an impulse controlled
chain, the relative value w solving the quasi-variational inequality
w = min(M w, continuation value) and an optimal stationary impulse strategy. It gets
there through stopped problems on growing domains and vanishing discounts, checks the
result against an ergodic optimal stopping recomputation, and ships a simulator and two
exact oracles to cross-check the numbers.

Command-Line Options
--------------------

    -h, --help
        show this help message and exit

    --command {check,oracle,simulate,solve,sweep}
        ACIC command to run

    -c CONFIG [CONFIG ...], --config CONFIG [CONFIG ...]
        ACIC configuration files, or directories containing files, in yml or json

    --builtin BUILTIN
        Builtin problem to use instead of acic-config.problem
        (drift-example, birth-death-inventory, random-ctmc, constant-f)

    -o OUT, --out OUT
        Directory the reports are written to (default acic-results)

    --seed SEED
        Seed override for commands that simulate

    --tol TOL
        Tolerance override for commands that verify

    -q, --quiet
        Do not print progress to standard out

    --command-config COMMAND_CONFIG_KEY=COMMAND_CONFIG_VALUE [COMMAND_CONFIG_KEY=COMMAND_CONFIG_VALUE ...]
        Override command config provided by the given ACIC config with these arguments.

Exit codes: 0 on success, 1 on solver or assumption failures, 2 on configuration errors.

Commands
--------

* solve - lambda_trace.csv, value.csv, strategy.json, report.json
* simulate - estimates.json, trajectory.csv, simulate.json
* oracle - oracle.json (and oracle_strategy.json for the policy enumeration)
* check - exit_probability.csv, check.json
* sweep - sweep.csv, sweep.json

### Variable Precedence

From least precedence to highest precedence.

    1. CommandImplementer implementation provided configuration defaults
    2. Global Configuration Defaults (acic-config.global-defaults)
    3. Command Configuration (acic-config.{COMMAND_NAME}.config)
    4. Environment variables ACIC_{KEY} (key upper-cased, dashes turned into underscores)
    5. Command line overrides (--seed, --tol, --command-config)

Global defaults, environment variables, --seed and --tol only reach the keys a command
accepts. Unknown keys in a command configuration or in --command-config are rejected.

** Example **

    ---
    acic-config:
      # Required. Only version 1 exists.
      schema-version: 1

      # Either a builtin with parameters or an explicit model.
      problem:
        name: two-state
        model:
          # generator, drift or birth-death
          kind: generator
          generator: [[-1, 1], [2, -2]]
        # number, per state list, or {kind: polynomial, coefficients: [...], cap: ...}
        running-cost: [0, 10]
        impulse-cost:
          # constant (value), affine (fixed, proportional) or matrix (matrix, floor)
          kind: constant
          targets: [0]
          value: 1
        # full (default) or stopped
        #pipeline: full

      schedule:
        alphas: [0.1, 0.01, 0.001, 0.0001]
        # {count: n} for nested balls around the targets, or a list of state label lists
        domains:
          count: 1
        tol-lambda: 1.0e-6

      global-defaults:
        seed: 7

      simulate:
        config:
          replications: 100
          horizon: 10000.0

** Builtin parameters **

    drift-example: c, fbar, upper, step, cap
    birth-death-inventory: size, demand, returns, holding, shortage, targets, fixed, per-unit
    random-ctmc: seed, n, targets, density, fixed, proportional
    constant-f: kappa, size, c
"""

from acic.command_implementer import CommandImplementer
from acic.exceptions import (ACICException, AssumptionError, ConvergenceError,
                             SolverInputError)
from acic.factory import ACICFactory

__all__ = [
    'command_implementer',
    'command_implementers',
    'config',
    'ergodic',
    'exceptions',
    'factory',
    'impulse',
    'model',
    'problem',
    'sim',
    'stopping',
    'utils'
]
