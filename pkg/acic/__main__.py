"""
ACIC entry point.

Exit Codes
----------
0
    command succeeded
1
    solver, assumption or implementer failure
2
    invalid configuration (also argparse usage errors)
"""

import argparse
import os
import sys
import traceback
from contextlib import redirect_stdout

import yaml

from acic.config.config import Config
from acic.exceptions import ACICException
from acic.factory import ACICFactory

EXIT_SOLVER_FAILURE = 1
EXIT_CONFIG_ERROR = 2

def print_error(msg):
    """
    Prints message to STDERR.

    Parameters
    ----------
    msg : string
        Message to print as an error.
    """
    print(msg, file=sys.stderr)

class ParseKeyValueArgs(argparse.Action): # pylint: disable=too-few-public-methods
    """
    Collects KEY=VALUE arguments into a dict, values parsed as YAML scalars.
    """
    def __call__(self, parser, namespace, values, option_string=None):
        key_value_dict = {}

        if values:
            for item in values:
                split_items = item.split("=", 1)
                if len(split_items) != 2:
                    parser.error(f"expected KEY=VALUE, got ({item})")
                key = split_items[0].strip()
                try:
                    key_value_dict[key] = yaml.safe_load(split_items[1])
                except yaml.YAMLError:
                    parser.error(f"value of ({key}) is not valid YAML")

        setattr(namespace, self.dest, key_value_dict)

def build_parser():
    """
    Returns
    -------
    argparse.ArgumentParser
    """
    parser = argparse.ArgumentParser(
        description='Average-cost impulse control of continuous-time Markov chains (ACIC)')
    parser.add_argument(
        '--command',
        required=True,
        choices=sorted(Config.COMMANDS),
        help='ACIC command to run'
    )
    parser.add_argument(
        '-c',
        '--config',
        nargs='+',
        help='ACIC configuration files, or directories containing files, in yml or json'
    )
    parser.add_argument(
        '--builtin',
        help='Builtin problem to use instead of acic-config.problem'
    )
    parser.add_argument(
        '-o',
        '--out',
        default='acic-results',
        help='Directory the reports are written to'
    )
    parser.add_argument(
        '--seed',
        type=int,
        help='Seed override for commands that simulate'
    )
    parser.add_argument(
        '--tol',
        type=float,
        help='Tolerance override for commands that verify'
    )
    parser.add_argument(
        '-q',
        '--quiet',
        action='store_true',
        help='Do not print progress to standard out'
    )
    parser.add_argument(
        '--command-config',
        metavar='COMMAND_CONFIG_KEY=COMMAND_CONFIG_VALUE',
        nargs='+',
        help='Override command config provided by the given ACIC config with these arguments.',
        action=ParseKeyValueArgs
    )
    return parser

def main(argv=None):
    """
    Main entry point for ACIC.
    """
    args = build_parser().parse_args(argv)

    if not args.config and not args.builtin:
        print_error('one of -c/--config or --builtin is required')
        sys.exit(EXIT_CONFIG_ERROR)

    for config_file in args.config or []:
        if not os.path.exists(config_file) or \
                (os.path.isfile(config_file) and os.stat(config_file).st_size == 0):
            print_error('specified -c/--config must exist and not be empty')
            sys.exit(EXIT_CONFIG_ERROR)

    try:
        acic_config = Config(args.config)
        if args.builtin:
            acic_config.set_problem_override({'builtin': args.builtin})
        acic_config.set_command_config_overrides(
            args.command,
            args.command_config,
            {'seed': args.seed, 'tol': args.tol})
    except (ValueError, AssertionError) as error:
        print_error(f"specified configuration is invalid ACIC configuration: {error}")
        sys.exit(EXIT_CONFIG_ERROR)

    acic_factory = ACICFactory(acic_config, args.out)
    with open(os.devnull, 'w') as devnull:
        stdout = devnull if args.quiet else sys.stdout
        with redirect_stdout(stdout):
            try:
                acic_factory.run_command(args.command)
            except (ValueError, AssertionError) as error:
                print_error(f"Invalid configuration for command ({args.command}): {error}")
                sys.exit(EXIT_CONFIG_ERROR)
            except ACICException as error:
                print_error(f"Error running command ({args.command}): {error}")
                sys.exit(EXIT_SOLVER_FAILURE)
            except Exception as error: # pylint: disable=broad-except
                print_error(f"Error running command ({args.command}): {error}")
                print_error(traceback.format_exc())
                sys.exit(EXIT_SOLVER_FAILURE)

def init():
    """
    Notes
    -----
    See https://medium.com/opsops/how-to-test-if-name-main-1928367290cb
    """
    if __name__ == "__main__":
        sys.exit(main())

init()
