"""Configuration for ACIC runs.
"""

from .config import Config
from .config_value import ConfigValue
from .command_config import CommandConfig

__all__ = [
    'config',
    'config_value',
    'command_config'
]
