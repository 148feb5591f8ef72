"""Representation of an ACIC command configuration.
"""

import copy
import os

import yaml

from acic.config.config_value import ConfigValue
from acic.utils.dict import deep_merge

ENVIRONMENT_PREFIX = 'ACIC_'

def environment_variable_name(key):
    """Name of the environment variable overriding a configuration key.

    Parameters
    ----------
    key : str

    Returns
    -------
    str
        ``ACIC_`` followed by the upper-cased key with dashes turned into underscores.
    """
    return ENVIRONMENT_PREFIX + key.upper().replace('-', '_')

class CommandConfig:
    """Representation of an ACIC command configuration.

    Parameters
    ----------
    parent_config : Config
        Parent ACIC configuration containing this command configuration.
    command_name : str
        Name of the command.
    implementer_name : str
        Command implementer class name, optionally with a dotted module path.
    command_config : dict, optional
        Configuration specific to this command.

    Attributes
    ----------
    __parent_config : Config
    __command_name : str
    __implementer_name : str
    __command_config : dict
    __command_config_overrides : dict
    __flag_overrides : dict
    """

    def __init__(self, parent_config, command_name, implementer_name, command_config=None):
        self.__parent_config = parent_config
        self.__command_name = command_name
        self.__implementer_name = implementer_name
        self.__command_config = command_config if command_config is not None else {}
        self.__command_config_overrides = {}
        self.__flag_overrides = {}

    @property
    def parent_config(self):
        """
        Returns
        -------
        Config
        """
        return self.__parent_config

    @property
    def command_name(self):
        """
        Returns
        -------
        str
            Name of this command.
        """
        return self.__command_name

    @property
    def implementer_name(self):
        """
        Returns
        -------
        str
            Command implementer name.
        """
        return self.__implementer_name

    @property
    def command_config(self):
        """Get a deep copy of the command configuration.

        Returns
        -------
        dict
        """
        return copy.deepcopy(self.__command_config)

    @property
    def global_defaults(self):
        """Convince function for getting the global defaults from the parent config.

        Returns
        -------
        dict
        """
        return self.parent_config.global_defaults

    @property
    def command_config_overrides(self):
        """Overrides given as KEY=VALUE pairs on the command line.

        Returns
        -------
        dict
        """
        return copy.deepcopy(self.__command_config_overrides)

    @command_config_overrides.setter
    def command_config_overrides(self, overrides):
        self.__command_config_overrides = dict(overrides) if overrides else {}

    @property
    def flag_overrides(self):
        """Overrides given by dedicated flags such as --seed and --tol. They only apply to
        keys the implementer knows.

        Returns
        -------
        dict
        """
        return copy.deepcopy(self.__flag_overrides)

    @flag_overrides.setter
    def flag_overrides(self, overrides):
        self.__flag_overrides = {
            key: value for key, value in (overrides or {}).items() if value is not None}

    def merge_command_config(self, new_command_config):
        """Merge new command configuration into the existing command configuration.

        Raises
        ------
        ValueError
            If new command configuration has duplicative leaf keys to
                existing command configuration.
        """
        if new_command_config is not None:
            try:
                self.__command_config = deep_merge(
                    self.command_config,
                    copy.deepcopy(new_command_config)
                )
            except ValueError as error:
                raise ValueError(
                    "Error merging new command configuration into existing command"
                    f" configuration for command ({self.command_name}): {error}"
                ) from error

    def environment_overrides(self, keys):
        """Values of the ACIC_<KEY> environment variables for the given keys, parsed as YAML
        scalars.

        Returns
        -------
        dict
        """
        overrides = {}
        for key in keys:
            name = environment_variable_name(key)
            if name in os.environ:
                try:
                    overrides[key] = yaml.safe_load(os.environ[name])
                except yaml.YAMLError as error:
                    raise ValueError(
                        f"Environment variable ({name}) is not a valid value: {error}"
                    ) from error
        return overrides

    def get_config_value(self, key, defaults=None):
        """Get the configuration value for a given configuration key from the
        merged set of configuration sources.

        Returns
        -------
        str, int, float, dict, list, bool or None
            None if no source has the key.
        """
        runtime_command_config = self.__merge_runtime_command_config(defaults)

        if key in runtime_command_config:
            value = ConfigValue.convert_leaves_to_values(
                copy.deepcopy(runtime_command_config[key]))
        else:
            value = None

        return value

    def get_copy_of_runtime_command_config(self, defaults=None):
        """Take all of the configuration sources of this command and merge them into a
        single dictionary.

        From least precedence to highest precedence.

            1. defaults
            2. Global Configuration Defaults (acic-config.global-defaults)
            3. Command Configuration (acic-config.{COMMAND_NAME}.config)
            4. Environment variables (ACIC_{KEY})
            5. Command line overrides (--seed, --tol, --command-config)

        Global defaults, environment variables and flag overrides only contribute keys
        the command knows, that is keys of `defaults` or of the command configuration.

        Returns
        -------
        dict
            A deep copy of the merged runtime command configuration
        """
        return copy.deepcopy(self.__merge_runtime_command_config(defaults))

    def __merge_runtime_command_config(self, defaults=None):
        defaults = defaults if defaults else {}
        command_config = self.__command_config
        known = set(defaults) | set(command_config) | set(self.__command_config_overrides)

        def known_only(values):
            return {key: value for key, value in values.items() if key in known}

        return {
            **defaults,
            **known_only(self.global_defaults),
            **command_config,
            **self.environment_overrides(sorted(known)),
            **known_only(self.__flag_overrides),
            **self.__command_config_overrides,
        }
