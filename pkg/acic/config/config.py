"""Representation of configuration for ACIC runs.
"""

import copy
import os.path

from acic.config.command_config import CommandConfig
from acic.config.config_value import ConfigValue
from acic.utils.dict import deep_merge, unknown_keys
from acic.utils.file import find_config_files, parse_yaml_or_json_file

class Config:
    """Representation of configuration for ACIC runs.

    Parameters
    ----------
    config : dict, list, str (file or directory), optional
        A dictionary that is a valid ACIC configuration,
        a string that is a path to a YAML or JSON file that is
        a valid ACIC configuration,
        a string that is a path to a directory containing one or more
        files that are valid YAML or JSON files that are valid
        configurations,
        or a list of any of the former.

    Attributes
    ----------
    __problem : dict
    __schedule : dict
    __global_defaults : dict
    __command_configs : dict of str (command names) to CommandConfig

    Raises
    ------
    ValueError
        If given config is not of expected type.
    AssertionError
        If given config contains any invalid ACIC configurations.
    """
    ACIC_CONFIG_KEY = 'acic-config'
    ACIC_CONFIG_KEY_SCHEMA_VERSION = 'schema-version'
    ACIC_CONFIG_KEY_PROBLEM = 'problem'
    ACIC_CONFIG_KEY_SCHEDULE = 'schedule'
    ACIC_CONFIG_KEY_GLOBAL_DEFAULTS = 'global-defaults'
    ACIC_CONFIG_KEY_COMMAND_IMPLEMENTER = 'implementer'
    ACIC_CONFIG_KEY_COMMAND_CONFIG = 'config'

    SCHEMA_VERSION = 1
    COMMANDS = {
        'solve': 'Solve',
        'simulate': 'Simulate',
        'oracle': 'Oracle',
        'check': 'Check',
        'sweep': 'Sweep'
    }

    def __init__(self, config=None):
        self.__problem = {}
        self.__schedule = {}
        self.__global_defaults = {}
        self.__command_configs = {}

        if config is not None:
            self.add_config(config)

    @property
    def problem(self):
        """Problem section with plain values.

        Returns
        -------
        dict
        """
        return ConfigValue.convert_leaves_to_values(copy.deepcopy(self.__problem))

    @property
    def schedule(self):
        """Schedule section with plain values.

        Returns
        -------
        dict
        """
        return ConfigValue.convert_leaves_to_values(copy.deepcopy(self.__schedule))

    @property
    def global_defaults(self):
        """Get a deep copy of the global defaults.

        Returns
        -------
        dict
        """
        return copy.deepcopy(self.__global_defaults)

    @property
    def command_configs(self):
        """
        Returns
        -------
        dict of str to CommandConfig
        """
        return self.__command_configs

    def get_command_config(self, command_name):
        """Get the command config for a given command, creating one with the default
        implementer when the configuration has no section for it.

        Raises
        ------
        AssertionError
            If the command is not known.
        """
        assert command_name in Config.COMMANDS, \
            f"Unknown command ({command_name}), expected one of {sorted(Config.COMMANDS)}"

        if command_name not in self.__command_configs:
            self.__command_configs[command_name] = CommandConfig(
                self, command_name, Config.COMMANDS[command_name])

        return self.__command_configs[command_name]

    def set_problem_override(self, problem):
        """Replaces the problem section, used by --builtin.

        Parameters
        ----------
        problem : dict
        """
        self.__problem = ConfigValue.convert_leaves_to_config_values(
            values=copy.deepcopy(problem),
            parent_source='command line',
            path_parts=[Config.ACIC_CONFIG_KEY, Config.ACIC_CONFIG_KEY_PROBLEM]
        )

    def set_command_config_overrides(self, command_name, command_config_overrides,
                                     flag_overrides=None):
        """Sets configuration overrides for a command.

        Parameters
        ----------
        command_name : str
        command_config_overrides : dict
            KEY=VALUE overrides, always applied.
        flag_overrides : dict, optional
            Flag overrides, applied to the keys the command knows.
        """
        command_config = self.get_command_config(command_name)
        command_config.command_config_overrides = command_config_overrides
        command_config.flag_overrides = flag_overrides

    def add_config(self, config):
        """Parses, validates, and adds a given config to this Config.

        Parameters
        ----------
        config : dict, list, str (file or directory)

        Raises
        ------
        ValueError
            If given config is not of expected type.
        AssertionError
            If given config contains any invalid ACIC configurations.
        """
        if isinstance(config, dict):
            self.__add_config_dict(config)
        elif isinstance(config, list):
            for _config in config:
                self.add_config(_config)
        elif isinstance(config, str):
            if os.path.isfile(config):
                self.__add_config_file(config)
            elif os.path.isdir(config):
                config_dir_files = find_config_files(config)
                if not config_dir_files:
                    raise ValueError(
                        f"Given config string ({config}) is a directory" +
                        " with no recursive children files."
                    )
                for config_dir_file in config_dir_files:
                    self.__add_config_file(config_dir_file)
            else:
                raise ValueError(
                    f"Given config string ({config}) is not a valid path."
                )
        else:
            raise ValueError(
                f"Given config ({config}) is unexpected type ({type(config)}) " +
                "not a dictionary, string, or list of former."
            )

    def __add_config_file(self, config_file):
        """Adds a JSON or YAML file as config to this Config.

        Raises
        ------
        ValueError
            If can not parse given file as YAML or JSON
        AssertionError
            If dictionary parsed from given YAML or JSON file is not a valid ACIC config.
        """
        try:
            parsed_config_file = parse_yaml_or_json_file(config_file)
        except ValueError as error:
            raise ValueError(
                f"Error parsing config file ({config_file}) as json or yaml"
            ) from error

        assert isinstance(parsed_config_file, dict), \
            f"Config file ({config_file}) does not hold a mapping"

        try:
            self.__add_config_dict(parsed_config_file, config_file)
        except AssertionError as error:
            raise AssertionError(
                f"Failed to add parsed configuration file ({config_file}): {error}"
            ) from error

    def __add_config_dict(self, config_dict, source_file_path=None):
        """Add an ACIC configuration dictionary to this Config.

        Raises
        ------
        AssertionError
            If the given config_dict is not a valid ACIC configuration dictionary.
        ValueError
            If merging sections finds conflicting leaf values.
        """
        assert Config.ACIC_CONFIG_KEY in config_dict, \
            "Failed to add invalid ACIC config. " + \
            f"Missing expected top level key ({Config.ACIC_CONFIG_KEY}): " + \
            f"{config_dict}"

        unknown = unknown_keys(config_dict, [Config.ACIC_CONFIG_KEY])
        assert not unknown, \
            f"Failed to add invalid ACIC config. Unknown top level keys: {unknown}"

        acic_config = config_dict[Config.ACIC_CONFIG_KEY]
        assert isinstance(acic_config, dict), \
            f"Value of ({Config.ACIC_CONFIG_KEY}) must be a mapping"

        schema_version = acic_config.get(Config.ACIC_CONFIG_KEY_SCHEMA_VERSION)
        assert schema_version == Config.SCHEMA_VERSION, \
            f"Unsupported {Config.ACIC_CONFIG_KEY}.{Config.ACIC_CONFIG_KEY_SCHEMA_VERSION}" + \
            f" ({schema_version}), expected {Config.SCHEMA_VERSION}"

        allowed = [
            Config.ACIC_CONFIG_KEY_SCHEMA_VERSION,
            Config.ACIC_CONFIG_KEY_PROBLEM,
            Config.ACIC_CONFIG_KEY_SCHEDULE,
            Config.ACIC_CONFIG_KEY_GLOBAL_DEFAULTS
        ] + list(Config.COMMANDS)
        unknown = unknown_keys(acic_config, allowed)
        assert not unknown, \
            f"Unknown keys under {Config.ACIC_CONFIG_KEY}: {unknown}"

        if source_file_path is not None:
            parent_source = source_file_path
        else:
            parent_source = copy.deepcopy(config_dict)

        acic_config_values = ConfigValue.convert_leaves_to_config_values(
            values=copy.deepcopy(acic_config),
            parent_source=parent_source,
            path_parts=[Config.ACIC_CONFIG_KEY]
        )

        for key, value in acic_config_values.items():
            if key == Config.ACIC_CONFIG_KEY_SCHEMA_VERSION:
                continue
            if key in Config.COMMANDS:
                self.__add_command_config(key, value)
                continue

            assert isinstance(value, dict), \
                f"Value of ({Config.ACIC_CONFIG_KEY}.{key}) must be a mapping"
            try:
                if key == Config.ACIC_CONFIG_KEY_PROBLEM:
                    self.__problem = deep_merge(copy.deepcopy(self.__problem), value)
                elif key == Config.ACIC_CONFIG_KEY_SCHEDULE:
                    self.__schedule = deep_merge(copy.deepcopy(self.__schedule), value)
                else:
                    self.__global_defaults = deep_merge(
                        copy.deepcopy(self.__global_defaults), value)
            except ValueError as error:
                raise ValueError(f"Error merging {key}: {error}") from error

    def __add_command_config(self, command_name, command_section):
        assert isinstance(command_section, dict), \
            f"Command ({command_name}) configuration must be a mapping"
        unknown = unknown_keys(command_section, [
            Config.ACIC_CONFIG_KEY_COMMAND_IMPLEMENTER,
            Config.ACIC_CONFIG_KEY_COMMAND_CONFIG
        ])
        assert not unknown, \
            f"Unknown keys under {Config.ACIC_CONFIG_KEY}.{command_name}: {unknown}"

        if Config.ACIC_CONFIG_KEY_COMMAND_IMPLEMENTER in command_section:
            implementer_name = command_section[Config.ACIC_CONFIG_KEY_COMMAND_IMPLEMENTER].value
        else:
            implementer_name = Config.COMMANDS[command_name]

        command_config = command_section.get(Config.ACIC_CONFIG_KEY_COMMAND_CONFIG) or {}
        assert isinstance(command_config, dict), \
            f"Value of ({Config.ACIC_CONFIG_KEY}.{command_name}.config) must be a mapping"

        if command_name in self.__command_configs:
            existing = self.__command_configs[command_name]
            assert existing.implementer_name == implementer_name, \
                f"Command ({command_name}) failed to update with new config due to new" + \
                f" implementer ({implementer_name}) not matching existing implementer" + \
                f" ({existing.implementer_name})."
            existing.merge_command_config(command_config)
        else:
            self.__command_configs[command_name] = CommandConfig(
                self, command_name, implementer_name, copy.deepcopy(command_config))
