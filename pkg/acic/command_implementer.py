"""Abstract class for CommandImplementer.
"""

import json
import os
import sys
import textwrap
from abc import ABC, abstractmethod
from contextlib import redirect_stderr, redirect_stdout

from acic.config.config_value import ConfigValue
from acic.problem import build_problem
from acic.utils.dict import unknown_keys
from acic.utils.io import TextIOIndenter
from acic.utils.report import to_builtin, write_csv, write_json


class CommandImplementer(ABC):
    """
    Abstract representation of an ACIC command implementer.

    Parameters
    ----------
    results_dir_path : str
        Path to the directory to write the reports of the command to.
    config : CommandConfig
        Configuration for this command.

    Attributes
    ----------
    __config : CommandConfig
    __problem : ImpulseProblem
    __written_files : list of str
    """

    __TITLE_LENGTH = 80

    def __init__(self, results_dir_path, config):
        self.__results_dir_path = results_dir_path
        self.__config = config
        self.__problem = None
        self.__written_files = []
        super().__init__()

    @property
    def config(self):
        """
        Returns
        -------
        CommandConfig
            Configuration for this command.
        """
        return self.__config

    @property
    def command_name(self):
        """
        Returns
        -------
        str
            Command name implemented by this implementer.
        """
        return self.config.command_name

    @property
    def implementer_name(self):
        """
        Returns
        -------
        str
            Name of this implementer.
        """
        return self.config.implementer_name

    @property
    def results_dir_path(self):
        """
        Returns
        -------
        str
            Directory the reports are written to.
        """
        return self.__results_dir_path

    @property
    def report_file_path(self):
        """OS path to the JSON report of this command.

        Returns
        -------
        str
        """
        return os.path.join(self.__results_dir_path, self.report_file_name())

    @property
    def written_files(self):
        """Files written by this command so far, in order."""
        return list(self.__written_files)

    @property
    def problem(self):
        """The problem of the parent configuration, built on first use.

        Returns
        -------
        ImpulseProblem

        Raises
        ------
        ValueError
            If the problem or schedule configuration is invalid.
        """
        if self.__problem is None:
            parent = self.config.parent_config
            assert parent.problem, \
                "No problem configured, give acic-config.problem or --builtin"
            self.__problem = build_problem(parent.problem, parent.schedule)
        return self.__problem

    @staticmethod
    @abstractmethod
    def command_implementer_config_defaults():
        """
        Getter for the CommandImplementer's configuration defaults.

        Notes
        -----
        These are the lowest precedence configuration values. Their keys are also the
        keys the command accepts.

        Returns
        -------
        dict
            Default values to use for command configuration values.
        """

    @staticmethod
    def required_runtime_command_config_keys():
        """
        Getter for command configuration keys that are required before running the command.

        Returns
        -------
        list of str
        """
        return []

    def report_file_name(self):
        """File name of the JSON report of this command.

        Returns
        -------
        str
        """
        return f"{self.command_name}.json"

    @abstractmethod
    def _run_command(self):
        """Runs the ACIC command implemented by this CommandImplementer.

        Returns
        -------
        dict
            Results of running this command.
        """

    def _validate_runtime_command_config(self, runtime_command_config):
        """
        Validates the given `runtime_command_config` against the required and known
        command configuration keys.

        Raises
        ------
        AssertionError
            If the given `runtime_command_config` is not valid with a message as to why.
        """
        missing_required_config_keys = []
        for required_config_key in self.required_runtime_command_config_keys():
            if runtime_command_config.get(required_config_key) is None:
                missing_required_config_keys.append(required_config_key)

        assert (not missing_required_config_keys), \
            "The runtime command configuration (" + \
            f"{ConfigValue.convert_leaves_to_values(runtime_command_config)}) is missing " + \
            f"the required configuration keys ({missing_required_config_keys})"

        unknown = unknown_keys(
            runtime_command_config,
            list(self.command_implementer_config_defaults()) +
            list(self.required_runtime_command_config_keys()))
        assert not unknown, \
            f"Command ({self.command_name}) does not accept configuration keys {unknown}"

    def run_command(self):
        """
        Wrapper for running the implemented command.

        Returns
        -------
        dict
            Results of the command.
        """
        title = f"{self.command_name} - {self.implementer_name}"
        CommandImplementer.__print_section_title(f"Command Start - {title}")

        CommandImplementer.__print_section_title(
            f"Configuration - {title}",
            div_char="-",
            indent=1
        )
        CommandImplementer.__print_data(
            "Command Implementer Configuration Defaults",
            self.command_implementer_config_defaults()
        )
        CommandImplementer.__print_data(
            "Global Configuration Defaults",
            ConfigValue.convert_leaves_to_values(self.config.global_defaults)
        )
        CommandImplementer.__print_data(
            "Command Configuration",
            ConfigValue.convert_leaves_to_values(self.config.command_config)
        )
        CommandImplementer.__print_data(
            "Command Configuration Runtime Overrides",
            {**self.config.flag_overrides, **self.config.command_config_overrides}
        )

        copy_of_runtime_command_config = self.get_copy_of_runtime_command_config()
        CommandImplementer.__print_data(
            "Runtime Command Configuration",
            ConfigValue.convert_leaves_to_values(copy_of_runtime_command_config)
        )
        self._validate_runtime_command_config(copy_of_runtime_command_config)

        CommandImplementer.__print_section_title(
            f"Standard Out - {title}",
            div_char="-",
            indent=1
        )
        indented_stdout = TextIOIndenter(
            parent_stream=sys.stdout,
            indent_level=2
        )
        indented_stderr = TextIOIndenter(
            parent_stream=sys.stderr,
            indent_level=2
        )
        with redirect_stdout(indented_stdout), redirect_stderr(indented_stderr):
            results = self._run_command()
            self.write_report(results)

        CommandImplementer.__print_section_title(
            f"Results - {title}",
            div_char="-",
            indent=1
        )
        CommandImplementer.__print_data('Report File Path', self.report_file_path)
        CommandImplementer.__print_data('Written Files', self.written_files)
        CommandImplementer.__print_data('Results', results)
        CommandImplementer.__print_section_title(f"Command End - {title}")
        return results

    def write_report(self, results):
        """Writes the results of the command as its JSON report."""
        if results is not None:
            write_json(self.report_file_path, results)

    def write_json_file(self, file_name, data):
        """Writes a JSON file into the results directory.

        Returns
        -------
        str
            Path written.
        """
        path = write_json(os.path.join(self.__results_dir_path, file_name), data)
        self.__written_files.append(path)
        return path

    def write_csv_file(self, file_name, header, rows):
        """Writes a CSV table into the results directory.

        Returns
        -------
        str
            Path written.
        """
        path = write_csv(os.path.join(self.__results_dir_path, file_name), header, rows)
        self.__written_files.append(path)
        return path

    def get_config_value(self, key):
        """Convenience function for self.config.get_config_value.

        Returns
        -------
        str, int, float, dict, list, bool or None
        """
        return self.config.get_config_value(key, self.command_implementer_config_defaults())

    def get_copy_of_runtime_command_config(self):
        """Convenience function for self.config.get_copy_of_runtime_command_config

        Returns
        -------
        dict
        """
        return self.config.get_copy_of_runtime_command_config(
            self.command_implementer_config_defaults())

    @staticmethod
    def __print_section_title(title, div_char="=", indent=0):
        """
        Utility function for pretty printing section title.
        """
        print()
        print()
        CommandImplementer.__print_indented(
            text=div_char * CommandImplementer.__TITLE_LENGTH,
            indent=indent
        )
        CommandImplementer.__print_indented(
            text=title.center(CommandImplementer.__TITLE_LENGTH),
            indent=indent
        )
        CommandImplementer.__print_indented(
            text=div_char * CommandImplementer.__TITLE_LENGTH,
            indent=indent
        )

    @staticmethod
    def __print_data(title, data, indent=2):
        """Utility function for pretty printing data.

        Notes
        -----
        Indent levels are each are 4 spaces wide.
        """
        CommandImplementer.__print_indented(
            text=title,
            indent=indent
        )
        CommandImplementer.__print_indented(
            text=json.dumps(to_builtin(data), indent=4, sort_keys=True),
            indent=indent+1
        )
        print()

    @staticmethod
    def __print_indented(text, indent=0):
        """Prints the given text indented by a given indent level.

        Notes
        -----
        Indent levels are each are 4 spaces wide.
        """
        print(textwrap.indent(
            text=text,
            prefix=" " * (4 * indent)
        ))
