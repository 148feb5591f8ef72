"""
Factory for running ACIC commands.
"""

from acic.command_implementer import CommandImplementer
from acic.config.config import Config
from acic.exceptions import ACICException
from acic.utils.reflection import resolve_dotted_class

class ACICFactory:
    """
    Enables the running of ACIC commands via ACIC command implementers.

    Parameters
    ----------
    config : Config, dict, list, str (file or directory)
        A Config object,
        a dictionary that is a valid ACIC configuration,
        a string that is a path to a YAML or JSON file that is
        a valid ACIC configuration,
        a string that is a path to a directory containing one or more
        files that are valid YAML or JSON files that are valid
        configurations,
        or a list of any of the former.
    results_dir_path : str, optional
        Path to the folder for commands to write their reports to.
        Default: acic-results

    Raises
    ------
    ValueError
        If given config is not of expected type.
    AssertionError
        If given config contains any invalid ACIC configurations.
    """

    __DEFAULT_MODULE = 'acic.command_implementers'

    def __init__(self, config, results_dir_path='acic-results'):
        if isinstance(config, Config):
            self.__config = config
        else:
            self.__config = Config(config)

        self.results_dir_path = results_dir_path

    @property
    def config(self):
        """
        Returns
        -------
        Config
            Configuration used by this factory.
        """
        return self.__config

    def run_command(self, command_name):
        """
        Run the given command.

        Parameters
        ----------
        command_name : str
            ACIC command to run.

        Returns
        -------
        dict
            Results of the command.

        Raises
        ------
        ACICException
            If the implementer class can not be loaded or is not a CommandImplementer.
        """
        command_config = self.config.get_command_config(command_name)
        implementer_class = ACICFactory.__get_command_implementer_class(
            command_name,
            command_config.implementer_name)

        command = implementer_class(
            results_dir_path=self.results_dir_path,
            config=command_config
        )
        return command.run_command()

    @staticmethod
    def __get_command_implementer_class(command_name, implementer_name):
        """Given a command name and an implementer name dynamically loads the Class.

        Parameters
        ----------
        command_name : str
            Name of the command, selects the module `acic.command_implementers.{command_name}`
            when the implementer name has no module path.
        implementer_name : str
            Class name, optionally prefixed by a dot separated module name.

        Returns
        -------
        CommandImplementer
            Dynamically loaded subclass of CommandImplementer.

        Raises
        ------
        ACICException
            If could not find class to load
            If loaded class is not a subclass of CommandImplementer
        """
        default_module = f"{ACICFactory.__DEFAULT_MODULE}.{command_name.replace('-', '_')}"
        module_name, class_name, clazz = resolve_dotted_class(implementer_name, default_module)
        if clazz is None:
            raise ACICException(
                f"Could not dynamically load command ({command_name}) implementer" +
                f" ({implementer_name}) from module ({module_name})" +
                f" with class name ({class_name})"
            )
        if not (isinstance(clazz, type) and issubclass(clazz, CommandImplementer)):
            raise ACICException(
                f"Command ({command_name}) is configured to use implementer" +
                f" ({implementer_name}) from module ({module_name}) with" +
                f" class name ({class_name}), and dynamically loads as class ({clazz})" +
                f" which is not a subclass of required parent class ({CommandImplementer}).")

        return clazz
