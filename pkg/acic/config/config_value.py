"""A leaf of an ACIC configuration together with where it came from.
"""

import copy

class ConfigValue:
    """One configuration value and its origin.

    Parameters
    ----------
    value : any
        The value.
    parent_source : str file path or dict, optional
        File the value was read from, or the dict it was given in.
    path_parts : list, optional
        Keys and list indexes leading to the value.
    """

    def __init__(self, value, parent_source=None, path_parts=None):
        self.__value = value
        self.__parent_source = parent_source
        self.__path_parts = list(path_parts) if path_parts is not None else []

    @property
    def value(self):
        """Copy of the value."""
        return copy.deepcopy(self.__value)

    @property
    def path_parts(self):
        """Copy of the keys and indexes leading to the value."""
        return list(self.__path_parts)

    @property
    def path(self):
        """Dotted key path, used in validation messages.

        Returns
        -------
        str
        """
        return '.'.join(str(part) for part in self.__path_parts)

    @property
    def parent_source(self):
        """Copy of the file path or dict the value came from."""
        return copy.deepcopy(self.__parent_source)

    def __eq__(self, other):
        # origin does not take part in equality
        return isinstance(other, ConfigValue) and self.value == other.value

    def __hash__(self):
        return hash(self.path)

    def __repr__(self):
        return f"ConfigValue({self.path}={self.__value!r})"

    @staticmethod
    def convert_leaves_to_config_values(values, parent_source=None, path_parts=None):
        """Wraps every leaf of nested dicts and lists into a ConfigValue.

        Parameters
        ----------
        values : dict, list, ConfigValue, None or any
        parent_source : str file path or dict, optional
        path_parts : list, optional
            Path of `values` itself.

        Returns
        -------
        dict, list, ConfigValue or None
            New containers with wrapped leaves. None stays None and existing ConfigValues
            are kept as they are.
        """
        path_parts = [] if path_parts is None else list(path_parts)

        if isinstance(values, dict):
            return {
                key: ConfigValue.convert_leaves_to_config_values(
                    child, parent_source, path_parts + [key])
                for key, child in values.items()
            }
        if isinstance(values, list):
            return [
                ConfigValue.convert_leaves_to_config_values(
                    child, parent_source, path_parts + [index])
                for index, child in enumerate(values)
            ]
        if values is None or isinstance(values, ConfigValue):
            return values
        return ConfigValue(values, parent_source, path_parts)

    @staticmethod
    def convert_leaves_to_values(values):
        """Replaces every ConfigValue leaf of nested dicts and lists by its value.

        Returns
        -------
        dict, list or any
            New containers with plain leaves.

        See Also
        --------
        ConfigValue.convert_leaves_to_config_values
        """
        if isinstance(values, dict):
            return {key: ConfigValue.convert_leaves_to_values(child)
                    for key, child in values.items()}
        if isinstance(values, list):
            return [ConfigValue.convert_leaves_to_values(child) for child in values]
        if isinstance(values, ConfigValue):
            return values.value
        return values
