"""Shared utils for dealing with configuration files.
"""

import glob
import os

import yaml


def parse_yaml_or_json_file(yaml_or_json_file):
    """Parse a YAML or JSON config file.

    JSON documents are read as YAML flow collections, so one loader covers both.

    Parameters
    ----------
    yaml_or_json_file : str
        Path to a YAML or JSON file.

    Returns
    -------
    dict or None
        Document parsed from the given file, None for an empty file.

    Raises
    ------
    ValueError
        If the given file can not be parsed as YAML or JSON.
    """
    with open(yaml_or_json_file, 'r') as config_file:
        try:
            return yaml.safe_load(config_file)
        except yaml.YAMLError as error:
            raise ValueError(
                f"Error parsing file ({yaml_or_json_file}) as YAML or JSON: {error}"
            ) from error

def find_config_files(config_dir):
    """
    Lists the regular files below a configuration directory, recursively and sorted so
    repeated loads merge in the same order.

    Parameters
    ----------
    config_dir : str
        Directory to search.

    Returns
    -------
    list of str
        Paths of the files found.
    """
    candidates = glob.glob(os.path.join(config_dir, '**', '*'), recursive=True)
    return sorted(path for path in candidates if os.path.isfile(path))
