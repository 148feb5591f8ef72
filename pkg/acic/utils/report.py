"""Shared utils for writing reports.

JSON reports are written with sorted keys and 2 space indentation, CSV tables with 17
significant digits, and neither carries timestamps, so identical inputs produce
byte-identical files.
"""

import csv
import json
import math
import os

import numpy as np

CSV_FLOAT_FORMAT = '%.17g'


def to_builtin(value):
    """Converts numpy scalars and arrays (recursively through dicts, lists and tuples) into
    plain Python values that `json` can serialize.

    Non-finite floats become None.

    Parameters
    ----------
    value : object

    Returns
    -------
    object
    """
    if isinstance(value, dict):
        return {str(key): to_builtin(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(item) for item in value]
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value

def format_csv_value(value):
    """Formats one CSV cell.

    Parameters
    ----------
    value : object

    Returns
    -------
    str
    """
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return CSV_FLOAT_FORMAT % float(value)
    return str(value)

def write_json(path, data):
    """Writes a JSON report.

    Parameters
    ----------
    path : str
    data : dict

    Returns
    -------
    str
        The path written.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w') as report_file:
        json.dump(to_builtin(data), report_file, sort_keys=True, indent=2)
        report_file.write('\n')
    return path

def write_csv(path, header, rows):
    """Writes a CSV table.

    Parameters
    ----------
    path : str
    header : list of str
    rows : iterable of sequences

    Returns
    -------
    str
        The path written.
    """
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, 'w', newline='') as table_file:
        writer = csv.writer(table_file, lineterminator='\n')
        writer.writerow([format_csv_value(column) for column in header])
        for row in rows:
            writer.writerow([format_csv_value(value) for value in row])
    return path
