"""
Shared utils for dealing with dictionaries.
"""

def deep_merge(dest, source, path=None):
    """Deep merges source into dest.

    Parameters
    ----------
    dest : dict
        Dictionary to merge into. Modified in place.
    source : dict
        Dictionary to merge from.
    path : list of str, optional
        Key path of `dest` inside the dictionary being merged, used in error messages.

    Returns
    -------
    dict
        `dest`, after the merge.

    Raises
    ------
    ValueError
        If source and dest hold different leaf values under the same key path.
    """
    if path is None:
        path = []

    for key in source:
        if key in dest:
            if isinstance(dest[key], dict) and isinstance(source[key], dict):
                deep_merge(dest[key], source[key], path + [str(key)])
            elif dest[key] == source[key]:
                pass # same leaf value
            else:
                raise ValueError('Conflict at %s' % '.'.join(path + [str(key)]))
        else:
            dest[key] = source[key]
    return dest

def unknown_keys(given, allowed):
    """Lists the keys of a dictionary that are not in an allowed set.

    Parameters
    ----------
    given : dict
    allowed : iterable of str

    Returns
    -------
    list of str
        Sorted unknown keys.
    """
    allowed = set(allowed)
    return sorted(str(key) for key in given if key not in allowed)
