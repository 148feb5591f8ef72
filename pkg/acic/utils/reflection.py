"""
Resolving configured implementer names to classes.
"""

import importlib

def split_dotted_name(dotted_name, default_module):
    """Splits `package.module.ClassName` into module and class name.

    A bare class name resolves against `default_module`.

    Returns
    -------
    tuple of (str, str)
        Module name and class name.
    """
    module_name, _, class_name = dotted_name.rpartition('.')
    return (module_name or default_module), class_name

def resolve_dotted_class(dotted_name, default_module):
    """Imports the module named by `dotted_name` and looks up its class.

    Parameters
    ----------
    dotted_name : str
        Class name, optionally prefixed by a dot separated module name.
    default_module : str
        Module used when `dotted_name` carries no module.

    Returns
    -------
    tuple of (str, str, object or None)
        Module name, class name, and the looked up attribute or None if either the module
        or the attribute does not exist.
    """
    module_name, class_name = split_dotted_name(dotted_name, default_module)
    try:
        module = importlib.import_module(module_name)
    except ModuleNotFoundError:
        return module_name, class_name, None

    return module_name, class_name, getattr(module, class_name, None)
