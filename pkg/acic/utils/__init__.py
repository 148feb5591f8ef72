"""Useful utilities.
"""

__all__ = [
    'dict',
    'file',
    'io',
    'reflection',
    'report'
]
