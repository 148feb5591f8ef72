"""
acic.command_implementers
"""

from .check import Check
from .oracle import Oracle
from .simulate import Simulate
from .solve import Solve
from .sweep import Sweep

__all__ = [
    'check',
    'oracle',
    'simulate',
    'solve',
    'sweep'
]
