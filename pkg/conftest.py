"""Puts the repository root on the path so tests import their helpers as `tests.helpers`."""

import os
import sys

sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
