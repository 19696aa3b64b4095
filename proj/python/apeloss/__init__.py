"""Pairwise-error ranking loss with analytic gradients (C++ core)."""

from ._apeloss import *  # noqa: F401,F403
from ._apeloss import __doc__  # noqa: F401

__version__ = "0.1.0"
