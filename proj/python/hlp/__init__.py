"""Hybrid Lie-Poisson reduction on SE(2): group operations, hybrid execution and the forward-backward solver."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
