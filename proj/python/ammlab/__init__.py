"""Constant-product AMM execution laboratory: pool mechanics, market
simulation, closed-form and PDE-based execution strategies, estimation and
backtesting."""

from ._ammlab import *  # noqa: F401,F403
from ._ammlab import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
