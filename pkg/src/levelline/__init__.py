"""Level lines of the Gaussian free field with piecewise boundary data, driven
by SLE_4 with force points."""

from .boundary import LAMBDA

__all__ = ["LAMBDA"]
__version__ = "0.1.0"
