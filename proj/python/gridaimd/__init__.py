"""AIMD-based EV charging control on a radial distribution feeder."""

from _gridaimd import *  # noqa: F401,F403
from _gridaimd import __doc__  # noqa: F401

__version__ = "0.1.0"
