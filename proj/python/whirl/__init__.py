"""Residual imitation from human video in a kinematic simulator."""

from ._whirl import *  # noqa: F401,F403
from ._whirl import __doc__  # noqa: F401
