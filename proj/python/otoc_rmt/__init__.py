"""OTOC simulator and analytic engine for a locally-GOE banded random-matrix ensemble."""

from ._core import *  # noqa: F401,F403
from ._core import __doc__  # noqa: F401
