"""Component-based PDE evolution testbed.

A small flesh (registry + scheduler) coordinates interchangeable drivers
(unigrid domain decomposition, factor-2 mesh refinement with subcycling),
method-of-lines integrators, stand-in physics components, strategy-based
parallel I/O with exact restart, a live HTTP monitor, and a weak-scaling
benchmark harness.
"""

from .flesh import Flesh, ParameterError, ScheduleError
from .simulation import Simulator

__version__ = "0.1.0"

__all__ = ["Flesh", "ParameterError", "ScheduleError", "Simulator",
           "__version__"]
