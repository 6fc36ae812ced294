"""Saturated-PMSM sensorless estimation simulator.

Simulates a magnetically saturated permanent-magnet synchronous motor
under high-frequency voltage injection and recovers the rotor position
from current measurements alone: energy-based magnetics, closed-loop
integration, sliding-window current demodulation, nonlinear least-squares
position estimation, and first-order observability analysis.
"""

from pmsmsim._core import *  # noqa: F401,F403
from pmsmsim._core import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
