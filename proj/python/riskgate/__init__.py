"""Risk-controlled anomaly decisions for CSP plant telemetry.

Python bindings over the C++ core: synthetic data generation, the
conditional-Gaussian density scorer, baseline and xLTT threshold
calibration, decision metrics and the Monte Carlo coverage harness.
"""

from ._riskgate import *  # noqa: F401,F403
from ._riskgate import __doc__ as _core_doc  # noqa: F401

__version__ = "0.1.0"
