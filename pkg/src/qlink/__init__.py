"""Simulation toolkit for entanglement links between spin-qubit cores.

Modules: ``qmath`` (states and measures), ``lindblad`` (open-system engine),
``cavity`` (resonator-mediated raw pairs), ``purification`` (recurrence
distillation), ``shuttle`` (bucket-brigade spin shuttling), ``esd``
(error suppression by derangement) and ``experiment`` with ``cli``.
"""
from .errors import (
    ConfigurationError, DimensionError, InvalidStateError, NotPurifiableError, NumericalError, QlinkError,
    TraceDriftError,
)

__version__ = "0.1.0"

__all__ = ["ConfigurationError", "DimensionError", "InvalidStateError", "NotPurifiableError", "NumericalError",
           "QlinkError", "TraceDriftError", "__version__"]
