"""Multiparameter bounds and a weak-measurement read-out of beam displacement and tilt."""
from .errors import QmetError

__version__ = "0.1.0"
__all__ = ["QmetError", "__version__"]
