"""Gap probabilities for the Cauchy unitary ensemble and its scaled circular limits."""

from .params import EnsembleParams

__version__ = "0.1.0"

__all__ = ["EnsembleParams", "__version__"]
