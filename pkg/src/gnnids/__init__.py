"""Graph neural network intrusion detectors over netflow graphs, and the
problem-space attacks used to probe them."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
