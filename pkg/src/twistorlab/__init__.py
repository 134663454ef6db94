"""Pure spinors, almost complex structures and symplectic twistor checks."""
from .kernels import BACKEND

__version__ = "0.1.0"
__all__ = ["BACKEND", "__version__"]
