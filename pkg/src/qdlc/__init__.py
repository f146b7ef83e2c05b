"""Resource-aware compiler for loading classical vectors into quantum circuits."""

__version__ = "0.1.0"
