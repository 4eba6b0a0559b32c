"""Multiple kernel clustering with dual noise minimization."""
__version__ = "0.1.0"
