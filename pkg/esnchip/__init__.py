"""Fixed-point echo state network chip simulator."""

__version__ = "0.1.0"
