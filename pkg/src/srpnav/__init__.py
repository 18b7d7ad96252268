"""CLF-CBF-QP navigation with obstacle shape reconstruction."""

__version__ = "0.1.0"
