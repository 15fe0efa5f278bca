"""Semi-stability of quiver representations and simultaneous robust subspace recovery."""

__version__ = "0.1.0"
