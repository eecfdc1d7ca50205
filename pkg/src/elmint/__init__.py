"""elmint: near-symplectic integration of analytic and learned Lagrangian densities."""

__version__ = "0.1.0"
