"""Simulation and limit-theory checks for the two-parent Moran copy-number model."""

__version__ = "0.1.0"
