"""Numerical checks for the Kahler-pullback energy E(phi) = 1/2 ||phi^* omega||^2."""

__version__ = "0.1.0"
