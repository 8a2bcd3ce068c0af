"""Numerical verification engine for fourth-power moments of automorphic L-functions of prime level."""

__version__ = "0.1.0"
