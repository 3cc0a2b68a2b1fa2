"""Qualification checks, KKT certification and exact penalization for
non-Lipschitz nonlinear programs."""

__version__ = "0.1.0"
