"""Constrained-zonotope set calculus, descriptor-system state estimation and
active fault diagnosis."""

__version__ = "0.1.0"
