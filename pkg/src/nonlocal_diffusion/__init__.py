"""Solver and verification tools for fully non-local diffusion with memory."""
__version__ = "0.1.0"
