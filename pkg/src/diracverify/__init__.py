"""Numerical verification of Dirac structures, IM forms and their reduction."""

from .report import CheckReport

__all__ = ["CheckReport"]
__version__ = "0.1.0"
