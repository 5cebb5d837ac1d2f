"""
Oracle and invariant suites
"""

from .invariants import InvariantValidator

__all__ = [
    "InvariantValidator",
]
