"""
Command-line interface implementations
"""

from .main import main

__all__ = [
    "main",
]
