"""
Tests for the CL-RA simulator package
"""
