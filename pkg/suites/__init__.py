# suites/__init__.py
"""Runnable verification suites, one module per --suite name."""
