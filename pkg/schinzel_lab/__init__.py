"""Experimental toolkit for prime values of polynomial tuples and conic bundles."""

__version__ = "0.1.0"
