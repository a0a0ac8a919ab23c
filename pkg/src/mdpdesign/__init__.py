"""Integrated design and operations: mixed-integer design with scenario MDPs."""

__version__ = "0.1.0"
