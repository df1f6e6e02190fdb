"""Effective capacity of a device-to-device link under pathloss-based mode selection."""

__version__ = "0.1.0"
