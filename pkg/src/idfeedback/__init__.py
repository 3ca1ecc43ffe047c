"""Feedback codes for adversarial substitution and insertion-deletion channels."""

__version__ = "0.1.0"
