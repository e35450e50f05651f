"""Unary classical mechanics: operator algebra, Gibbs states, measurement and Bell analysis."""

__version__ = "0.1.0"
