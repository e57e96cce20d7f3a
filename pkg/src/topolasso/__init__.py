"""Topology-aware model selection for square-free hierarchical polynomial regression."""

__version__ = "0.1.0"
