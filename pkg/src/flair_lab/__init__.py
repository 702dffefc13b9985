"""Desk-scale variational posterior sampling with flow-matching priors."""

__version__ = "0.1.0"
