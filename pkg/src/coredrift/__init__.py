"""Drift detection and adaptation for a next-packet-length predictor."""

__version__ = "0.1.0"
