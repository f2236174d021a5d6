"""Inconsistent defect label detection for multi-version defect datasets."""

__version__ = "0.1.0"
