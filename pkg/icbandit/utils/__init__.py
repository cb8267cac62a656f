"""Utilities: logging setup and atomic file output."""
