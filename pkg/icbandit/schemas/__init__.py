"""Validated input schemas for experiment configuration files."""
