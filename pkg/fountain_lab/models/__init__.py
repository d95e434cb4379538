"""Pydantic models for config files and result rows."""
