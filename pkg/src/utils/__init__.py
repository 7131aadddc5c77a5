"""Utility helpers shared by the CLI and the services."""

__all__ = ["digest", "paths"]
