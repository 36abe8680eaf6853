"""Subdivision-based discrete differential forms on triangle meshes."""

__version__ = "0.1.0"
