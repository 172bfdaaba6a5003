"""Depth-guided single-pass radiance-field engine for a parametric face model."""

__version__ = "0.1.0"
