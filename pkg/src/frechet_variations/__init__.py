"""Top-level package for frechet_variations."""

__all__ = ["__version__"]

__version__ = "0.1.0"
