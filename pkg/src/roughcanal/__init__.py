"""Two-scale spectral toolkit for thin rough water layers in canals."""

__version__ = "0.1.0"
