"""Density-functional toolkit for rigid molecules: excluded volumes,
symmetry-adapted kernel projection and a self-consistent moment solver."""

__version__ = "0.1.0"
