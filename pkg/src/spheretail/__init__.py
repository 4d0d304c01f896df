"""Tail comparison between norms of sums of sphere-uniform vectors and Gaussians."""

__version__ = "0.1.0"
