"""ydvl: a verification laboratory for density-dependent Euler flows on the torus."""

__version__ = "0.1.0"

__all__ = ["__version__"]
