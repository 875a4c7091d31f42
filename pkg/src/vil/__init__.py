"""Numerics for self-similar instability of compactly supported radial vortices."""

from .vortex import VortexParams, VortexProfile, build_vortex

__version__ = "0.1.0"

__all__ = ["VortexParams", "VortexProfile", "build_vortex", "__version__"]
