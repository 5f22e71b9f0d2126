"""Line slices of hypersurfaces: moduli, special lines, versality, monodromy, stable limits.

Submodules are imported on demand so that the command line can set BLAS
thread limits before numpy loads.
"""

__version__ = "0.1.0"

__all__ = ["forms", "moduli", "incidence", "tracking", "deform", "monodromy", "permgroups", "stable", "cli"]
