"""Frank-Wolfe solvers, sparsity lower bounds and random-polytope experiments."""
from . import bounds, fw, geometry, randpoly, statlab
from .rng import make_rng

__version__ = "0.1.0"

__all__ = ["bounds", "fw", "geometry", "randpoly", "statlab", "make_rng", "__version__"]
