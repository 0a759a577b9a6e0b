"""
lerw-lab - Monte Carlo laboratory for loop-erased random walk and radial SLE(2).

This package provides lattice walk samplers, a discretized radial Loewner
evolution, curve/measure metrics and the statistical experiments comparing
loop-erased random walk with SLE(2) in the natural parametrization.
"""

__version__ = "0.1.0"
