"""convolab: a spectral laboratory for stochastic convolutions.

Reproduces, at desk scale, pathwise-uniform convergence rates of time
discretisation schemes for linear stochastic evolution equations with
additive noise, and verifies explicit maximal / moment-inequality constants
by Monte Carlo and exact enumeration.
"""

__version__ = "0.1.0"
