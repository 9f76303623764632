"""Simulation and numerical-verification toolkit for the reflected stable
process on the punctured real line: exact reflection-chain sampling,
time-resolved trajectory simulation, closed-form constants, singular-integral
quadrature, and Monte Carlo verification of the nonlocal Neumann problem.
"""

__version__ = "0.1.0"
SCHEMA_VERSION = 1
