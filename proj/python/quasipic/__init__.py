"""Scaled Vlasov-Poisson kinetics on the torus.

Thin re-export of the compiled module: spectral Poisson solves,
particle sampling and deposition, exact and entropic Wasserstein
distances, and the stability/support envelope algebra.
"""

from ._quasipic import *  # noqa: F401,F403
from ._quasipic import __version__  # noqa: F401
