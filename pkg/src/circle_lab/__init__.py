"""Desk-scale circle-method laboratory for discrete k-spherical maximal functions.

Subpackages map onto the computational objects: closed-form exponents,
lattice representation counts and averages, exponential and Gauss sums,
the Farey major/minor arc dissection, oscillatory integrals, and the
main-term multiplier of the approximation formula.
"""

__version__ = "0.1.0"

from circle_lab.errors import CapExceededError, PreconditionError
from circle_lab.exponents import FormParams

__all__ = ["CapExceededError", "FormParams", "PreconditionError", "__version__"]
