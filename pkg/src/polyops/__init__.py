"""
polyops: simplifying matrices by polynomials.

Finite complex matrices stand in for operators.  The package computes
multicentric functional calculus, monic norm minimisation and capacity
profiles, growth functions of resolvents, Riesz projections on circles and
lemniscates, polynomial class searches and 2 x 2 block-triangular analysis.
"""

__version__ = '0.1.0'

from .errors import (ClassError, ConditioningError, ContourError, ContractError,  
                     DecompositionError, DomainError, InputError, LemniscateError,
                     NumericalError, PolyopsError, ResourceError, SelectionError,
                     SingularityError, VerificationError)
from .numkernel import MonicPoly, eigenvalues, op_norm, poly_eval  

__all__ = ['ClassError', 'ConditioningError', 'ContourError', 'ContractError',
           'DecompositionError', 'DomainError', 'InputError', 'LemniscateError',
           'NumericalError', 'PolyopsError', 'ResourceError', 'SelectionError',
           'SingularityError', 'VerificationError', 'MonicPoly', 'eigenvalues',
           'op_norm', 'poly_eval', '__version__']
